#include "fracvisc/inversion.hpp"

#include <chrono>
#include <cmath>

#include "fracvisc/errors.hpp"

namespace fracvisc {

InverseSetup make_inverse_setup(ProblemSpec spec, ObservationMask mask, SpaceTimeField data,
                                double reg_weight)
{
    spec.validate();
    if (!(reg_weight >= 0.0))
        throw InvalidArgument("regularization weight must be non-negative");
    if (data.steps() != spec.grid.size() || data.ndof() != spec.mesh->num_nodes())
        throw InvalidArgument("data do not match the problem grid");

    InverseSetup setup;
    setup.ops = std::make_shared<const SteppingOperators>(build_stepping_operators(spec));
    setup.obs_mass = assemble_observation_mass(*spec.mesh, mask);
    setup.obs_mask = std::make_shared<const ObservationMask>(std::move(mask));
    setup.full_mass = setup.ops->mass;
    setup.data = std::move(data);
    setup.reg_weight = reg_weight;
    setup.spec = std::move(spec);
    return setup;
}

CostEvaluation evaluate_cost(const InverseSetup& setup, const Vec& q)
{
    if (q.size() != setup.spec.mesh->num_nodes())
        throw InvalidArgument("source vector does not match the mesh");
    ProblemSpec spec = setup.spec;
    spec.q = q;

    CostEvaluation out;
    out.state = solve_forward(spec, *setup.ops);
    SpaceTimeField residual = out.state;
    residual.data() -= setup.data.data();
    out.misfit = 0.5 * space_time_inner(residual, setup.obs_mass, residual, spec.grid);
    out.regularization = 0.5 * setup.reg_weight * mass_inner(setup.full_mass, q, q);
    out.cost = out.misfit + out.regularization;
    return out;
}

Vec evaluate_gradient(const InverseSetup& setup, const Vec& q, const SpaceTimeField& state)
{
    if (state.steps() != setup.data.steps() || state.ndof() != setup.data.ndof())
        throw InvalidArgument("state does not match the data");
    SpaceTimeField residual = state;
    residual.data() -= setup.data.data();
    const SpaceTimeField v = solve_adjoint(setup.spec, *setup.ops, residual, setup.obs_mass);
    return adjoint_time_integral(v, setup.spec.p, setup.spec.grid.tau) + setup.reg_weight * q;
}

Vec pr_direction(const Vec& grad, const Vec& grad_prev, const Vec& dir_prev, const SpMat& mass)
{
    const double denom = mass_inner(mass, grad_prev, grad_prev);
    if (!(denom > 0.0))
        throw InvalidArgument("previous gradient vanishes; the iteration should have stopped");
    const double zeta = mass_inner(mass, grad, grad - grad_prev) / denom;
    Vec dir = -grad + zeta * dir_prev;
    if (mass_inner(mass, dir, grad) >= 0.0)
        dir = -grad;
    return dir;
}

void StopCriteria::validate() const
{
    if (!(grad_tol > 0.0) || max_iter < 0 || !(initial_step > 0.0) || max_backtracks < 1)
        throw InvalidArgument("stopping criteria must be positive");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0) || !(backtrack_factor > 0.0 && backtrack_factor < 1.0))
        throw InvalidArgument("Armijo constants must lie in (0,1)");
}

double exact_step(const InverseSetup& setup, const Vec& dir, const Vec& grad)
{
    ProblemSpec spec = setup.spec;
    spec.q = dir;
    spec.u0 = Vec::Zero(dir.size());
    spec.u1 = Vec::Zero(dir.size());
    const SpaceTimeField ld = solve_forward(spec, *setup.ops);
    const double curvature = space_time_inner(ld, setup.obs_mass, ld, spec.grid) +
                             setup.reg_weight * mass_inner(setup.full_mass, dir, dir);
    if (!(curvature > 0.0))
        throw NumericFailure("cost has no curvature along the search direction");
    return -mass_inner(setup.full_mass, grad, dir) / curvature;
}

LineSearchResult armijo_search(const InverseSetup& setup, const Vec& q, const Vec& dir, const Vec& grad,
                               double cost, const StopCriteria& crit)
{
    const double slope = mass_inner(setup.full_mass, grad, dir);
    if (!(slope < 0.0))
        throw InvalidArgument("search direction is not a descent direction");

    double step = crit.quadratic_step ? exact_step(setup, dir, grad) : crit.initial_step;
    for (int m = 0; m <= crit.max_backtracks; ++m) {
        Vec trial = q + step * dir;
        CostEvaluation eval = evaluate_cost(setup, trial);
        if (eval.cost <= cost + crit.armijo_c1 * step * slope)
            return {step, std::move(trial), std::move(eval), m};
        step *= crit.backtrack_factor;
    }
    throw LineSearchFailure("no sufficient decrease after " + std::to_string(crit.max_backtracks) +
                            " backtracks");
}

std::string to_string(StopReason reason)
{
    switch (reason) {
    case StopReason::GradientTolerance:
        return "gradient_tolerance";
    case StopReason::MaxIterations:
        return "max_iterations";
    case StopReason::LineSearchFailure:
        return "line_search_failure";
    }
    return "unknown";
}

Reconstruction reconstruct(const InverseSetup& setup, const Vec& q0, const StopCriteria& crit)
{
    crit.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(clock::now() - start).count();
    };

    CgState st;
    st.q = q0;
    CostEvaluation eval = evaluate_cost(setup, st.q);

    for (;;) {
        st.grad = evaluate_gradient(setup, st.q, eval.state);
        const double gnorm = mass_norm(setup.full_mass, st.grad);
        st.cost_history.push_back(eval.cost);
        st.grad_norm_history.push_back(gnorm);
        st.wall_time_ms.push_back(elapsed_ms());

        if (gnorm < crit.grad_tol) {
            st.reason = StopReason::GradientTolerance;
            break;
        }
        if (st.k >= crit.max_iter) {
            st.reason = StopReason::MaxIterations;
            break;
        }

        const bool steepest = st.k == 0;
        st.direction = steepest ? Vec(-st.grad) : pr_direction(st.grad, st.grad_prev, st.direction, setup.full_mass);

        LineSearchResult ls;
        try {
            ls = armijo_search(setup, st.q, st.direction, st.grad, eval.cost, crit);
        } catch (const LineSearchFailure& e) {
            const bool was_steepest = steepest || (st.direction + st.grad).norm() == 0.0;
            if (was_steepest) {
                st.reason = StopReason::LineSearchFailure;
                st.message = e.what();
                break;
            }
            st.direction = -st.grad;
            try {
                ls = armijo_search(setup, st.q, st.direction, st.grad, eval.cost, crit);
            } catch (const LineSearchFailure& e2) {
                st.reason = StopReason::LineSearchFailure;
                st.message = e2.what();
                break;
            }
        }

        st.step_history.push_back(ls.step);
        st.q = std::move(ls.q_next);
        eval = std::move(ls.next);
        st.grad_prev = st.grad;
        ++st.k;
    }
    st.step_history.push_back(0.0);
    return {st.q, std::move(st)};
}

}  // namespace fracvisc
