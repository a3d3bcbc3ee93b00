#include "fracvisc/solver.hpp"

#include <cmath>
#include <string>

#include "fracvisc/errors.hpp"

namespace fracvisc {

void ProblemSpec::validate() const
{
    if (!mesh)
        throw InvalidArgument("problem has no mesh");
    if (grid.N < 2 || static_cast<int>(grid.nodes.size()) != grid.N + 1)
        throw InvalidArgument("problem has no valid time grid");
    if (static_cast<int>(p.size()) != grid.N + 1)
        throw InvalidArgument("time signal needs N+1 samples, got " + std::to_string(p.size()));
    const auto n = static_cast<Eigen::Index>(mesh->num_nodes());
    if (q.size() != n || u0.size() != n || u1.size() != n)
        throw InvalidArgument("source or initial data do not match the mesh");
}

double SteppingOperators::frac_scale() const
{
    return std::pow(grid.tau, -gl.alpha().value());
}

SteppingOperators build_stepping_operators(const ProblemSpec& spec, SolveMode mode)
{
    spec.validate();
    const Mesh& mesh = *spec.mesh;

    SteppingOperators ops{
        .mass = assemble_weighted_mass(mesh, constant_field(1.0)),
        .mass_eta = assemble_weighted_mass(mesh, spec.eta),
        .mass_mu = assemble_weighted_mass(mesh, spec.mu),
        .stiffness = assemble_stiffness(mesh, spec.elliptic),
        .system = {},
        .factor = nullptr,
        .gl = gl_weights(spec.alpha, spec.grid.N),
        .grid = spec.grid,
    };
    ops.system = ops.inv_tau2() * ops.mass_eta + (ops.frac_scale() * ops.gl[0]) * ops.mass_mu + ops.stiffness;
    ops.system.makeCompressed();
    ops.factor = std::make_shared<const LinearSolver>(ops.system, mode);
    return ops;
}

SpaceTimeField march(const SteppingOperators& ops, const Vec& u0, const Vec& u1,
                     const LoadFunction& load, const MarchOptions& options)
{
    const int N = ops.grid.N;
    const auto ndof = ops.system.rows();
    if (u0.size() != ndof || u1.size() != ndof)
        throw InvalidArgument("initial rows do not match the system size");
    if (options.history_window && *options.history_window < 1)
        throw InvalidArgument("history window must be at least 1");

    SpaceTimeField u(N + 1, static_cast<int>(ndof));
    u.step(0) = u0;
    u.step(1) = u1;

    const double inv_tau2 = ops.inv_tau2();
    const double frac = ops.frac_scale();
    Vec history(ndof);
    Vec rhs(ndof);
    Vec inertia(ndof);
    for (int n = 2; n <= N; ++n) {
        const int kmax = options.history_window ? std::min(n, *options.history_window) : n;
        history.setZero();
        for (int k = 1; k <= kmax; ++k)
            history.noalias() += ops.gl[k] * u.step(n - k);

        inertia = 2.0 * u.step(n - 1) - u.step(n - 2);
        rhs.setZero();
        load(n, rhs);
        if (options.transpose) {
            rhs.noalias() += inv_tau2 * (ops.mass_eta.transpose() * inertia);
            rhs.noalias() -= frac * (ops.mass_mu.transpose() * history);
        } else {
            rhs.noalias() += inv_tau2 * (ops.mass_eta * inertia);
            rhs.noalias() -= frac * (ops.mass_mu * history);
        }

        if (!rhs.allFinite())
            throw NumericFailure("non-finite right-hand side at time step " + std::to_string(n));
        Vec next;
        try {
            if (options.refactor_each_step) {
                const LinearSolver fresh(ops.system, ops.factor->mode());
                next = options.transpose ? fresh.solve_transpose(rhs) : fresh.solve(rhs);
            } else {
                next = options.transpose ? ops.factor->solve_transpose(rhs) : ops.factor->solve(rhs);
            }
        } catch (const NumericFailure& e) {
            throw NumericFailure(std::string(e.what()) + " at time step " + std::to_string(n));
        }
        if (!next.allFinite())
            throw NumericFailure("non-finite solution at time step " + std::to_string(n));
        u.step(n) = next;
    }
    return u;
}

SpaceTimeField solve_forward(const ProblemSpec& spec, const SteppingOperators& ops,
                             const MarchOptions& options)
{
    spec.validate();
    if (ops.grid.N != spec.grid.N || ops.system.rows() != spec.mesh->num_nodes())
        throw InvalidArgument("stepping operators were built for a different problem");

    // u0 and u1 are P1 already, so their Ritz projections are themselves.
    const Vec first = spec.u0 + spec.grid.tau * spec.u1;
    const Vec load = ops.mass * spec.q;
    return march(ops, spec.u0, first,
                 [&](int n, Vec& rhs) { rhs.noalias() += spec.p[n] * load; }, options);
}

SpaceTimeField solve_forward(const ProblemSpec& spec)
{
    return solve_forward(spec, build_stepping_operators(spec));
}

SpaceTimeField solve_adjoint(const ProblemSpec& spec, const SteppingOperators& ops,
                             const SpaceTimeField& residual, const SpMat& obs_mass)
{
    const int N = spec.grid.N;
    const auto ndof = spec.mesh->num_nodes();
    if (residual.steps() != N + 1 || residual.ndof() != ndof)
        throw InvalidArgument("residual does not match the problem grid");
    if (obs_mass.rows() != ndof || obs_mass.cols() != ndof)
        throw InvalidArgument("observation mass does not match the mesh");

    const auto c = trapezoid_weights(spec.grid);
    const double tau = spec.grid.tau;
    const Vec zero = Vec::Zero(ndof);
    MarchOptions options;
    options.transpose = true;
    const SpaceTimeField reversed = march(
        ops, zero, zero,
        [&](int m, Vec& rhs) {
            const int n = N - m + 2;
            rhs.noalias() += (c[n] / tau) * (obs_mass * residual.step(n));
        },
        options);

    SpaceTimeField v(N + 1, ndof);
    for (int n = 0; n <= N; ++n)
        v.step(n) = reversed.step(N - n);
    return v;
}

Vec adjoint_time_integral(const SpaceTimeField& adjoint, std::span<const double> p, double tau)
{
    const int N = adjoint.steps() - 1;
    if (static_cast<int>(p.size()) != N + 1)
        throw InvalidArgument("time signal does not match the adjoint field");
    Vec out = Vec::Zero(adjoint.ndof());
    for (int j = 2; j <= N; ++j)
        out.noalias() += (tau * p[j]) * adjoint.step(j - 2);
    return out;
}

double space_time_inner(const SpaceTimeField& a, const SpMat& mass, const SpaceTimeField& b,
                        const TimeGrid& grid)
{
    if (a.steps() != grid.size() || b.steps() != grid.size() || a.ndof() != b.ndof())
        throw InvalidArgument("space-time fields do not match");
    const auto c = trapezoid_weights(grid);
    double s = 0.0;
    for (int n = 0; n < grid.size(); ++n)
        s += c[n] * a.step(n).dot(mass * b.step(n));
    return s;
}

}  // namespace fracvisc
