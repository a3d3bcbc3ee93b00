#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "fracvisc/errors.hpp"
#include "fracvisc/harness.hpp"
#include "fracvisc/inversion.hpp"
#include "support.hpp"

using namespace fracvisc;
using fracvisc::testing::random_vector;

namespace {

struct Baseline {
    ExperimentConfig cfg;
    SyntheticData data;
    InverseSetup setup;
};

Baseline noiseless(double reg_weight, int n = 20, int N = 20)
{
    Baseline b;
    b.cfg.nx = b.cfg.ny = n;
    b.cfg.steps = N;
    if (n < 20)
        b.cfg.obs_margin = 0.25;
    b.data = generate_data(b.cfg);
    ProblemSpec spec = make_problem(b.cfg, b.data.mesh);
    b.setup = make_inverse_setup(std::move(spec), frame_mask(*b.data.mesh, b.cfg.obs_margin), b.data.clean, reg_weight);
    return b;
}

}  // namespace

TEST(Cost, ExactDataLeavesRegularizationOnly)
{
    const Baseline b = noiseless(1e-3, 8, 8);
    const CostEvaluation e = evaluate_cost(b.setup, b.data.q_true);
    EXPECT_LT(e.misfit, 1e-20);
    EXPECT_NEAR(e.cost, 0.5e-3 * mass_inner(b.setup.full_mass, b.data.q_true, b.data.q_true), 1e-15);
}

TEST(Cost, ZeroSourceGivesHalfDataNorm)
{
    const Baseline b = noiseless(0.0, 8, 8);
    const CostEvaluation e = evaluate_cost(b.setup, Vec::Zero(b.data.q_true.size()));
    // independent pairing: element-masked mass from scratch and explicit trapezoid
    const ObservationMask mask = frame_mask(*b.data.mesh, b.cfg.obs_margin);
    const SpMat M0 = assemble_observation_mass(*b.data.mesh, mask);
    const auto c = trapezoid_weights(b.data.grid);
    double ref = 0.0;
    for (int n = 0; n < b.data.clean.steps(); ++n) {
        const Vec un = b.data.clean.step(n);
        ref += 0.5 * c[n] * un.dot(M0 * un);
    }
    EXPECT_NEAR(e.cost, ref, 1e-12 * ref);
    EXPECT_EQ(e.regularization, 0.0);
}

TEST(Cost, RejectsWrongSize)
{
    const Baseline b = noiseless(0.0, 4, 4);
    EXPECT_THROW(evaluate_cost(b.setup, Vec::Zero(3)), InvalidArgument);
    EXPECT_THROW(make_inverse_setup(b.setup.spec, frame_mask(*b.data.mesh, 0.1), b.data.clean, -1.0), InvalidArgument);
}

TEST(Gradient, VanishesAtExactDataWithoutRegularization)
{
    const Baseline b = noiseless(0.0, 6, 8);
    const CostEvaluation e = evaluate_cost(b.setup, b.data.q_true);
    const Vec g = evaluate_gradient(b.setup, b.data.q_true, e.state);
    EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradient, RegularizationOnlyPairing)
{
    const double beta = 0.37;
    const Baseline b = noiseless(beta, 6, 8);
    const Vec& q = b.data.q_true;
    const CostEvaluation e = evaluate_cost(b.setup, q);
    const Vec g = evaluate_gradient(b.setup, q, e.state);
    EXPECT_NEAR(mass_inner(b.setup.full_mass, g, q), beta * mass_inner(b.setup.full_mass, q, q), 1e-12);
}

TEST(Gradient, MatchesCentralDifferences)
{
    std::mt19937_64 rng(21);
    const InverseSetup coarse = fracvisc::testing::small_setup(4, 8, 2);
    for (int i = 0; i < 3; ++i)
        EXPECT_LE(fracvisc::testing::directional_check(coarse, rng).rel_diff, 0.05);
    const InverseSetup fine = fracvisc::testing::small_setup(8, 16, 3);
    for (int i = 0; i < 3; ++i)
        EXPECT_LE(fracvisc::testing::directional_check(fine, rng).rel_diff, 0.015);
}

TEST(Cost, ExactlyQuadraticAlongLines)
{
    std::mt19937_64 rng(8);
    const InverseSetup setup = fracvisc::testing::small_setup(6, 10, 4, 1e-2);
    const auto n = setup.spec.mesh->num_nodes();
    const Vec q = random_vector(n, rng);
    const Vec dq = random_vector(n, rng);
    const double ts[4] = {-1.0, 0.0, 1.0, 2.0};
    Eigen::Matrix<double, 4, 3> V;
    Eigen::Vector4d J;
    for (int i = 0; i < 4; ++i) {
        V.row(i) << 1.0, ts[i], ts[i] * ts[i];
        J[i] = evaluate_cost(setup, q + ts[i] * dq).cost;
    }
    const Eigen::Vector3d coef = V.colPivHouseholderQr().solve(J);
    EXPECT_LT((V * coef - J).norm(), 1e-8 * J.norm());
    EXPECT_GT(coef[2], 0.0);
}

TEST(PolakRibiere, EqualGradientsGiveSteepestDescent)
{
    std::mt19937_64 rng(1);
    const Baseline b = noiseless(0.0, 4, 4);
    const auto n = b.data.q_true.size();
    const Vec g = random_vector(n, rng);
    const Vec d = pr_direction(g, g, random_vector(n, rng), b.setup.full_mass);
    EXPECT_LT((d + g).norm(), 1e-15);
}

TEST(PolakRibiere, OrthogonalGradientsGiveNormRatio)
{
    std::mt19937_64 rng(2);
    const Baseline b = noiseless(0.0, 4, 4);
    const SpMat& M = b.setup.full_mass;
    const auto n = b.data.q_true.size();
    const Vec gp = random_vector(n, rng);
    Vec g = random_vector(n, rng);
    g -= (mass_inner(M, g, gp) / mass_inner(M, gp, gp)) * gp;
    ASSERT_LT(std::abs(mass_inner(M, g, gp)), 1e-14);
    const Vec dprev = -gp;
    const Vec d = pr_direction(g, gp, dprev, M);
    const double zeta = mass_inner(M, g, g) / mass_inner(M, gp, gp);
    EXPECT_LT((d - (-g + zeta * dprev)).norm(), 1e-12);
}

TEST(PolakRibiere, ResetsNonDescentDirection)
{
    std::mt19937_64 rng(4);
    const Baseline b = noiseless(0.0, 4, 4);
    const SpMat& M = b.setup.full_mass;
    const auto n = b.data.q_true.size();
    const Vec g = random_vector(n, rng);
    const Vec gp = -g;  // ζ = 2
    const Vec d = pr_direction(g, gp, 10.0 * g, M);
    EXPECT_LT((d + g).norm(), 1e-15);
    EXPECT_THROW(pr_direction(g, Vec::Zero(n), g, M), InvalidArgument);
}

TEST(Armijo, AcceptsSufficientDecreaseNearExactStep)
{
    const Baseline b = noiseless(1e-4, 8, 10);
    const Vec q = Vec::Ones(b.data.q_true.size());
    const CostEvaluation e = evaluate_cost(b.setup, q);
    const Vec g = evaluate_gradient(b.setup, q, e.state);
    const Vec d = -g;
    StopCriteria crit;
    const LineSearchResult ls = armijo_search(b.setup, q, d, g, e.cost, crit);
    const double slope = mass_inner(b.setup.full_mass, g, d);
    EXPECT_LE(ls.next.cost, e.cost + crit.armijo_c1 * ls.step * slope);
    EXPECT_LT(ls.next.cost, e.cost);

    // λ* from the quadratic model versus a three-point parabola through J
    const double lstar = exact_step(b.setup, d, g);
    const double j0 = e.cost;
    const double j1 = evaluate_cost(b.setup, q + lstar * d).cost;
    const double j2 = evaluate_cost(b.setup, q + 2.0 * lstar * d).cost;
    EXPECT_NEAR(j0, j2, 1e-9 * j0);
    EXPECT_LT(j1, j0);
    EXPECT_LE(ls.step, 2.0 * (1.0 - crit.armijo_c1) * lstar);

    StopCriteria exact = crit;
    exact.quadratic_step = true;
    const LineSearchResult ex = armijo_search(b.setup, q, d, g, e.cost, exact);
    EXPECT_EQ(ex.backtracks, 0);
    EXPECT_NEAR(ex.step, lstar, 1e-14 * lstar);
    EXPECT_LE(ex.next.cost, ls.next.cost + 1e-15);
}

TEST(Armijo, TinyC1AcceptsFirstDecrease)
{
    const Baseline b = noiseless(0.0, 6, 8);
    const Vec q = Vec::Ones(b.data.q_true.size());
    const CostEvaluation e = evaluate_cost(b.setup, q);
    const Vec g = evaluate_gradient(b.setup, q, e.state);
    StopCriteria crit;
    crit.armijo_c1 = 1e-300;
    crit.initial_step = 8.0;
    const LineSearchResult ls = armijo_search(b.setup, q, -g, g, e.cost, crit);
    double step = 8.0;
    while (evaluate_cost(b.setup, q - step * g).cost >= e.cost)
        step *= 0.5;
    EXPECT_DOUBLE_EQ(ls.step, step);
}

TEST(Armijo, RejectsNonDescent)
{
    const Baseline b = noiseless(0.0, 4, 4);
    const Vec q = Vec::Ones(b.data.q_true.size());
    const CostEvaluation e = evaluate_cost(b.setup, q);
    const Vec g = evaluate_gradient(b.setup, q, e.state);
    EXPECT_THROW(armijo_search(b.setup, q, Vec::Zero(q.size()), g, e.cost, StopCriteria{}), InvalidArgument);
    EXPECT_THROW(armijo_search(b.setup, q, g, g, e.cost, StopCriteria{}), InvalidArgument);
}

TEST(StopCriteria, Validation)
{
    StopCriteria c;
    EXPECT_NO_THROW(c.validate());
    c.armijo_c1 = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.backtrack_factor = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.grad_tol = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Reconstruct, StartingAtMinimizerStopsImmediately)
{
    const Baseline b = noiseless(0.0, 6, 8);
    const Reconstruction r = reconstruct(b.setup, b.data.q_true, StopCriteria{});
    EXPECT_EQ(r.state.k, 0);
    EXPECT_EQ(r.state.reason, StopReason::GradientTolerance);
    EXPECT_LT(r.state.grad_norm_history.front(), 1e-4);
}

TEST(Reconstruct, NoiselessBaselineRecoversSource)
{
    const Baseline b = noiseless(1e-6);
    StopCriteria crit;
    crit.grad_tol = 1e-10;
    crit.max_iter = 400;
    const Reconstruction r = reconstruct(b.setup, Vec::Ones(b.data.q_true.size()), crit);
    EXPECT_LT(relative_l2_error(b.data.q_true, r.q, b.setup.full_mass), 2e-2);
    EXPECT_LT(r.state.cost_history.back(), 1e-4);
    for (std::size_t k = 1; k < r.state.cost_history.size(); ++k)
        EXPECT_LT(r.state.cost_history[k], r.state.cost_history[k - 1]);
}

TEST(Reconstruct, QuadraticStepConvergesFast)
{
    const Baseline b = noiseless(1e-6);
    StopCriteria crit;
    crit.grad_tol = 1e-5;
    crit.quadratic_step = true;
    const Reconstruction r = reconstruct(b.setup, Vec::Ones(b.data.q_true.size()), crit);
    EXPECT_EQ(r.state.reason, StopReason::GradientTolerance);
    EXPECT_LT(r.state.k, 30);
    EXPECT_LT(relative_l2_error(b.data.q_true, r.q, b.setup.full_mass), 2e-2);
}

TEST(Reconstruct, RegularizedRunMeetsTolerance)
{
    const Baseline b = noiseless(1e-2, 8, 10);
    StopCriteria crit;
    crit.grad_tol = 1e-6;
    crit.max_iter = 500;
    crit.quadratic_step = true;
    const Reconstruction r = reconstruct(b.setup, Vec::Zero(b.data.q_true.size()), crit);
    ASSERT_EQ(r.state.reason, StopReason::GradientTolerance);
    EXPECT_LT(mass_norm(b.setup.full_mass, r.state.grad), crit.grad_tol);
    EXPECT_EQ(r.state.cost_history.size(), r.state.grad_norm_history.size());
    EXPECT_EQ(r.state.step_history.size(), r.state.cost_history.size());
    EXPECT_EQ(r.state.step_history.back(), 0.0);
}

TEST(Reconstruct, ScalingEquivariance)
{
    const double gamma = 3.0;
    Baseline b = noiseless(0.0, 6, 8);
    StopCriteria crit;
    crit.max_iter = 6;
    crit.grad_tol = 1e-30;
    const Vec q0 = Vec::Ones(b.data.q_true.size());
    const Reconstruction base = reconstruct(b.setup, q0, crit);

    InverseSetup scaled = b.setup;
    scaled.data.data() *= gamma;
    const double m1 = evaluate_cost(b.setup, q0).misfit;
    const double m2 = evaluate_cost(scaled, gamma * q0).misfit;
    EXPECT_NEAR(m2, gamma * gamma * m1, 1e-12 * m2);
    const Reconstruction sr = reconstruct(scaled, gamma * q0, crit);
    EXPECT_LT((sr.q - gamma * base.q).norm(), 1e-7 * sr.q.norm());
    EXPECT_EQ(sr.state.step_history, base.state.step_history);
}
