#pragma once

// Oracles shared by the unit tests and the acceptance binary.

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "fracvisc/fracops.hpp"
#include "fracvisc/harness.hpp"
#include "fracvisc/inversion.hpp"
#include "fracvisc/solver.hpp"

namespace fracvisc::testing {

inline ProblemSpec unit_problem(int n, int N, double T, double alpha)
{
    ProblemSpec spec;
    spec.mesh = std::make_shared<const Mesh>(triangulate_rectangle({0.0, 1.0}, {0.0, 1.0}, n, n));
    spec.alpha = FracOrder(alpha);
    spec.grid = build_time_grid(T, N);
    spec.p.assign(N + 1, 1.0);
    const auto ndof = spec.mesh->num_nodes();
    spec.q = Vec::Zero(ndof);
    spec.u0 = Vec::Zero(ndof);
    spec.u1 = Vec::Zero(ndof);
    return spec;
}

inline Vec random_vector(Eigen::Index n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(n);
    for (auto& x : v)
        x = u(rng);
    return v;
}

// u*(x, y, t) = t^3 sin(πx) sin(πy) with η = μ = 1, A = I, c = 0 and pure Neumann data.
// F = (6t + 6 t^{3-α}/Γ(4-α) + 2π² t³) sin(πx) sin(πy); the outward flux on every
// edge is -π t³ sin(π s), s the coordinate along that edge.
// Returns the L²(0,T; L²) error against the nodal interpolant of u*.
inline double mms_error(int n, int N, double alpha, double T = 1.0)
{
    const double pi = std::numbers::pi;
    ProblemSpec spec = unit_problem(n, N, T, alpha);
    const Mesh& mesh = *spec.mesh;
    const auto shape = [pi](Point2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
    const auto flux = [pi](Point2 p) { return -pi * (std::sin(pi * p.x) + std::sin(pi * p.y)); };
    const Vec q = interpolate(mesh, shape);
    spec.q = q;
    const SteppingOperators ops = build_stepping_operators(spec);
    const Vec load_q = ops.mass * q;
    const Vec load_g = assemble_boundary_mass(mesh, constant_field(1.0)) * interpolate(mesh, flux);
    const FracOrder a(alpha);
    const auto amplitude = [&](double t) {
        return 6.0 * t + rl_power_oracle(3.0, a, t) + 2.0 * pi * pi * t * t * t;
    };
    const SpaceTimeField u = march(ops, spec.u0, spec.u1, [&](int k, Vec& rhs) {
        const double t = spec.grid.nodes[k];
        rhs.noalias() += amplitude(t) * load_q + (t * t * t) * load_g;
    });
    SpaceTimeField err(N + 1, mesh.num_nodes());
    for (int k = 0; k <= N; ++k) {
        const double t = spec.grid.nodes[k];
        err.step(k) = u.step(k) - (t * t * t) * q;
    }
    return std::sqrt(space_time_inner(err, ops.mass, err, spec.grid));
}

struct DirectionalCheck {
    double adjoint = 0.0;
    double finite_diff = 0.0;
    double rel_diff = 0.0;
};

// Noisy-data inverse setup on an n×n mesh with N steps, frame observation of width 0.25.
inline InverseSetup small_setup(int n, int N, std::uint64_t seed, double reg_weight = 1e-3)
{
    ExperimentConfig cfg;
    cfg.nx = cfg.ny = n;
    cfg.steps = N;
    cfg.final_time = 1.0;
    cfg.obs_margin = 0.25;
    cfg.reg_weight = reg_weight;
    const SyntheticData data = generate_data(cfg);
    ProblemSpec spec = make_problem(cfg, data.mesh);
    ObservationMask mask = frame_mask(*data.mesh, cfg.obs_margin);
    SpaceTimeField noisy = add_noise(data.clean, *data.mesh, mask, 0.05, seed);
    return make_inverse_setup(std::move(spec), std::move(mask), std::move(noisy), reg_weight);
}

// <J'(q), q̃>_{L²} against (J(q+εq̃) - J(q-εq̃)) / 2ε for random q, q̃.
inline DirectionalCheck directional_check(const InverseSetup& setup, std::mt19937_64& rng, double eps = 1e-4)
{
    const auto ndof = setup.spec.mesh->num_nodes();
    const Vec q = Vec::Ones(ndof) + 0.5 * random_vector(ndof, rng);
    const Vec dq = random_vector(ndof, rng);
    const CostEvaluation at = evaluate_cost(setup, q);
    const Vec g = evaluate_gradient(setup, q, at.state);
    DirectionalCheck out;
    out.adjoint = mass_inner(setup.full_mass, g, dq);
    out.finite_diff = (evaluate_cost(setup, q + eps * dq).cost - evaluate_cost(setup, q - eps * dq).cost) / (2.0 * eps);
    out.rel_diff = std::abs(out.adjoint - out.finite_diff) / std::abs(out.finite_diff);
    return out;
}

}  // namespace fracvisc::testing
