#pragma once

// Tikhonov cost, adjoint gradient and the Polak-Ribière CG reconstruction.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fracvisc/solver.hpp"

namespace fracvisc {

struct InverseSetup {
    ProblemSpec spec;  // spec.q is ignored; the unknown is passed explicitly
    std::shared_ptr<const SteppingOperators> ops;
    std::shared_ptr<const ObservationMask> obs_mask;
    SpMat obs_mass;
    SpaceTimeField data;
    double reg_weight = 1e-6;
    SpMat full_mass;
};

InverseSetup make_inverse_setup(ProblemSpec spec, ObservationMask mask, SpaceTimeField data,
                                double reg_weight);

struct CostEvaluation {
    double cost = 0.0;
    double misfit = 0.0;
    double regularization = 0.0;
    SpaceTimeField state;
};

/// J(q) = ½ Σ_n c_n <r^n, M0 r^n> + (β/2) <q, M q>, r = u(q) - u_δ.
CostEvaluation evaluate_cost(const InverseSetup& setup, const Vec& q);

/// Nodal Riesz representative of J'(q): ∫ p v dt + β q.
Vec evaluate_gradient(const InverseSetup& setup, const Vec& q, const SpaceTimeField& state);

/// d = -g + ζ d_prev with the Polak-Ribière ζ in the mass inner product;
/// falls back to -g when the result is not a descent direction.
Vec pr_direction(const Vec& grad, const Vec& grad_prev, const Vec& dir_prev, const SpMat& mass);

struct StopCriteria {
    double grad_tol = 1e-4;
    int max_iter = 100;
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    double initial_step = 1.0;
    int max_backtracks = 60;
    bool quadratic_step = false;  // λ0 = exact minimizer along d instead of initial_step

    void validate() const;
};

struct LineSearchResult {
    double step = 0.0;
    Vec q_next;
    CostEvaluation next;
    int backtracks = 0;
};

/// λ* = -<g, d>_M / (||L d||²_obs + β ||d||²_M), L the zero-initial-data source-to-state map.
double exact_step(const InverseSetup& setup, const Vec& dir, const Vec& grad);

/// Largest λ = λ0 ρ^m with J(q + λ d) <= J + c1 λ <g, d>_M.
LineSearchResult armijo_search(const InverseSetup& setup, const Vec& q, const Vec& dir, const Vec& grad,
                               double cost, const StopCriteria& crit);

enum class StopReason { GradientTolerance, MaxIterations, LineSearchFailure };

std::string to_string(StopReason reason);

struct CgState {
    int k = 0;
    Vec q;
    Vec grad;
    Vec grad_prev;
    Vec direction;
    std::vector<double> cost_history;       // J(q^0), J(q^1), ...
    std::vector<double> grad_norm_history;  // ||J'(q^k)||_{L2}
    std::vector<double> step_history;       // accepted λ^k (0 for the final entry)
    std::vector<double> wall_time_ms;       // elapsed since start, per entry
    StopReason reason = StopReason::MaxIterations;
    std::string message;
};

struct Reconstruction {
    Vec q;
    CgState state;
};

Reconstruction reconstruct(const InverseSetup& setup, const Vec& q0, const StopCriteria& crit);

}  // namespace fracvisc
