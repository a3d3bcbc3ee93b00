#pragma once

// Time grid, Grünwald-Letnikov kernels and fractional-calculus oracles.

#include <span>
#include <vector>

#include <Eigen/Core>

namespace fracvisc {

/// Order of the Riemann-Liouville derivative, restricted to (1, 2).
class FracOrder {
public:
    explicit FracOrder(double alpha);

    double value() const noexcept { return alpha_; }

private:
    double alpha_;
};

/// Uniform partition t_n = n * tau of [0, T].
struct TimeGrid {
    double T = 0.0;
    int N = 0;
    double tau = 0.0;
    std::vector<double> nodes;

    int size() const noexcept { return N + 1; }
};

TimeGrid build_time_grid(double T, int N);

/// Composite trapezoid weights on the grid nodes (tau/2 at both ends).
std::vector<double> trapezoid_weights(const TimeGrid& grid);

double trapezoid(std::span<const double> values, double tau);

/// Coefficients of (1 - z)^order up to z^n for an arbitrary real order.
/// Negative orders give fractional-integral weights.
std::vector<double> grunwald_weights(double order, int n);

/// Immutable GL weights for one (alpha, N) pair.
class GlWeights {
public:
    GlWeights(FracOrder alpha, int N);

    FracOrder alpha() const noexcept { return alpha_; }
    std::span<const double> w() const noexcept { return w_; }
    double operator[](std::size_t k) const { return w_[k]; }
    std::size_t size() const noexcept { return w_.size(); }

private:
    FracOrder alpha_;
    std::vector<double> w_;
};

GlWeights gl_weights(FracOrder alpha, int N);

/// tau^{-alpha} * sum_{k=0}^{n} w_k u^{n-k}, where n + 1 = history.size().
Eigen::VectorXd apply_gl_derivative(std::span<const Eigen::VectorXd> history,
                                    const GlWeights& weights, double tau);

/// GL derivative of a scalar series at every node, any real order.
std::vector<double> gl_series(std::span<const double> samples, double order, double tau);

/// Gamma(b+1)/Gamma(b+1-alpha) * t^{b-alpha}: RL derivative of t^b.
double rl_power_oracle(double beta_exp, FracOrder alpha, double t);

/// |∫ (D^α f) g − [(J^{2-α} f)' g − (J^{2-α} f) g']_0^T − ∫ f (d_{T-}^α g)| on the grid.
///
/// The forward derivative and the fractional integrals use GL sums; the
/// backward Caputo derivative is the forward Caputo derivative of the
/// time-reversed g (GL applied after removing its first-order Taylor part at
/// t = T). All time integrals are composite trapezoid.
double frac_ibp_residual(std::span<const double> f, std::span<const double> g,
                         const TimeGrid& grid, FracOrder alpha);

}  // namespace fracvisc
