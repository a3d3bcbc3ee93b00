#include "fracvisc/fracops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fracvisc/errors.hpp"

namespace fracvisc {

FracOrder::FracOrder(double alpha) : alpha_(alpha)
{
    if (!(alpha > 1.0 && alpha < 2.0))
        throw InvalidArgument("fractional order must lie in (1,2), got " + std::to_string(alpha));
}

TimeGrid build_time_grid(double T, int N)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw InvalidArgument("final time must be positive");
    if (N < 2)
        throw InvalidArgument("time grid needs at least 2 steps, got " + std::to_string(N));

    TimeGrid grid;
    grid.T = T;
    grid.N = N;
    grid.tau = T / N;
    grid.nodes.resize(N + 1);
    for (int n = 0; n <= N; ++n)
        grid.nodes[n] = n * grid.tau;
    grid.nodes[N] = T;
    return grid;
}

std::vector<double> trapezoid_weights(const TimeGrid& grid)
{
    std::vector<double> c(grid.size(), grid.tau);
    c.front() *= 0.5;
    c.back() *= 0.5;
    return c;
}

double trapezoid(std::span<const double> values, double tau)
{
    if (values.size() < 2)
        return 0.0;
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        s += values[i];
    return s * tau;
}

std::vector<double> grunwald_weights(double order, int n)
{
    if (n < 0)
        throw InvalidArgument("weight count must be non-negative");
    std::vector<double> w(n + 1);
    w[0] = 1.0;
    for (int k = 1; k <= n; ++k)
        w[k] = (1.0 - (order + 1.0) / k) * w[k - 1];
    return w;
}

GlWeights::GlWeights(FracOrder alpha, int N) : alpha_(alpha)
{
    if (N < 0)
        throw InvalidArgument("GL weight count must be non-negative");
    w_ = grunwald_weights(alpha.value(), N);
}

GlWeights gl_weights(FracOrder alpha, int N)
{
    return GlWeights(alpha, N);
}

Eigen::VectorXd apply_gl_derivative(std::span<const Eigen::VectorXd> history,
                                    const GlWeights& weights, double tau)
{
    if (history.empty())
        throw InvalidArgument("GL derivative needs a non-empty history");
    if (history.size() > weights.size())
        throw InvalidArgument("history longer than the available GL weights");
    if (!(tau > 0.0))
        throw InvalidArgument("step size must be positive");

    const std::size_t n = history.size() - 1;
    const Eigen::Index ndof = history.front().size();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ndof);
    for (std::size_t k = 0; k <= n; ++k) {
        const auto& u = history[n - k];
        if (u.size() != ndof)
            throw InvalidArgument("history entries differ in length");
        acc.noalias() += weights[k] * u;
    }
    return std::pow(tau, -weights.alpha().value()) * acc;
}

std::vector<double> gl_series(std::span<const double> samples, double order, double tau)
{
    const int n = static_cast<int>(samples.size()) - 1;
    if (n < 0)
        return {};
    const auto w = grunwald_weights(order, n);
    const double scale = std::pow(tau, -order);
    std::vector<double> out(samples.size());
    for (int m = 0; m <= n; ++m) {
        double s = 0.0;
        for (int k = 0; k <= m; ++k)
            s += w[k] * samples[m - k];
        out[m] = scale * s;
    }
    return out;
}

double rl_power_oracle(double beta_exp, FracOrder alpha, double t)
{
    const double a = alpha.value();
    if (!(beta_exp > a - 1.0))
        throw InvalidArgument("power must exceed alpha - 1");
    if (t < 0.0)
        throw InvalidArgument("oracle defined for t >= 0");
    const double coeff = std::tgamma(beta_exp + 1.0) / std::tgamma(beta_exp + 1.0 - a);
    if (t == 0.0) {
        if (beta_exp > a)
            return 0.0;
        return beta_exp == a ? coeff : std::numeric_limits<double>::infinity();
    }
    return coeff * std::pow(t, beta_exp - a);
}

double frac_ibp_residual(std::span<const double> f, std::span<const double> g,
                         const TimeGrid& grid, FracOrder alpha)
{
    const auto len = static_cast<std::size_t>(grid.size());
    if (f.size() != len || g.size() != len)
        throw InvalidArgument("samples must match the time grid");

    const int N = grid.N;
    const double tau = grid.tau;
    const double a = alpha.value();

    const auto d_alpha_f = gl_series(f, a, tau);
    const auto d_alpha_minus_one_f = gl_series(f, a - 1.0, tau);  // (J^{2-α} f)'
    const auto j_f = gl_series(f, a - 2.0, tau);                   // J^{2-α} f

    // Reverse g about T and strip g(T) + g'(T)(t - T) so that the RL sum of
    // the remainder equals the Caputo derivative.
    const double g_T = g[N];
    const double dg_T = (3.0 * g[N] - 4.0 * g[N - 1] + g[N - 2]) / (2.0 * tau);
    const double dg_0 = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * tau);
    std::vector<double> reversed(len);
    for (int m = 0; m <= N; ++m) {
        const double s = m * tau;
        reversed[m] = g[N - m] - (g_T - dg_T * s);
    }
    const auto caputo_rev = gl_series(reversed, a, tau);

    std::vector<double> lhs(len), rhs(len);
    for (int n = 0; n <= N; ++n) {
        lhs[n] = d_alpha_f[n] * g[n];
        rhs[n] = f[n] * caputo_rev[N - n];
    }

    const double boundary = (d_alpha_minus_one_f[N] * g[N] - j_f[N] * dg_T) -
                            (d_alpha_minus_one_f[0] * g[0] - j_f[0] * dg_0);

    return std::abs(trapezoid(lhs, tau) - boundary - trapezoid(rhs, tau));
}

}  // namespace fracvisc
