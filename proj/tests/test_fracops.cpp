#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fracvisc/errors.hpp"
#include "fracvisc/fracops.hpp"

using namespace fracvisc;

namespace {

double binomial_weight(double alpha, int k)
{
    // (-1)^k Γ(α+1) / (Γ(k+1) Γ(α-k+1))
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * std::tgamma(alpha + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(alpha - k + 1.0));
}

std::vector<double> sample(const TimeGrid& g, double (*f)(double))
{
    std::vector<double> out;
    for (double t : g.nodes)
        out.push_back(f(t));
    return out;
}

double gl_error_at_end(double beta_exp, double alpha, int N)
{
    const TimeGrid g = build_time_grid(1.0, N);
    std::vector<double> u;
    for (double t : g.nodes)
        u.push_back(std::pow(t, beta_exp));
    const auto d = gl_series(u, alpha, g.tau);
    return std::abs(d.back() - rl_power_oracle(beta_exp, FracOrder(alpha), 1.0));
}

}  // namespace

TEST(FracOrder, RejectsOutsideOpenInterval)
{
    EXPECT_THROW(FracOrder(1.0), InvalidArgument);
    EXPECT_THROW(FracOrder(2.0), InvalidArgument);
    EXPECT_THROW(FracOrder(std::nan("")), InvalidArgument);
    EXPECT_DOUBLE_EQ(FracOrder(1.25).value(), 1.25);
}

TEST(TimeGrid, UniformNodes)
{
    const TimeGrid g = build_time_grid(1.5, 20);
    EXPECT_EQ(g.size(), 21);
    EXPECT_DOUBLE_EQ(g.tau, 0.075);
    EXPECT_DOUBLE_EQ(g.nodes.front(), 0.0);
    EXPECT_NEAR(g.nodes.back(), 1.5, 1e-15);
    EXPECT_THROW(build_time_grid(0.0, 4), InvalidArgument);
    EXPECT_THROW(build_time_grid(1.0, 1), InvalidArgument);
}

TEST(Trapezoid, ExactForLinear)
{
    const TimeGrid g = build_time_grid(2.0, 7);
    const auto w = trapezoid_weights(g);
    double sum = 0.0;
    for (double c : w)
        sum += c;
    EXPECT_NEAR(sum, 2.0, 1e-14);
    std::vector<double> lin;
    for (double t : g.nodes)
        lin.push_back(3.0 * t - 1.0);
    EXPECT_NEAR(trapezoid(lin, g.tau), 3.0 * 2.0 - 2.0, 1e-13);
}

TEST(GlWeights, MatchBinomialFormula)
{
    for (double alpha : {1.1, 1.5, 1.9}) {
        const GlWeights w(FracOrder(alpha), 50);
        ASSERT_EQ(w.size(), 51u);
        for (int k = 0; k <= 50; ++k) {
            const double ref = binomial_weight(alpha, k);
            EXPECT_NEAR(w[k], ref, 1e-12 * std::max(1.0, std::abs(ref))) << "alpha=" << alpha << " k=" << k;
        }
    }
}

TEST(GlWeights, SignPatternAndSum)
{
    for (double alpha : {1.1, 1.5, 1.9}) {
        const GlWeights w(FracOrder(alpha), 400);
        EXPECT_DOUBLE_EQ(w[0], 1.0);
        EXPECT_DOUBLE_EQ(w[1], -alpha);
        double sum = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (k >= 2)
                EXPECT_GE(w[k], 0.0);
            sum += w[k];
        }
        EXPECT_LT(std::abs(sum), 1e-2);
    }
}

TEST(GlWeights, GeneratingFunctionProduct)
{
    // (1-z)^a (1-z)^b = (1-z)^{a+b}
    const auto a = grunwald_weights(1.3, 30);
    const auto b = grunwald_weights(-0.6, 30);
    const auto ab = grunwald_weights(0.7, 30);
    for (int n = 0; n <= 30; ++n) {
        double conv = 0.0;
        for (int k = 0; k <= n; ++k)
            conv += a[k] * b[n - k];
        EXPECT_NEAR(conv, ab[n], 1e-12);
    }
}

TEST(GlWeights, IntegerOrderReducesToDifferences)
{
    const auto w = grunwald_weights(2.0, 5);
    EXPECT_DOUBLE_EQ(w[0], 1.0);
    EXPECT_DOUBLE_EQ(w[1], -2.0);
    EXPECT_DOUBLE_EQ(w[2], 1.0);
    for (int k = 3; k <= 5; ++k)
        EXPECT_DOUBLE_EQ(w[k], 0.0);
}

TEST(GlDerivative, VectorMatchesScalarSeries)
{
    const TimeGrid g = build_time_grid(1.0, 12);
    const GlWeights w(FracOrder(1.4), g.N);
    std::vector<Eigen::VectorXd> hist;
    std::vector<double> s0, s1;
    for (double t : g.nodes) {
        Eigen::VectorXd v(2);
        v << t * t, std::sin(t);
        hist.push_back(v);
        s0.push_back(v[0]);
        s1.push_back(v[1]);
    }
    const auto d0 = gl_series(s0, 1.4, g.tau);
    const auto d1 = gl_series(s1, 1.4, g.tau);
    const Eigen::VectorXd d = apply_gl_derivative(hist, w, g.tau);
    EXPECT_NEAR(d[0], d0.back(), 1e-12 * std::abs(d0.back()));
    EXPECT_NEAR(d[1], d1.back(), 1e-12 * std::abs(d1.back()));
}

TEST(RlOracle, KnownValues)
{
    const FracOrder a(1.5);
    // D^1.5 t^2 = Γ(3)/Γ(1.5) t^0.5
    EXPECT_NEAR(rl_power_oracle(2.0, a, 0.25), 2.0 / std::tgamma(1.5) * 0.5, 1e-14);
    EXPECT_EQ(rl_power_oracle(3.0, a, 0.0), 0.0);
    EXPECT_TRUE(std::isinf(rl_power_oracle(1.0, a, 0.0)));
}

TEST(GlDerivative, ConvergesToOracleFirstOrder)
{
    for (double beta_exp : {1.0, 3.0}) {
        for (double alpha : {1.2, 1.5, 1.8}) {
            const double e32 = gl_error_at_end(beta_exp, alpha, 32);
            const double e64 = gl_error_at_end(beta_exp, alpha, 64);
            const double e128 = gl_error_at_end(beta_exp, alpha, 128);
            EXPECT_GE(std::log2(e32 / e64), 0.9) << beta_exp << " " << alpha;
            EXPECT_GE(std::log2(e64 / e128), 0.9) << beta_exp << " " << alpha;
        }
    }
}

TEST(FracIbp, ResidualDecreasesUnderRefinement)
{
    const FracOrder alpha(1.5);
    const auto f = [](double t) { return t * t * t; };
    const auto g = [](double t) { return (1.0 - t) * (1.0 - t) * (1.0 - t); };
    double prev = 0.0;
    for (int N : {32, 64, 128}) {
        const TimeGrid grid = build_time_grid(1.0, N);
        std::vector<double> fs, gs;
        for (double t : grid.nodes) {
            fs.push_back(f(t));
            gs.push_back(g(t));
        }
        const double r = frac_ibp_residual(fs, gs, grid, alpha);
        if (N > 32)
            EXPECT_GE(std::log2(prev / r), 0.9) << "N=" << N;
        prev = r;
    }
}

TEST(FracIbp, RejectsMismatchedSamples)
{
    const TimeGrid grid = build_time_grid(1.0, 8);
    std::vector<double> f(9, 0.0), g(8, 0.0);
    EXPECT_THROW(frac_ibp_residual(f, g, grid, FracOrder(1.5)), InvalidArgument);
}

TEST(Trapezoid, SineIntegral)
{
    const TimeGrid g = build_time_grid(std::numbers::pi, 200);
    const auto s = sample(g, [](double t) { return std::sin(t); });
    EXPECT_NEAR(trapezoid(s, g.tau), 2.0, 1e-4);
}
