#pragma once

// Fully discrete forward and adjoint marches for
//   η u_tt + μ D^α u + A u = p(t) q(x),   ∂_A u + σ u = 0 on ∂Ω.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fracvisc/fem2d.hpp"
#include "fracvisc/fracops.hpp"

namespace fracvisc {

struct ProblemSpec {
    std::shared_ptr<const Mesh> mesh;
    ScalarField eta = constant_field(1.0);
    ScalarField mu = constant_field(1.0);
    EllipticCoefficients elliptic;
    FracOrder alpha{1.5};
    TimeGrid grid;
    std::vector<double> p;  // p(t_n), n = 0..N
    Vec q;                  // nodal spatial source
    Vec u0;                 // nodal initial displacement (already projected)
    Vec u1;                 // nodal initial velocity

    /// Throws InvalidArgument when sizes or sample counts disagree.
    void validate() const;
};

/// (N+1) x ndof nodal history; step(n) is the field at t_n.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(int steps, int ndof) : values_(Eigen::MatrixXd::Zero(ndof, steps)) {}

    int steps() const noexcept { return static_cast<int>(values_.cols()); }
    int ndof() const noexcept { return static_cast<int>(values_.rows()); }

    auto step(int n) { return values_.col(n); }
    auto step(int n) const { return values_.col(n); }

    double operator()(int n, int dof) const { return values_(dof, n); }
    double& operator()(int n, int dof) { return values_(dof, n); }

    const Eigen::MatrixXd& data() const noexcept { return values_; }
    Eigen::MatrixXd& data() noexcept { return values_; }

    bool all_finite() const { return values_.allFinite(); }

private:
    Eigen::MatrixXd values_;  // column n holds t_n
};

struct SteppingOperators {
    SpMat mass;      // unweighted, applies the load
    SpMat mass_eta;
    SpMat mass_mu;
    SpMat stiffness;
    SpMat system;    // M_eta/τ² + τ^{-α} ω_0 M_mu + K
    std::shared_ptr<const LinearSolver> factor;
    GlWeights gl;
    TimeGrid grid;

    double inv_tau2() const noexcept { return 1.0 / (grid.tau * grid.tau); }
    double frac_scale() const;
};

SteppingOperators build_stepping_operators(const ProblemSpec& spec,
                                           SolveMode mode = SolveMode::DirectFactorReuse);

/// Adds the load vector for step n (n >= 2) to `rhs`.
using LoadFunction = std::function<void(int n, Vec& rhs)>;

struct MarchOptions {
    /// Keep only the newest `history_window` GL terms (diagnostics only).
    std::optional<int> history_window;
    /// Refactorize the system matrix at every step instead of reusing it.
    bool refactor_each_step = false;
    /// March with the transposed elliptic operator (adjoint direction).
    bool transpose = false;
};

/// Generic march: rows 0 and 1 are given, rows 2..N solve
///   S u^n = load^n + M_eta(2u^{n-1} - u^{n-2})/τ² - τ^{-α} M_mu Σ_{k=1}^n ω_k u^{n-k}.
SpaceTimeField march(const SteppingOperators& ops, const Vec& u0, const Vec& u1,
                     const LoadFunction& load, const MarchOptions& options = {});

SpaceTimeField solve_forward(const ProblemSpec& spec, const SteppingOperators& ops,
                             const MarchOptions& options = {});
SpaceTimeField solve_forward(const ProblemSpec& spec);

/// Backward problem (η∂_t² + μ d_{T-}^α + A*) v = 1_{Ω0} r with v = ∂_t v = 0 at T,
/// realized as a forward march in s = T - t with the transposed stiffness.
///
/// The reversed march is the exact transpose of the forward march: reversed
/// step m loads (c_{N-m+2}/τ) M0 r^{N-m+2}, where c are trapezoid weights,
/// so v^{N} = v^{N-1} = 0 and v^n pairs with the forward step n + 2. The
/// matching gradient quadrature is adjoint_time_integral().
SpaceTimeField solve_adjoint(const ProblemSpec& spec, const SteppingOperators& ops,
                             const SpaceTimeField& residual, const SpMat& obs_mass);

/// τ Σ_{j=2}^{N} p(t_j) v^{j-2}: ∫ p v dt paired with solve_adjoint's time alignment.
Vec adjoint_time_integral(const SpaceTimeField& adjoint, std::span<const double> p, double tau);

/// Space-time pairing Σ_n c_n <a^n, M b^n> with trapezoid weights c_n.
double space_time_inner(const SpaceTimeField& a, const SpMat& mass, const SpaceTimeField& b,
                        const TimeGrid& grid);

}  // namespace fracvisc
