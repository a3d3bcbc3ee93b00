#pragma once

// P1 finite elements on a structured triangulation of a rectangle.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace fracvisc {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    Point2 normal;  // unit outward normal
};

class Mesh {
public:
    std::vector<Point2> nodes;
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise
    std::vector<BoundaryEdge> boundary_edges;
    Interval x_range;
    Interval y_range;
    int nx = 0;
    int ny = 0;

    int num_nodes() const noexcept { return static_cast<int>(nodes.size()); }
    int num_triangles() const noexcept { return static_cast<int>(triangles.size()); }

    /// Signed area, positive for counter-clockwise triangles.
    double signed_area(int tri) const;
    Point2 centroid(int tri) const;
    /// Node index of grid vertex (i, j), 0 <= i <= nx, 0 <= j <= ny.
    int node_index(int i, int j) const noexcept { return j * (nx + 1) + i; }
};

/// Structured mesh, every grid cell split along its lower-left to upper-right diagonal.
Mesh triangulate_rectangle(Interval x_range, Interval y_range, int nx, int ny);

using ScalarField = std::function<double(Point2)>;
using VectorField = std::function<Eigen::Vector2d(Point2)>;
using MatrixField = std::function<Eigen::Matrix2d(Point2)>;

ScalarField constant_field(double value);
VectorField constant_vector(double bx, double by);
MatrixField constant_matrix(double a11, double a12, double a22);

/// Data of A[φ, χ] = ∫ A∇φ·∇χ + (b·∇φ + cφ)χ plus the Robin term ∫_∂Ω σφχ.
struct EllipticCoefficients {
    MatrixField A = constant_matrix(1.0, 0.0, 1.0);
    VectorField b = constant_vector(0.0, 0.0);
    ScalarField c = constant_field(0.0);
    ScalarField sigma = constant_field(0.0);
};

/// Triangles whose centroid lies in the observation subdomain.
class ObservationMask {
public:
    ObservationMask(const Mesh& mesh, std::function<bool(Point2)> inside);

    const std::vector<char>& element_flags() const noexcept { return flags_; }
    bool contains(int tri) const { return flags_.at(tri) != 0; }
    int count() const noexcept { return count_; }

private:
    std::vector<char> flags_;
    int count_ = 0;
};

/// Ω \ [lo + a, hi - a]^2 style frame of width `margin` along the boundary.
ObservationMask frame_mask(const Mesh& mesh, double margin);

// All coefficients are sampled once per element at the centroid.
SpMat assemble_weighted_mass(const Mesh& mesh, const ScalarField& w);
SpMat assemble_stiffness(const Mesh& mesh, const EllipticCoefficients& coeffs);
SpMat assemble_observation_mass(const Mesh& mesh, const ObservationMask& mask);
/// ∫_∂Ω w φ_i φ_j dS with w sampled at edge midpoints.
SpMat assemble_boundary_mass(const Mesh& mesh, const ScalarField& w);

Vec interpolate(const Mesh& mesh, const ScalarField& f);

enum class ProjectionPath { Ritz, L2Fallback };

struct Projection {
    Vec coeffs;
    ProjectionPath path = ProjectionPath::Ritz;
};

/// Ritz projection A[Π v, χ] = A[v, χ]. With `grad_v` the right-hand side is
/// integrated with a degree-2 rule from v and ∇v; without it, v is replaced
/// by its nodal interpolant. A stiffness with constants in its kernel falls
/// back to the L2 projection.
Projection ritz_project(const Mesh& mesh, const EllipticCoefficients& coeffs, const SpMat& stiffness,
                        const ScalarField& v, const VectorField* grad_v = nullptr);

Vec l2_project(const Mesh& mesh, const ScalarField& v);

enum class SolveMode { DirectFactorReuse, Iterative };

/// Factorization of a square sparse matrix, built once and shared by any
/// number of solves and transpose solves.
class LinearSolver {
public:
    LinearSolver(const SpMat& matrix, SolveMode mode = SolveMode::DirectFactorReuse);
    ~LinearSolver();
    LinearSolver(LinearSolver&&) noexcept;
    LinearSolver& operator=(LinearSolver&&) noexcept;

    Vec solve(const Vec& rhs) const;
    Vec solve_transpose(const Vec& rhs) const;

    SolveMode mode() const noexcept { return mode_; }
    Eigen::Index rows() const noexcept { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    SolveMode mode_;
    Eigen::Index n_ = 0;
};

/// One-shot solve with residual check ||Mx - rhs|| <= 1e-10 ||rhs||.
Vec sparse_solve(const SpMat& matrix, const Vec& rhs, SolveMode mode = SolveMode::DirectFactorReuse);

/// sqrt(x^T M x).
double mass_norm(const SpMat& mass, const Vec& x);
double mass_inner(const SpMat& mass, const Vec& x, const Vec& y);

}  // namespace fracvisc
