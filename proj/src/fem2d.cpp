#include "fracvisc/fem2d.hpp"

#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>

#include "fracvisc/errors.hpp"

namespace fracvisc {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct ElementGeometry {
    std::array<Point2, 3> p;
    double area;
    std::array<Eigen::Vector2d, 3> grad;  // gradients of the three hat functions
    Point2 centroid;
};

ElementGeometry element_geometry(const Mesh& mesh, int tri)
{
    const auto& t = mesh.triangles[tri];
    ElementGeometry g;
    for (int k = 0; k < 3; ++k)
        g.p[k] = mesh.nodes[t[k]];
    const double twice = (g.p[1].x - g.p[0].x) * (g.p[2].y - g.p[0].y) -
                         (g.p[2].x - g.p[0].x) * (g.p[1].y - g.p[0].y);
    g.area = 0.5 * twice;
    for (int k = 0; k < 3; ++k) {
        const Point2& a = g.p[(k + 1) % 3];
        const Point2& b = g.p[(k + 2) % 3];
        g.grad[k] = Eigen::Vector2d(a.y - b.y, b.x - a.x) / twice;
    }
    g.centroid = {(g.p[0].x + g.p[1].x + g.p[2].x) / 3.0, (g.p[0].y + g.p[1].y + g.p[2].y) / 3.0};
    return g;
}

SpMat from_triplets(int n, const Triplets& entries)
{
    SpMat m(n, n);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return m;
}

void add_element_mass(Triplets& out, const std::array<int, 3>& t, double scale)
{
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.emplace_back(t[i], t[j], scale * (i == j ? 2.0 : 1.0) / 12.0);
}

double edge_length(const Mesh& mesh, const BoundaryEdge& e)
{
    const Point2& a = mesh.nodes[e.a];
    const Point2& b = mesh.nodes[e.b];
    return std::hypot(b.x - a.x, b.y - a.y);
}

bool has_constant_kernel(const SpMat& k)
{
    double kmax = 0.0;
    for (int c = 0; c < k.outerSize(); ++c)
        for (SpMat::InnerIterator it(k, c); it; ++it)
            kmax = std::max(kmax, std::abs(it.value()));
    const Vec ones = Vec::Ones(k.cols());
    return (k * ones).norm() < 1e-10 * kmax;
}

}  // namespace

double Mesh::signed_area(int tri) const
{
    const auto& t = triangles.at(tri);
    const Point2& a = nodes[t[0]];
    const Point2& b = nodes[t[1]];
    const Point2& c = nodes[t[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Point2 Mesh::centroid(int tri) const
{
    const auto& t = triangles.at(tri);
    return {(nodes[t[0]].x + nodes[t[1]].x + nodes[t[2]].x) / 3.0,
            (nodes[t[0]].y + nodes[t[1]].y + nodes[t[2]].y) / 3.0};
}

Mesh triangulate_rectangle(Interval x_range, Interval y_range, int nx, int ny)
{
    if (nx < 1 || ny < 1)
        throw InvalidArgument("mesh needs at least one subdivision per axis");
    if (!(x_range.hi > x_range.lo) || !(y_range.hi > y_range.lo))
        throw InvalidArgument("degenerate rectangle");

    Mesh mesh;
    mesh.x_range = x_range;
    mesh.y_range = y_range;
    mesh.nx = nx;
    mesh.ny = ny;

    const double hx = (x_range.hi - x_range.lo) / nx;
    const double hy = (y_range.hi - y_range.lo) / ny;
    mesh.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.nodes.push_back({i == nx ? x_range.hi : x_range.lo + i * hx,
                                  j == ny ? y_range.hi : y_range.lo + j * hy});

    mesh.triangles.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int n00 = mesh.node_index(i, j);
            const int n10 = mesh.node_index(i + 1, j);
            const int n01 = mesh.node_index(i, j + 1);
            const int n11 = mesh.node_index(i + 1, j + 1);
            mesh.triangles.push_back({n00, n10, n11});
            mesh.triangles.push_back({n00, n11, n01});
        }
    }

    for (int i = 0; i < nx; ++i) {
        mesh.boundary_edges.push_back({mesh.node_index(i, 0), mesh.node_index(i + 1, 0), {0.0, -1.0}});
        mesh.boundary_edges.push_back({mesh.node_index(i + 1, ny), mesh.node_index(i, ny), {0.0, 1.0}});
    }
    for (int j = 0; j < ny; ++j) {
        mesh.boundary_edges.push_back({mesh.node_index(nx, j), mesh.node_index(nx, j + 1), {1.0, 0.0}});
        mesh.boundary_edges.push_back({mesh.node_index(0, j + 1), mesh.node_index(0, j), {-1.0, 0.0}});
    }
    return mesh;
}

ScalarField constant_field(double value)
{
    return [value](Point2) { return value; };
}

VectorField constant_vector(double bx, double by)
{
    return [bx, by](Point2) { return Eigen::Vector2d(bx, by); };
}

MatrixField constant_matrix(double a11, double a12, double a22)
{
    Eigen::Matrix2d a;
    a << a11, a12, a12, a22;
    return [a](Point2) { return a; };
}

ObservationMask::ObservationMask(const Mesh& mesh, std::function<bool(Point2)> inside)
    : flags_(mesh.triangles.size(), 0)
{
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        if (inside(mesh.centroid(e))) {
            flags_[e] = 1;
            ++count_;
        }
    }
    if (count_ == 0)
        throw InvalidArgument("observation mask selects no element");
}

ObservationMask frame_mask(const Mesh& mesh, double margin)
{
    const double x0 = mesh.x_range.lo + margin;
    const double x1 = mesh.x_range.hi - margin;
    const double y0 = mesh.y_range.lo + margin;
    const double y1 = mesh.y_range.hi - margin;
    if (!(margin > 0.0) || !(x1 > x0) || !(y1 > y0))
        throw InvalidArgument("frame margin must be positive and leave a nonempty interior");
    return ObservationMask(mesh, [=](Point2 p) {
        return p.x < x0 || p.x > x1 || p.y < y0 || p.y > y1;
    });
}

SpMat assemble_weighted_mass(const Mesh& mesh, const ScalarField& w)
{
    Triplets entries;
    entries.reserve(9 * mesh.triangles.size());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto geo = element_geometry(mesh, e);
        const double we = w(geo.centroid);
        if (!(we > 0.0))
            throw InvalidArgument("mass weight must be strictly positive");
        add_element_mass(entries, mesh.triangles[e], we * geo.area);
    }
    return from_triplets(mesh.num_nodes(), entries);
}

SpMat assemble_boundary_mass(const Mesh& mesh, const ScalarField& w)
{
    Triplets entries;
    entries.reserve(4 * mesh.boundary_edges.size());
    for (const auto& edge : mesh.boundary_edges) {
        const Point2& a = mesh.nodes[edge.a];
        const Point2& b = mesh.nodes[edge.b];
        const double we = w({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
        const double s = we * edge_length(mesh, edge) / 6.0;
        entries.emplace_back(edge.a, edge.a, 2.0 * s);
        entries.emplace_back(edge.b, edge.b, 2.0 * s);
        entries.emplace_back(edge.a, edge.b, s);
        entries.emplace_back(edge.b, edge.a, s);
    }
    return from_triplets(mesh.num_nodes(), entries);
}

SpMat assemble_stiffness(const Mesh& mesh, const EllipticCoefficients& coeffs)
{
    Triplets entries;
    entries.reserve(9 * mesh.triangles.size() + 4 * mesh.boundary_edges.size());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto geo = element_geometry(mesh, e);
        const Eigen::Matrix2d A = coeffs.A(geo.centroid);
        const Eigen::Vector2d b = coeffs.b(geo.centroid);
        const double c = coeffs.c(geo.centroid);
        if (std::abs(A(0, 1) - A(1, 0)) > 1e-12 * A.norm() || !(A(0, 0) > 0.0) || !(A.determinant() > 0.0))
            throw InvalidArgument("diffusion tensor is not symmetric positive definite at element " +
                                  std::to_string(e));
        const auto& t = mesh.triangles[e];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double diffusion = geo.area * (A * geo.grad[j]).dot(geo.grad[i]);
                const double convection = geo.area / 3.0 * b.dot(geo.grad[j]);
                const double reaction = c * geo.area * (i == j ? 2.0 : 1.0) / 12.0;
                entries.emplace_back(t[i], t[j], diffusion + convection + reaction);
            }
        }
    }
    for (const auto& edge : mesh.boundary_edges) {
        const Point2& a = mesh.nodes[edge.a];
        const Point2& b = mesh.nodes[edge.b];
        const double sigma = coeffs.sigma({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
        if (sigma < 0.0)
            throw InvalidArgument("Robin coefficient must be non-negative");
        if (sigma == 0.0)
            continue;
        const double s = sigma * edge_length(mesh, edge) / 6.0;
        entries.emplace_back(edge.a, edge.a, 2.0 * s);
        entries.emplace_back(edge.b, edge.b, 2.0 * s);
        entries.emplace_back(edge.a, edge.b, s);
        entries.emplace_back(edge.b, edge.a, s);
    }
    return from_triplets(mesh.num_nodes(), entries);
}

SpMat assemble_observation_mass(const Mesh& mesh, const ObservationMask& mask)
{
    if (mask.element_flags().size() != mesh.triangles.size())
        throw InvalidArgument("observation mask was built for a different mesh");
    if (mask.count() == 0)
        throw InvalidArgument("observation mask selects no element");
    Triplets entries;
    entries.reserve(9 * static_cast<std::size_t>(mask.count()));
    for (int e = 0; e < mesh.num_triangles(); ++e)
        if (mask.contains(e))
            add_element_mass(entries, mesh.triangles[e], mesh.signed_area(e));
    return from_triplets(mesh.num_nodes(), entries);
}

Vec interpolate(const Mesh& mesh, const ScalarField& f)
{
    Vec out(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i)
        out[i] = f(mesh.nodes[i]);
    return out;
}

Vec l2_project(const Mesh& mesh, const ScalarField& v)
{
    // Edge-midpoint rule, exact for quadratics.
    Vec rhs = Vec::Zero(mesh.num_nodes());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto geo = element_geometry(mesh, e);
        const auto& t = mesh.triangles[e];
        for (int m = 0; m < 3; ++m) {
            const Point2& a = geo.p[m];
            const Point2& b = geo.p[(m + 1) % 3];
            const double vq = v({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
            rhs[t[m]] += geo.area / 3.0 * 0.5 * vq;
            rhs[t[(m + 1) % 3]] += geo.area / 3.0 * 0.5 * vq;
        }
    }
    return sparse_solve(assemble_weighted_mass(mesh, constant_field(1.0)), rhs);
}

Projection ritz_project(const Mesh& mesh, const EllipticCoefficients& coeffs, const SpMat& stiffness,
                        const ScalarField& v, const VectorField* grad_v)
{
    if (stiffness.rows() != mesh.num_nodes() || stiffness.cols() != mesh.num_nodes())
        throw InvalidArgument("stiffness does not match the mesh");

    if (has_constant_kernel(stiffness))
        return {l2_project(mesh, v), ProjectionPath::L2Fallback};

    Vec rhs;
    if (grad_v == nullptr) {
        rhs = stiffness * interpolate(mesh, v);
    } else {
        rhs = Vec::Zero(mesh.num_nodes());
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto geo = element_geometry(mesh, e);
            const Eigen::Matrix2d A = coeffs.A(geo.centroid);
            const Eigen::Vector2d b = coeffs.b(geo.centroid);
            const double c = coeffs.c(geo.centroid);
            const auto& t = mesh.triangles[e];
            for (int m = 0; m < 3; ++m) {
                const int a_local = m;
                const int b_local = (m + 1) % 3;
                const Point2 q{0.5 * (geo.p[a_local].x + geo.p[b_local].x),
                               0.5 * (geo.p[a_local].y + geo.p[b_local].y)};
                const double vq = v(q);
                const Eigen::Vector2d gq = (*grad_v)(q);
                const double w = geo.area / 3.0;
                for (int i = 0; i < 3; ++i) {
                    const double phi = (i == a_local || i == b_local) ? 0.5 : 0.0;
                    rhs[t[i]] += w * ((A * gq).dot(geo.grad[i]) + (b.dot(gq) + c * vq) * phi);
                }
            }
        }
        const double g = 1.0 / std::sqrt(3.0);
        for (const auto& edge : mesh.boundary_edges) {
            const Point2& pa = mesh.nodes[edge.a];
            const Point2& pb = mesh.nodes[edge.b];
            const double sigma = coeffs.sigma({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
            if (sigma == 0.0)
                continue;
            const double len = edge_length(mesh, edge);
            for (const double xi : {-g, g}) {
                const double s = 0.5 * (1.0 + xi);
                const double vq = v({pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y)});
                rhs[edge.a] += 0.5 * len * sigma * vq * (1.0 - s);
                rhs[edge.b] += 0.5 * len * sigma * vq * s;
            }
        }
    }
    return {sparse_solve(stiffness, rhs), ProjectionPath::Ritz};
}

struct LinearSolver::Impl {
    SpMat matrix;
    std::optional<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu;
    SpMat transposed;
    std::optional<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> iter;
    std::optional<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> iter_t;
};

LinearSolver::LinearSolver(const SpMat& matrix, SolveMode mode)
    : impl_(std::make_unique<Impl>()), mode_(mode), n_(matrix.rows())
{
    if (matrix.rows() != matrix.cols())
        throw InvalidArgument("linear solve needs a square matrix");
    impl_->matrix = matrix;
    impl_->matrix.makeCompressed();
    if (mode == SolveMode::DirectFactorReuse) {
        impl_->lu.emplace();
        impl_->lu->analyzePattern(impl_->matrix);
        impl_->lu->factorize(impl_->matrix);
        if (impl_->lu->info() != Eigen::Success)
            throw NumericFailure("sparse LU factorization failed: " + impl_->lu->lastErrorMessage());
    } else {
        impl_->transposed = SpMat(impl_->matrix.transpose());
        for (auto* slot : {&impl_->iter, &impl_->iter_t}) {
            slot->emplace();
            (*slot)->setTolerance(1e-13);
            (*slot)->setMaxIterations(static_cast<int>(std::max<Eigen::Index>(1000, 10 * n_)));
        }
        impl_->iter->compute(impl_->matrix);
        impl_->iter_t->compute(impl_->transposed);
        if (impl_->iter->info() != Eigen::Success || impl_->iter_t->info() != Eigen::Success)
            throw NumericFailure("incomplete LU preconditioner failed");
    }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

namespace {

void check_result(const Vec& x, const char* what)
{
    if (!x.allFinite())
        throw NumericFailure(std::string(what) + " produced non-finite values");
}

}  // namespace

Vec LinearSolver::solve(const Vec& rhs) const
{
    if (rhs.size() != n_)
        throw InvalidArgument("right-hand side has the wrong length");
    Vec x;
    if (impl_->lu) {
        x = impl_->lu->solve(rhs);
    } else {
        x = impl_->iter->solve(rhs);
        if (impl_->iter->info() != Eigen::Success)
            throw NumericFailure("BiCGSTAB did not converge");
    }
    check_result(x, "linear solve");
    return x;
}

Vec LinearSolver::solve_transpose(const Vec& rhs) const
{
    if (rhs.size() != n_)
        throw InvalidArgument("right-hand side has the wrong length");
    Vec x;
    if (impl_->lu) {
        x = impl_->lu->transpose().solve(rhs);
    } else {
        x = impl_->iter_t->solve(rhs);
        if (impl_->iter_t->info() != Eigen::Success)
            throw NumericFailure("BiCGSTAB did not converge on the transposed system");
    }
    check_result(x, "transpose solve");
    return x;
}

Vec sparse_solve(const SpMat& matrix, const Vec& rhs, SolveMode mode)
{
    const LinearSolver solver(matrix, mode);
    Vec x = solver.solve(rhs);
    const double res = (matrix * x - rhs).norm();
    if (res > 1e-10 * rhs.norm())
        throw NumericFailure("linear solve residual " + std::to_string(res) +
                             " exceeds tolerance; matrix is singular or ill-conditioned");
    return x;
}

double mass_inner(const SpMat& mass, const Vec& x, const Vec& y)
{
    return x.dot(mass * y);
}

double mass_norm(const SpMat& mass, const Vec& x)
{
    return std::sqrt(std::max(0.0, mass_inner(mass, x, x)));
}

}  // namespace fracvisc
