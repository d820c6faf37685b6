#ifndef LRBOPT_DG_CORE_HPP
#define LRBOPT_DG_CORE_HPP

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "lrbopt/coeff.hpp"
#include "lrbopt/grid.hpp"

namespace lrbopt {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Coefficient vector over the broken space V(tau_h); per-subdomain blocks of
// (s+1)^2 bilinear nodal values, discontinuous across subdomain interfaces.
using BrokenFunction = Eigen::VectorXd;

namespace q1 {

// nodes ordered (0,0),(1,0),(1,1),(0,1) on the reference square [0,1]^2
inline std::array<double, 4> shape(double x, double y) {
    return {(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y};
}
inline std::array<double, 4> dshape_dx(double /*x*/, double y) {
    return {-(1 - y), (1 - y), y, -y};
}
inline std::array<double, 4> dshape_dy(double x, double /*y*/) {
    return {-(1 - x), -x, x, (1 - x)};
}

inline constexpr double gauss_lo = 0.21132486540518711775; // 0.5 - 0.5/sqrt(3)
inline constexpr double gauss_hi = 0.78867513459481288225;

// element stiffness for A = 1 (independent of h)
inline Eigen::Matrix4d unit_stiffness() {
    Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
    const double pts[2] = {gauss_lo, gauss_hi};
    for (double px : pts)
        for (double py : pts) {
            const auto dx = dshape_dx(px, py);
            const auto dy = dshape_dy(px, py);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    K(a, b) += 0.25 * (dx[a] * dx[b] + dy[a] * dy[b]);
        }
    return K;
}

// element mass for a cell of size h x h
inline Eigen::Matrix4d mass(double h) {
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    const double pts[2] = {gauss_lo, gauss_hi};
    for (double px : pts)
        for (double py : pts) {
            const auto N = shape(px, py);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    M(a, b) += 0.25 * h * h * N[a] * N[b];
        }
    return M;
}

} // namespace q1

// DOF layout of V(tau_h) = (+)_j S^1(tau_h(T_j)): subdomain j owns the
// contiguous index range [j*(s+1)^2, (j+1)*(s+1)^2).
class BrokenSpace {
public:
    explicit BrokenSpace(const TwoLevelMesh& mesh)
        : mesh_(&mesh), s_(mesh.fine_per_subdomain()) {}

    const TwoLevelMesh& mesh() const { return *mesh_; }

    int nodes_per_axis() const { return s_ + 1; }
    int dofs_per_subdomain() const { return (s_ + 1) * (s_ + 1); }
    int dim() const { return mesh_->num_subdomains() * dofs_per_subdomain(); }

    int subdomain_offset(int j) const { return j * dofs_per_subdomain(); }

    int dof(int j, int lx, int ly) const {
        return subdomain_offset(j) + ly * (s_ + 1) + lx;
    }

    // corner dofs of a fine cell, ordered (0,0),(1,0),(1,1),(0,1)
    std::array<int, 4> cell_dofs(int cell) const {
        const int cx = mesh_->cell_x(cell), cy = mesh_->cell_y(cell);
        const int j = mesh_->subdomain_of_cell(cell);
        const int lx = cx - mesh_->subdomain_x(j) * s_;
        const int ly = cy - mesh_->subdomain_y(j) * s_;
        return {dof(j, lx, ly), dof(j, lx + 1, ly), dof(j, lx + 1, ly + 1), dof(j, lx, ly + 1)};
    }

    std::array<double, 2> node_coord(int j, int lx, int ly) const {
        const auto lo = mesh_->coarse_lower(j);
        const double h = mesh_->h();
        return {lo[0] + lx * h, lo[1] + ly * h};
    }

    template <class F>
    BrokenFunction interpolate(F&& f) const {
        BrokenFunction u(dim());
        const int np = nodes_per_axis();
        for (int j = 0; j < mesh_->num_subdomains(); ++j)
            for (int ly = 0; ly < np; ++ly)
                for (int lx = 0; lx < np; ++lx) {
                    const auto x = node_coord(j, lx, ly);
                    u[dof(j, lx, ly)] = f(x[0], x[1]);
                }
        return u;
    }

    // evaluate the broken function in subdomain j at a point of T_j
    double evaluate(const BrokenFunction& u, int j, double x, double y) const {
        const auto lo = mesh_->coarse_lower(j);
        const double h = mesh_->h();
        int lx = std::min(static_cast<int>((x - lo[0]) / h), s_ - 1);
        int ly = std::min(static_cast<int>((y - lo[1]) / h), s_ - 1);
        lx = std::max(lx, 0);
        ly = std::max(ly, 0);
        const double rx = (x - lo[0]) / h - lx, ry = (y - lo[1]) / h - ly;
        const auto N = q1::shape(rx, ry);
        const int d0 = dof(j, lx, ly);
        const int np = nodes_per_axis();
        return N[0] * u[d0] + N[1] * u[d0 + 1] + N[2] * u[d0 + 1 + np] + N[3] * u[d0 + np];
    }

private:
    const TwoLevelMesh* mesh_;
    int s_;
};

// Trace data of the four local shape functions of one face-adjacent cell at
// the face midpoint: values and normal derivatives along the face normal n_e.
struct FaceTrace {
    std::array<int, 4> dofs;
    std::array<double, 4> value;
    std::array<double, 4> dnormal;
};

inline FaceTrace face_trace(const BrokenSpace& space, const Face& face, bool minus_side) {
    const TwoLevelMesh& mesh = space.mesh();
    const int cell = minus_side ? face.cell_minus : face.cell_plus;
    const double h = mesh.h();
    const auto lo = mesh.cell_lower(cell);
    // reference coordinates of the face midpoint within the cell
    const double rx = (face.center[0] - lo[0]) / h;
    const double ry = (face.center[1] - lo[1]) / h;
    const auto N = q1::shape(rx, ry);
    const auto dx = q1::dshape_dx(rx, ry);
    const auto dy = q1::dshape_dy(rx, ry);
    FaceTrace t;
    t.dofs = space.cell_dofs(cell);
    for (int a = 0; a < 4; ++a) {
        t.value[a] = N[a];
        t.dnormal[a] = (face.normal[0] * dx[a] + face.normal[1] * dy[a]) / h;
    }
    return t;
}

inline void check_field_resolved(const TwoLevelMesh& mesh, const AffineDiffusion& diff) {
    for (const auto& c : diff.components)
        if (mesh.n_fine_global() % c.field->resolution != 0)
            throw std::invalid_argument(
                "assembly: fine grid does not resolve the coefficient field grid");
}

// Volume contribution sum_t int_t A_xi grad u . grad v of one diffusion
// component; symmetric PSD, supported on the component's block.
inline SpMat assemble_volume(const BrokenSpace& space, const DiffusionComponent& comp) {
    const TwoLevelMesh& mesh = space.mesh();
    if (mesh.n_fine_global() % comp.field->resolution != 0)
        throw std::invalid_argument("assemble_volume: unresolved field grid");
    const Eigen::Matrix4d K = q1::unit_stiffness();
    std::vector<Triplet> trips;
    for (int c = 0; c < mesh.num_fine_cells(); ++c) {
        const auto ctr = mesh.cell_center(c);
        const double a = comp.value(ctr[0], ctr[1]);
        if (a == 0.0) continue;
        const auto d = space.cell_dofs(c);
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                trips.emplace_back(d[i], d[k], a * K(i, k));
    }
    SpMat M(space.dim(), space.dim());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

struct FaceMatrices {
    std::vector<SpMat> consistency; // one matrix per parameter component
    SpMat penalty;                  // mu-independent
    std::vector<double> sigma;      // sigma_e per mesh face (0 where unused)
};

// SIPG face terms over subdomain-interface and domain-boundary faces:
//   -<A grad u . n>[v] - <A grad v . n>[u] + sigma_e/|e|^beta [u][v]
// with midpoint quadrature. The consistency part is split per parameter
// component (coefficients theta_xi(mu) = mu_xi); the penalty uses the
// parameter-space upper bound of A and is mu-independent.
inline FaceMatrices assemble_face(const BrokenSpace& space, const AffineDiffusion& diff,
                                  const BoxParameterSpace& box, double sigma0, double beta) {
    const TwoLevelMesh& mesh = space.mesh();
    check_field_resolved(mesh, diff);
    const int n = space.dim();
    FaceMatrices out;
    out.sigma.assign(mesh.faces().size(), 0.0);
    std::vector<std::vector<Triplet>> ctrips(diff.param_dim);
    std::vector<Triplet> ptrips;

    for (std::size_t fi = 0; fi < mesh.faces().size(); ++fi) {
        const Face& face = mesh.faces()[fi];
        if (face.type == FaceType::inner) continue; // conforming inside subdomains

        const bool boundary = (face.type == FaceType::boundary);
        const FaceTrace tm = face_trace(space, face, true);
        FaceTrace tp;
        if (!boundary) tp = face_trace(space, face, false);
        const int nd = boundary ? 4 : 8;

        std::array<int, 8> dofs{};
        std::array<double, 8> jump{};
        for (int a = 0; a < 4; ++a) {
            dofs[a] = tm.dofs[a];
            jump[a] = tm.value[a];
        }
        if (!boundary)
            for (int a = 0; a < 4; ++a) {
                dofs[4 + a] = tp.dofs[a];
                jump[4 + a] = -tp.value[a];
            }

        const auto cm = mesh.cell_center(face.cell_minus);
        const auto cp = boundary ? cm : mesh.cell_center(face.cell_plus);
        const double a_ub_m = diff.evaluate(box.upper, cm[0], cm[1]);
        const double a_ub = boundary ? a_ub_m : std::max(a_ub_m, diff.evaluate(box.upper, cp[0], cp[1]));
        const double sigma_e = sigma0 * a_ub;
        out.sigma[fi] = sigma_e;

        // penalty: sigma_e / |e|^beta * int_e [u][v], midpoint rule
        const double pw = sigma_e * std::pow(face.length, 1.0 - beta);
        for (int a = 0; a < nd; ++a)
            for (int b = 0; b < nd; ++b)
                ptrips.emplace_back(dofs[a], dofs[b], pw * jump[a] * jump[b]);

        // consistency, per component: flux weight 1/2 on inner faces, 1 on boundary
        const double w = boundary ? 1.0 : 0.5;
        for (const auto& comp : diff.components) {
            const double am = comp.value(cm[0], cm[1]);
            const double ap = boundary ? 0.0 : comp.value(cp[0], cp[1]);
            if (am == 0.0 && ap == 0.0) continue;
            std::array<double, 8> flux{};
            for (int a = 0; a < 4; ++a) flux[a] = w * am * tm.dnormal[a];
            if (!boundary)
                for (int a = 0; a < 4; ++a) flux[4 + a] = w * ap * tp.dnormal[a];
            auto& tr = ctrips[comp.param_index];
            for (int a = 0; a < nd; ++a)
                for (int b = 0; b < nd; ++b) {
                    const double v = -face.length * (jump[a] * flux[b] + flux[a] * jump[b]);
                    if (v != 0.0) tr.emplace_back(dofs[a], dofs[b], v);
                }
        }
    }

    out.consistency.resize(diff.param_dim);
    for (int q = 0; q < diff.param_dim; ++q) {
        out.consistency[q].resize(n, n);
        out.consistency[q].setFromTriplets(ctrips[q].begin(), ctrips[q].end());
    }
    out.penalty.resize(n, n);
    out.penalty.setFromTriplets(ptrips.begin(), ptrips.end());
    return out;
}

// load vector for a general source, 2x2 Gauss per cell
template <class F>
inline Eigen::VectorXd assemble_rhs(const BrokenSpace& space, F&& f) {
    const TwoLevelMesh& mesh = space.mesh();
    const double h = mesh.h();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(space.dim());
    const double pts[2] = {q1::gauss_lo, q1::gauss_hi};
    for (int c = 0; c < mesh.num_fine_cells(); ++c) {
        const auto lo = mesh.cell_lower(c);
        const auto d = space.cell_dofs(c);
        for (double px : pts)
            for (double py : pts) {
                const double fx = f(lo[0] + px * h, lo[1] + py * h);
                const auto N = q1::shape(px, py);
                for (int a = 0; a < 4; ++a) b[d[a]] += 0.25 * h * h * fx * N[a];
            }
    }
    return b;
}

// load vector for the constant source f
inline Eigen::VectorXd assemble_rhs(const BrokenSpace& space, double f) {
    return assemble_rhs(space, [f](double, double) { return f; });
}

// broken mass matrix (block diagonal per subdomain)
inline SpMat assemble_mass(const BrokenSpace& space) {
    const TwoLevelMesh& mesh = space.mesh();
    const Eigen::Matrix4d M = q1::mass(mesh.h());
    std::vector<Triplet> trips;
    for (int c = 0; c < mesh.num_fine_cells(); ++c) {
        const auto d = space.cell_dofs(c);
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                trips.emplace_back(d[i], d[k], M(i, k));
    }
    SpMat out(space.dim(), space.dim());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

// Parameter-separable DG operator: a_DG(.,.;mu) = sum_xi mu_xi * components[xi]
// + penalty. components[xi] carries the volume and consistency terms of
// component xi; the penalty is mu-independent by construction.
struct AffineOperator {
    int param_dim = 0;
    std::vector<SpMat> components;
    SpMat penalty;
    std::vector<double> face_sigma; // per mesh face, for patch problems

    SpMat at(const ParameterVector& mu) const {
        SpMat A = penalty;
        for (int q = 0; q < param_dim; ++q) A += mu[q] * components[q];
        return A;
    }

    Eigen::VectorXd apply(const ParameterVector& mu, const Eigen::VectorXd& v) const {
        Eigen::VectorXd y = penalty * v;
        for (int q = 0; q < param_dim; ++q) y += mu[q] * (components[q] * v);
        return y;
    }

    // u^T M_xi p, the xi-derivative of a_DG(u,p;mu)
    double component_bilinear(int xi, const Eigen::VectorXd& u, const Eigen::VectorXd& p) const {
        return u.dot(components[xi] * p);
    }
};

inline AffineOperator assemble_operator(const BrokenSpace& space, const AffineDiffusion& diff,
                                        const BoxParameterSpace& box, double sigma0 = 16.0,
                                        double beta = 1.0) {
    check_field_resolved(space.mesh(), diff);
    AffineOperator op;
    op.param_dim = diff.param_dim;
    FaceMatrices fm = assemble_face(space, diff, box, sigma0, beta);
    op.components = std::move(fm.consistency);
    for (const auto& comp : diff.components) {
        SpMat vol = assemble_volume(space, comp);
        op.components[comp.param_index] += vol;
    }
    op.penalty = std::move(fm.penalty);
    op.face_sigma = std::move(fm.sigma);
    return op;
}

// Cached sparse Cholesky factorization (SPD system matrices only).
class SparseFactorization {
public:
    explicit SparseFactorization(const SpMat& A)
        : ldlt_(std::make_unique<Eigen::SimplicialLDLT<SpMat>>()) {
        ldlt_->compute(A);
        // a non-positive pivot signals loss of coercivity
        if (ldlt_->info() != Eigen::Success || ldlt_->vectorD().minCoeff() <= 0.0)
            throw std::runtime_error("SparseFactorization: factorization failed "
                                     "(operator not SPD; check coercivity / penalty)");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd x = ldlt_->solve(b);
        if (ldlt_->info() != Eigen::Success)
            throw std::runtime_error("SparseFactorization: solve failed");
        return x;
    }

private:
    std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
};

// SPD product on the broken space: A(mu_ref)-weighted broken H^1 semi-norm
// plus the jump penalty. Fixed once per run; Riesz representatives and dual
// norms of residuals are taken w.r.t. this matrix.
class EnergyProduct {
public:
    explicit EnergyProduct(SpMat G) : G_(std::move(G)), fact_(G_) {}

    const SpMat& matrix() const { return G_; }

    double norm(const Eigen::VectorXd& v) const {
        return std::sqrt(std::max(0.0, v.dot(G_ * v)));
    }

    Eigen::VectorXd riesz(const Eigen::VectorXd& r) const { return fact_.solve(r); }

    // ||r||_{V'} = sqrt(r^T G^{-1} r); zero iff r = 0
    double dual_norm(const Eigen::VectorXd& r) const {
        return std::sqrt(std::max(0.0, r.dot(fact_.solve(r))));
    }

private:
    SpMat G_;
    SparseFactorization fact_;
};

inline EnergyProduct make_energy_product(const BrokenSpace& space, const AffineDiffusion& diff,
                                         const BoxParameterSpace& box,
                                         const ParameterVector& mu_ref, double sigma0 = 16.0,
                                         double beta = 1.0) {
    FaceMatrices fm = assemble_face(space, diff, box, sigma0, beta);
    SpMat G = fm.penalty;
    for (const auto& comp : diff.components)
        G += mu_ref[comp.param_index] * assemble_volume(space, comp);
    return EnergyProduct(std::move(G));
}

// coordinate-triplet text dump (row col value per line), for debugging
inline void dump_matrix_triplets(const SpMat& M, std::ostream& os) {
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace lrbopt

#endif
