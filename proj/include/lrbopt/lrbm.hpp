#ifndef LRBOPT_LRBM_HPP
#define LRBOPT_LRBM_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <atomic>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lrbopt/dg_core.hpp"
#include "lrbopt/fom.hpp"
#include "lrbopt/grid.hpp"
#include "lrbopt/rng.hpp"

namespace lrbopt {

// Lagrangian partition of unity w.r.t. T_H, interpolated on the local fine
// grids: per subdomain the 4 coarse bilinear corner hats (pre-orthonormalization).
inline std::vector<Eigen::MatrixXd> pou_functions(const BrokenSpace& space) {
    const TwoLevelMesh& mesh = space.mesh();
    const int s = mesh.fine_per_subdomain();
    const int np = space.nodes_per_axis();
    std::vector<Eigen::MatrixXd> out(mesh.num_subdomains());
    for (int j = 0; j < mesh.num_subdomains(); ++j) {
        Eigen::MatrixXd V(space.dofs_per_subdomain(), 4);
        for (int ly = 0; ly < np; ++ly)
            for (int lx = 0; lx < np; ++lx) {
                const double xi = static_cast<double>(lx) / s;
                const double eta = static_cast<double>(ly) / s;
                const auto N = q1::shape(xi, eta);
                for (int c = 0; c < 4; ++c) V(ly * np + lx, c) = N[c];
            }
        out[j] = std::move(V);
    }
    return out;
}

// The LRBM surrogate: per-subdomain reduced bases V_N^j (orthonormal w.r.t.
// the local energy product), the projected parameter-separable operator with
// block sparsity over interface-coupled subdomain pairs, the residual-based
// error surrogate, and both enrichment mechanisms.
class ReducedModel {
public:
    explicit ReducedModel(const FomModel& fom, double ortho_drop_tol = 1e-7)
        : fom_(&fom), drop_tol_(ortho_drop_tol), beta_(fom.penalty_exponent()) {
        if (fom.objective_spec().u_d.size() != fom.space().dim())
            throw std::invalid_argument("ReducedModel: model has no objective attached");
        const BrokenSpace& space = fom.space();
        const int n_sub = fom.mesh().num_subdomains();
        dps_ = space.dofs_per_subdomain();

        // local restrictions of the energy product
        local_product_.resize(n_sub);
        for (int j = 0; j < n_sub; ++j) {
            local_product_[j] = Eigen::MatrixXd::Zero(dps_, dps_);
            const int off = space.subdomain_offset(j);
            const SpMat& G = fom.product().matrix();
            for (int col = 0; col < dps_; ++col)
                for (SpMat::InnerIterator it(G, off + col); it; ++it) {
                    const int r = static_cast<int>(it.row()) - off;
                    if (r >= 0 && r < dps_) local_product_[j](r, col) = it.value();
                }
        }

        // coupling pattern: self + subdomains sharing an interface face
        coupled_.resize(n_sub);
        for (int j = 0; j < n_sub; ++j) {
            coupled_[j] = fom.mesh().edge_neighbors(j);
            coupled_[j].push_back(j);
            std::sort(coupled_[j].begin(), coupled_[j].end());
        }

        basis_.assign(n_sub, Eigen::MatrixXd(dps_, 0));
        comp_hat_.resize(fom.op().param_dim);
        l_hat_.assign(n_sub, Eigen::VectorXd(0));
        md_hat_.assign(n_sub, Eigen::VectorXd(0));
        const Eigen::VectorXd mud_m = fom.mass() * fom.objective_spec().u_d;
        mass_ud_ = mud_m;
        ud_mass_ud_ = fom.objective_spec().u_d.dot(mud_m);

        // initialize with the partition of unity
        const auto pou = pou_functions(space);
        for (int j = 0; j < n_sub; ++j)
            for (int c = 0; c < 4; ++c) append_vector(j, pou[j].col(c));

        calibrate();
    }

    ReducedModel(const ReducedModel&) = delete;
    ReducedModel& operator=(const ReducedModel&) = delete;

    const FomModel& fom() const { return *fom_; }

    int num_subdomains() const { return static_cast<int>(basis_.size()); }
    const std::vector<Eigen::MatrixXd>& basis() const { return basis_; }

    std::vector<int> basis_sizes() const {
        std::vector<int> n(basis_.size());
        for (std::size_t j = 0; j < basis_.size(); ++j)
            n[j] = static_cast<int>(basis_[j].cols());
        return n;
    }

    int total_dim() const {
        int n = 0;
        for (const auto& V : basis_) n += static_cast<int>(V.cols());
        return n;
    }

    std::vector<int> offsets() const {
        std::vector<int> off(basis_.size());
        int acc = 0;
        for (std::size_t j = 0; j < basis_.size(); ++j) {
            off[j] = acc;
            acc += static_cast<int>(basis_[j].cols());
        }
        return off;
    }

    // dense reduced system matrix at mu (block-sparse over coupled pairs)
    Eigen::MatrixXd reduced_system(const ParameterVector& mu) const {
        const auto off = offsets();
        const int n = total_dim();
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        auto add = [&](const BlockMap& m, double scale) {
            for (const auto& [key, B] : m)
                A.block(off[key.first], off[key.second], B.rows(), B.cols()) += scale * B;
        };
        add(pen_hat_, 1.0);
        for (int q = 0; q < fom_->op().param_dim; ++q) add(comp_hat_[q], mu[q]);
        return A;
    }

    Eigen::VectorXd reduced_rhs() const {
        const auto off = offsets();
        Eigen::VectorXd b(total_dim());
        for (std::size_t j = 0; j < basis_.size(); ++j) b.segment(off[j], l_hat_[j].size()) = l_hat_[j];
        return b;
    }

    Eigen::VectorXd solve_reduced_primal(const ParameterVector& mu) const {
        const Eigen::LLT<Eigen::MatrixXd> llt = factor_reduced(mu);
        ++reduced_primal_solves_;
        return llt.solve(reduced_rhs());
    }

    Eigen::VectorXd solve_reduced_dual(const ParameterVector& mu, const Eigen::VectorXd& cu) const {
        const Eigen::LLT<Eigen::MatrixXd> llt = factor_reduced(mu);
        ++reduced_dual_solves_;
        return llt.solve(reduced_dual_rhs(cu));
    }

    // J_N and its adjoint gradient from N-dimensional quantities only
    double reduced_value(const ParameterVector& mu, const Eigen::VectorXd& cu) const {
        const auto& spec = fom_->objective_spec();
        const Eigen::VectorXd dmu = mu - spec.mu_d;
        const double misfit = mass_quadratic(cu) - 2.0 * md_dot(cu) + ud_mass_ud_;
        return 0.5 * spec.sigma_d * misfit + 0.5 * dmu.dot(spec.sigma_mu.cwiseProduct(dmu)) + 1.0;
    }

    Eigen::VectorXd reduced_gradient(const ParameterVector& mu, const Eigen::VectorXd& cu,
                                     const Eigen::VectorXd& cp) const {
        const auto& spec = fom_->objective_spec();
        Eigen::VectorXd g = spec.sigma_mu.cwiseProduct(mu - spec.mu_d);
        const auto off = offsets();
        for (int q = 0; q < fom_->op().param_dim; ++q)
            for (const auto& [key, B] : comp_hat_[q])
                g[q] -= cu.segment(off[key.first], B.rows())
                            .dot(B * cp.segment(off[key.second], B.cols()));
        return g;
    }

    // error surrogate Delta_J(mu) >= 0:
    //   Delta_pr = ||r_pr(u_N)||_{V'} / alpha_eff(mu)
    //   Delta_J  = Delta_pr * ||r_du(u_N,p_N)||_{V'} + (gamma_eff/alpha_eff) * Delta_pr^2
    // with alpha_eff/gamma_eff the min-theta bounds scaled by the product
    // equivalence constants calibrated once on this mesh.
    double estimate(const ParameterVector& mu, const Eigen::VectorXd& cu,
                    const Eigen::VectorXd& cp) const {
        const BrokenFunction u = reconstruct(cu);
        const BrokenFunction p = reconstruct(cp);
        const Eigen::VectorXd r_pr = fom_->rhs() - fom_->op().apply(mu, u);
        const Eigen::VectorXd r_du = fom_->dual_rhs(u) - fom_->op().apply(mu, p);
        const double npr = fom_->product().dual_norm(r_pr);
        const double ndu = fom_->product().dual_norm(r_du);
        const double a = alpha_eff(mu);
        const double g = gamma_eff(mu);
        const double d_pr = npr / a;
        return d_pr * ndu + (g / a) * d_pr * d_pr;
    }

    double alpha_eff(const ParameterVector& mu) const {
        return c_alpha_ * fom_->diffusion().alpha_lb(mu);
    }
    double gamma_eff(const ParameterVector& mu) const {
        return c_gamma_ * fom_->diffusion().gamma_ub(mu);
    }
    double coercivity_calibration() const { return c_alpha_; }
    double continuity_calibration() const { return c_gamma_; }

    struct Eval {
        double value = 0.0;
        Eigen::VectorXd gradient;
        double delta = 0.0;
        Eigen::VectorXd cu;
        Eigen::VectorXd cp;
    };

    // primal + dual + value + gradient + estimator, one factorization
    Eval evaluate(const ParameterVector& mu) const {
        const Eigen::LLT<Eigen::MatrixXd> llt = factor_reduced(mu);
        Eval e;
        ++reduced_primal_solves_;
        e.cu = llt.solve(reduced_rhs());
        ++reduced_dual_solves_;
        e.cp = llt.solve(reduced_dual_rhs(e.cu));
        e.value = reduced_value(mu, e.cu);
        e.gradient = reduced_gradient(mu, e.cu, e.cp);
        e.delta = estimate(mu, e.cu, e.cp);
        return e;
    }

    BrokenFunction reconstruct(const Eigen::VectorXd& c) const {
        const BrokenSpace& space = fom_->space();
        BrokenFunction u = BrokenFunction::Zero(space.dim());
        const auto off = offsets();
        for (std::size_t j = 0; j < basis_.size(); ++j)
            if (basis_[j].cols() > 0)
                u.segment(space.subdomain_offset(static_cast<int>(j)), dps_) =
                    basis_[j] * c.segment(off[j], basis_[j].cols());
        return u;
    }

    // One oversampling sweep at mu (Eq.-(9)-type corrections): for every
    // coarse cell solve the patch problem with weak Dirichlet data taken from
    // the current reduced solution, then extend V_N^j by the correction
    // restricted to T_j. Returns the number of accepted basis vectors.
    int enrich_local(const ParameterVector& mu, const Eigen::VectorXd& cu) {
        const BrokenFunction u_N = reconstruct(cu);
        const int n_sub = num_subdomains();
        std::vector<Eigen::VectorXd> candidates(n_sub);
        for (int j = 0; j < n_sub; ++j) candidates[j] = patch_correction_impl(mu, u_N, j);
        // commit phase: patch solves are independent, mutation is serialized
        int added = 0;
        for (int j = 0; j < n_sub; ++j)
            if (append_vector(j, candidates[j])) ++added;
        return added;
    }

    int enrich_local(const ParameterVector& mu) {
        return enrich_local(mu, solve_reduced_primal(mu));
    }

    // snapshot enrichment with the primal and dual FOM approximations
    int enrich_global(const BrokenFunction& u_h, const BrokenFunction& p_h) {
        const BrokenSpace& space = fom_->space();
        int added = 0;
        for (int j = 0; j < num_subdomains(); ++j) {
            const int off = space.subdomain_offset(j);
            if (append_vector(j, u_h.segment(off, dps_))) ++added;
            if (append_vector(j, p_h.segment(off, dps_))) ++added;
        }
        return added;
    }

    long reduced_solve_count() const {
        return reduced_primal_solves_.load() + reduced_dual_solves_.load();
    }
    long patch_solve_count() const { return patch_solves_.load(); }
    void reset_counters() const {
        reduced_primal_solves_ = 0;
        reduced_dual_solves_ = 0;
        patch_solves_ = 0;
    }

    // per-subdomain basis sizes as CSV rows "iteration,j,N_j"
    std::string basis_sizes_csv(int iteration) const {
        std::string out;
        const auto n = basis_sizes();
        for (std::size_t j = 0; j < n.size(); ++j)
            out += std::to_string(iteration) + "," + std::to_string(j) + "," +
                   std::to_string(n[j]) + "\n";
        return out;
    }

    // local correction solve on the oversampling patch of coarse cell j:
    // the full local function w = u_N + phi is solved for, with the traces of
    // u_N outside the patch entering through the SIPG face terms; returns
    // phi restricted to T_j.
    Eigen::VectorXd patch_correction(const ParameterVector& mu, const BrokenFunction& u_N,
                                     int j) const {
        return patch_correction_impl(mu, u_N, j);
    }

private:
    struct Key {
        int first, second;
        bool operator<(const Key& o) const {
            return first < o.first || (first == o.first && second < o.second);
        }
    };
    using BlockMap = std::map<Key, Eigen::MatrixXd>;

    Eigen::LLT<Eigen::MatrixXd> factor_reduced(const ParameterVector& mu) const {
        Eigen::LLT<Eigen::MatrixXd> llt(reduced_system(mu));
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("ReducedModel: singular reduced system (basis degeneration)");
        return llt;
    }

    Eigen::VectorXd reduced_dual_rhs(const Eigen::VectorXd& cu) const {
        const auto off = offsets();
        Eigen::VectorXd r(total_dim());
        for (int j = 0; j < num_subdomains(); ++j) {
            const Eigen::MatrixXd& Mjj = mass_hat_.at(Key{j, j});
            r.segment(off[j], basis_[j].cols()) =
                fom_->objective_spec().sigma_d *
                (Mjj * cu.segment(off[j], basis_[j].cols()) - md_hat_[j]);
        }
        return r;
    }

    double mass_quadratic(const Eigen::VectorXd& cu) const {
        const auto off = offsets();
        double v = 0.0;
        for (const auto& [key, B] : mass_hat_)
            v += cu.segment(off[key.first], B.rows()).dot(B * cu.segment(off[key.second], B.cols()));
        return v;
    }

    double md_dot(const Eigen::VectorXd& cu) const {
        const auto off = offsets();
        double v = 0.0;
        for (std::size_t j = 0; j < basis_.size(); ++j)
            v += md_hat_[j].dot(cu.segment(off[j], md_hat_[j].size()));
        return v;
    }

    // orthonormalize against V_N^j w.r.t. the local energy product (modified
    // Gram-Schmidt with one reorthogonalization pass); drop near-dependents
    bool append_vector(int j, Eigen::VectorXd v) {
        const Eigen::MatrixXd& Gj = local_product_[j];
        const double n0 = std::sqrt(std::max(0.0, v.dot(Gj * v)));
        if (!(n0 > 0.0)) return false;
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < basis_[j].cols(); ++k) {
                const auto bk = basis_[j].col(k);
                v -= bk.dot(Gj * v) * bk;
            }
        const double nn = std::sqrt(std::max(0.0, v.dot(Gj * v)));
        if (nn <= drop_tol_ * n0) return false;
        v /= nn;
        const int newcol = static_cast<int>(basis_[j].cols());
        basis_[j].conservativeResize(Eigen::NoChange, newcol + 1);
        basis_[j].col(newcol) = v;
        project_new_column(j);
        return true;
    }

    // extend all projected quantities by the last basis column of subdomain j
    void project_new_column(int j) {
        const BrokenSpace& space = fom_->space();
        const int off_j = space.subdomain_offset(j);
        const Eigen::VectorXd v = basis_[j].col(basis_[j].cols() - 1);

        auto update = [&](BlockMap& bm, const SpMat& M, const std::vector<int>& coupled) {
            const Eigen::VectorXd y = M.middleCols(off_j, dps_) * v;
            const int nj = static_cast<int>(basis_[j].cols());
            for (int i : coupled) {
                const Eigen::VectorXd yi = y.segment(space.subdomain_offset(i), dps_);
                const Eigen::VectorXd ci = basis_[i].transpose() * yi;
                const int ni = static_cast<int>(basis_[i].cols());
                Eigen::MatrixXd& Bij = bm[Key{i, j}];
                Bij.conservativeResize(ni, nj);
                Bij.col(nj - 1) = ci;
                if (i == j) {
                    Bij.row(nj - 1) = ci.transpose(); // symmetric diagonal block
                } else {
                    Eigen::MatrixXd& Bji = bm[Key{j, i}];
                    Bji.conservativeResize(nj, ni);
                    Bji.row(nj - 1) = ci.transpose();
                }
            }
        };

        for (int q = 0; q < fom_->op().param_dim; ++q)
            update(comp_hat_[q], fom_->op().components[q], coupled_[j]);
        update(pen_hat_, fom_->op().penalty, coupled_[j]);
        const std::vector<int> self{j};
        update(mass_hat_, fom_->mass(), self);

        auto append_scalar = [&](Eigen::VectorXd& vec, double s) {
            vec.conservativeResize(vec.size() + 1);
            vec[vec.size() - 1] = s;
        };
        append_scalar(l_hat_[j], v.dot(fom_->rhs().segment(off_j, dps_)));
        append_scalar(md_hat_[j], v.dot(mass_ud_.segment(off_j, dps_)));
    }

    // helper shared by the calibration and estimator paths
    Eigen::VectorXd patch_correction_impl(const ParameterVector& mu, const BrokenFunction& u_N, int j) const {
        const BrokenSpace& space = fom_->space();
        const TwoLevelMesh& mesh = fom_->mesh();
        const AffineDiffusion& diff = fom_->diffusion();
        const OversamplingPatch P = patch(mesh, j);

        std::map<int, int> slot;
        for (std::size_t m = 0; m < P.members.size(); ++m)
            slot[P.members[m]] = static_cast<int>(m);
        const int nd = static_cast<int>(P.members.size()) * dps_;
        auto local_of = [&](int gdof) {
            return slot.at(gdof / dps_) * dps_ + (gdof % dps_);
        };

        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nd, nd);
        Eigen::VectorXd b(nd);
        for (int m : P.members)
            b.segment(slot[m] * dps_, dps_) = fom_->rhs().segment(space.subdomain_offset(m), dps_);

        // volume terms over the member cells
        const Eigen::Matrix4d K = q1::unit_stiffness();
        for (int c = 0; c < mesh.num_fine_cells(); ++c) {
            if (!P.contains(mesh.subdomain_of_cell(c))) continue;
            const auto ctr = mesh.cell_center(c);
            const double a = diff.evaluate(mu, ctr[0], ctr[1]);
            const auto d = space.cell_dofs(c);
            for (int p = 0; p < 4; ++p)
                for (int q = 0; q < 4; ++q)
                    A(local_of(d[p]), local_of(d[q])) += a * K(p, q);
        }

        // face terms
        const auto& sigma = fom_->op().face_sigma;
        for (std::size_t fi = 0; fi < mesh.faces().size(); ++fi) {
            const Face& face = mesh.faces()[fi];
            if (face.type == FaceType::inner) continue;
            const bool in_m = P.contains(mesh.subdomain_of_cell(face.cell_minus));
            const bool in_p =
                face.cell_plus >= 0 && P.contains(mesh.subdomain_of_cell(face.cell_plus));
            if (!in_m && !in_p) continue;
            const double pw = sigma[fi] * std::pow(face.length, 1.0 - beta_);

            if (face.type == FaceType::boundary) {
                // weak homogeneous Dirichlet, as in the global operator
                const FaceTrace t = face_trace(space, face, true);
                const auto cm = mesh.cell_center(face.cell_minus);
                const double am = diff.evaluate(mu, cm[0], cm[1]);
                for (int a = 0; a < 4; ++a)
                    for (int bq = 0; bq < 4; ++bq)
                        A(local_of(t.dofs[a]), local_of(t.dofs[bq])) +=
                            pw * t.value[a] * t.value[bq] -
                            face.length * am *
                                (t.value[a] * t.dnormal[bq] + t.dnormal[a] * t.value[bq]);
                continue;
            }

            if (in_m && in_p) {
                // interface interior to the patch: standard two-sided terms
                const FaceTrace tm = face_trace(space, face, true);
                const FaceTrace tp = face_trace(space, face, false);
                const auto cm = mesh.cell_center(face.cell_minus);
                const auto cp = mesh.cell_center(face.cell_plus);
                const double am = diff.evaluate(mu, cm[0], cm[1]);
                const double ap = diff.evaluate(mu, cp[0], cp[1]);
                std::array<int, 8> dofs{};
                std::array<double, 8> jump{}, flux{};
                for (int a = 0; a < 4; ++a) {
                    dofs[a] = local_of(tm.dofs[a]);
                    jump[a] = tm.value[a];
                    flux[a] = 0.5 * am * tm.dnormal[a];
                    dofs[4 + a] = local_of(tp.dofs[a]);
                    jump[4 + a] = -tp.value[a];
                    flux[4 + a] = 0.5 * ap * tp.dnormal[a];
                }
                for (int a = 0; a < 8; ++a)
                    for (int bq = 0; bq < 8; ++bq)
                        A(dofs[a], dofs[bq]) += pw * jump[a] * jump[bq] -
                                                face.length * (jump[a] * flux[bq] + flux[a] * jump[bq]);
                continue;
            }

            // hull face: freeze the outside trace of u_N as weak Dirichlet data.
            // orient the normal from the inner (member) side to the outside
            const bool minus_inner = in_m;
            FaceTrace ti = face_trace(space, face, minus_inner);
            FaceTrace to = face_trace(space, face, !minus_inner);
            double orient = minus_inner ? 1.0 : -1.0;
            const int ci = minus_inner ? face.cell_minus : face.cell_plus;
            const int co = minus_inner ? face.cell_plus : face.cell_minus;
            const auto cci = mesh.cell_center(ci);
            const auto cco = mesh.cell_center(co);
            const double ai = diff.evaluate(mu, cci[0], cci[1]);
            const double ao = diff.evaluate(mu, cco[0], cco[1]);
            double g_out = 0.0, dng_out = 0.0;
            for (int a = 0; a < 4; ++a) {
                g_out += to.value[a] * u_N[to.dofs[a]];
                dng_out += orient * to.dnormal[a] * u_N[to.dofs[a]];
            }
            for (int a = 0; a < 4; ++a) {
                const int la = local_of(ti.dofs[a]);
                const double ja = ti.value[a];
                const double fa = 0.5 * ai * orient * ti.dnormal[a];
                for (int bq = 0; bq < 4; ++bq) {
                    const double jb = ti.value[bq];
                    const double fb = 0.5 * ai * orient * ti.dnormal[bq];
                    A(la, local_of(ti.dofs[bq])) +=
                        pw * ja * jb - face.length * (ja * fb + fa * jb);
                }
                b[la] += pw * g_out * ja + face.length * fa * g_out +
                         face.length * 0.5 * ao * dng_out * ja;
            }
        }

        ++patch_solves_;
        const Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("ReducedModel: patch solve breakdown");
        const Eigen::VectorXd w = llt.solve(b);

        // phi_T = w - u_N on the patch, restricted to the center cell
        const int center_off = space.subdomain_offset(j);
        Eigen::VectorXd phi = w.segment(slot[j] * dps_, dps_) - u_N.segment(center_off, dps_);
        return phi;
    }

    // product-equivalence constants: extreme generalized eigenvalues of
    // (a_DG(mu), G) at a few box corners, scaled by the min/max-theta bounds
    void calibrate() {
        const BoxParameterSpace& box = fom_->box();
        std::vector<ParameterVector> samples{box.lower, box.upper, box.midpoint()};
        Rng rng(0x5eed);
        for (int t = 0; t < 2; ++t) {
            ParameterVector mu(box.dim());
            for (int i = 0; i < box.dim(); ++i)
                mu[i] = (rng.uniform() < 0.5) ? box.lower[i] : box.upper[i];
            samples.push_back(mu);
        }
        c_alpha_ = 1e300;
        c_gamma_ = 0.0;
        const int n = fom_->space().dim();
        for (const auto& mu : samples) {
            const SpMat A = fom_->op().at(mu);
            const SparseFactorization fa(A);
            Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
            // inverse iteration for the smallest eigenvalue of (A, G)
            for (int it = 0; it < 40; ++it) {
                x = fa.solve(fom_->product().matrix() * x);
                x /= x.norm();
            }
            const double lmin = x.dot(A * x) / x.dot(fom_->product().matrix() * x);
            // power iteration for the largest
            Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
            for (int it = 0; it < 40; ++it) {
                y = fom_->product().riesz(A * y);
                y /= y.norm();
            }
            const double lmax = y.dot(A * y) / y.dot(fom_->product().matrix() * y);
            c_alpha_ = std::min(c_alpha_, lmin / fom_->diffusion().alpha_lb(mu));
            c_gamma_ = std::max(c_gamma_, lmax / fom_->diffusion().gamma_ub(mu));
        }
    }

    const FomModel* fom_;
    double drop_tol_;
    double beta_; // matches the operator assembly
    int dps_ = 0;
    std::vector<Eigen::MatrixXd> basis_;
    std::vector<Eigen::MatrixXd> local_product_;
    std::vector<std::vector<int>> coupled_;
    std::vector<BlockMap> comp_hat_;
    BlockMap pen_hat_;
    BlockMap mass_hat_;
    std::vector<Eigen::VectorXd> l_hat_;
    std::vector<Eigen::VectorXd> md_hat_;
    Eigen::VectorXd mass_ud_;
    double ud_mass_ud_ = 0.0;
    double c_alpha_ = 1.0;
    double c_gamma_ = 1.0;
    mutable std::atomic<long> reduced_primal_solves_{0};
    mutable std::atomic<long> reduced_dual_solves_{0};
    mutable std::atomic<long> patch_solves_{0};
};

} // namespace lrbopt

#endif
