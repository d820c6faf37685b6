#ifndef LRBOPT_FOM_HPP
#define LRBOPT_FOM_HPP

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "lrbopt/coeff.hpp"
#include "lrbopt/dg_core.hpp"
#include "lrbopt/grid.hpp"

namespace lrbopt {

// Quadratic tracking objective
//   J(v,mu) = sigma_d/2 int (v - u_d)^2 + 1/2 sum_i sigma_i (mu_i - mu_d_i)^2 + 1
struct ObjectiveSpec {
    double sigma_d = 0.0;
    Eigen::VectorXd sigma_mu;
    ParameterVector mu_d;
    BrokenFunction u_d;
};

struct FomSolution {
    ParameterVector mu;
    BrokenFunction primal;
    BrokenFunction dual;
    double value = 0.0;
    Eigen::VectorXd gradient;
};

// The DG-MsFEM full-order model: primal/dual solves, objective, adjoint
// gradient. Matrices are assembled once (parameter-separable); each solve
// owns its factorization, so concurrent solves at distinct mu are safe.
class FomModel {
public:
    FomModel(TwoLevelMesh mesh, AffineDiffusion diffusion, BoxParameterSpace box,
             double f_const = 10.0, double sigma0 = 16.0, double beta = 1.0)
        : mesh_(std::move(mesh)),
          space_(mesh_),
          diffusion_(std::move(diffusion)),
          box_(std::move(box)),
          f_(f_const),
          sigma0_(sigma0),
          beta_(beta),
          op_(assemble_operator(space_, diffusion_, box_, sigma0, beta)),
          rhs_(assemble_rhs(space_, f_const)),
          mass_(assemble_mass(space_)),
          product_(make_energy_product(space_, diffusion_, box_, box_.midpoint(), sigma0, beta)) {}

    FomModel(const FomModel&) = delete;
    FomModel& operator=(const FomModel&) = delete;

    const TwoLevelMesh& mesh() const { return mesh_; }
    const BrokenSpace& space() const { return space_; }
    const AffineDiffusion& diffusion() const { return diffusion_; }
    const BoxParameterSpace& box() const { return box_; }
    const AffineOperator& op() const { return op_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }
    const SpMat& mass() const { return mass_; }
    const EnergyProduct& product() const { return product_; }
    double source() const { return f_; }
    double penalty_factor() const { return sigma0_; }
    double penalty_exponent() const { return beta_; }

    void set_objective(ObjectiveSpec spec) {
        if (spec.sigma_d < 0.0) throw std::invalid_argument("objective: sigma_d must be >= 0");
        if (spec.sigma_mu.size() != box_.dim() || spec.mu_d.size() != box_.dim())
            throw std::invalid_argument("objective: parameter dimension mismatch");
        if (spec.u_d.size() != space_.dim())
            throw std::invalid_argument("objective: desired state has wrong dimension");
        objective_ = std::move(spec);
    }

    const ObjectiveSpec& objective_spec() const { return objective_; }

    // u_d := u_h(mu_d), the precomputed desired state on this mesh
    void set_tracking_objective(const ParameterVector& mu_d, double sigma_d,
                                const Eigen::VectorXd& sigma_mu) {
        ObjectiveSpec spec;
        spec.sigma_d = sigma_d;
        spec.sigma_mu = sigma_mu;
        spec.mu_d = mu_d;
        spec.u_d = solve_primal(mu_d);
        set_objective(std::move(spec));
    }

    SparseFactorization factorize(const ParameterVector& mu) const {
        return SparseFactorization(op_.at(mu));
    }

    BrokenFunction solve_primal(const ParameterVector& mu, const SparseFactorization& fact) const {
        ++primal_solves_;
        return fact.solve(rhs_);
    }

    BrokenFunction solve_primal(const ParameterVector& mu) const {
        return solve_primal(mu, factorize(mu));
    }

    // a_DG(q, p; mu) = sigma_d (u - u_d, q)  for all q; a_DG is symmetric,
    // so the dual solve reuses the primal factorization.
    BrokenFunction solve_dual(const ParameterVector& mu, const BrokenFunction& u,
                              const SparseFactorization& fact) const {
        ++dual_solves_;
        return fact.solve(dual_rhs(u));
    }

    BrokenFunction solve_dual(const ParameterVector& mu, const BrokenFunction& u) const {
        return solve_dual(mu, u, factorize(mu));
    }

    Eigen::VectorXd dual_rhs(const BrokenFunction& u) const {
        return objective_.sigma_d * (mass_ * (u - objective_.u_d));
    }

    double objective(const BrokenFunction& u, const ParameterVector& mu) const {
        if (mu.size() != box_.dim()) throw std::invalid_argument("objective: dimension mismatch");
        const Eigen::VectorXd e = u - objective_.u_d;
        const Eigen::VectorXd dmu = mu - objective_.mu_d;
        return 0.5 * objective_.sigma_d * e.dot(mass_ * e) +
               0.5 * dmu.dot(objective_.sigma_mu.cwiseProduct(dmu)) + 1.0;
    }

    // adjoint gradient: grad_xi = sigma_xi (mu_xi - mu_d_xi) - a_xi(u, p)
    // (l_DG and the penalty are mu-independent)
    Eigen::VectorXd gradient(const ParameterVector& mu, const BrokenFunction& u,
                             const BrokenFunction& p) const {
        Eigen::VectorXd g =
            objective_.sigma_mu.cwiseProduct(mu - objective_.mu_d);
        for (int q = 0; q < op_.param_dim; ++q) g[q] -= op_.component_bilinear(q, u, p);
        return g;
    }

    // primal + dual + value + gradient from a single factorization
    FomSolution solve(const ParameterVector& mu) const {
        const SparseFactorization fact = factorize(mu);
        FomSolution s;
        s.mu = mu;
        s.primal = solve_primal(mu, fact);
        s.dual = solve_dual(mu, s.primal, fact);
        s.value = objective(s.primal, mu);
        s.gradient = gradient(mu, s.primal, s.dual);
        return s;
    }

    struct OptimalityDefects {
        double primal;       // ||l - a(u, .; mu)||_{V'}
        double dual;         // ||dJ_u(u) - a(., p; mu)||_{V'}
        double stationarity; // ||mu - P_P(mu - g)||_2
    };

    OptimalityDefects optimality_residuals(const ParameterVector& mu, const BrokenFunction& u,
                                           const BrokenFunction& p) const {
        OptimalityDefects d;
        d.primal = product_.dual_norm(rhs_ - op_.apply(mu, u));
        d.dual = product_.dual_norm(dual_rhs(u) - op_.apply(mu, p));
        const Eigen::VectorXd g = gradient(mu, u, p);
        d.stationarity = (mu - box_.project(mu - g)).norm();
        return d;
    }

    // first-order criticality ||mu - P_P(mu - grad J_h)||_2, fresh solves
    double foc(const ParameterVector& mu) const {
        const FomSolution s = solve(mu);
        return (mu - box_.project(mu - s.gradient)).norm();
    }

    long primal_solve_count() const { return primal_solves_.load(); }
    long dual_solve_count() const { return dual_solves_.load(); }
    long fom_solve_count() const { return primal_solves_.load() + dual_solves_.load(); }
    void reset_counters() const {
        primal_solves_ = 0;
        dual_solves_ = 0;
    }

private:
    TwoLevelMesh mesh_;
    BrokenSpace space_;
    AffineDiffusion diffusion_;
    BoxParameterSpace box_;
    double f_;
    double sigma0_;
    double beta_;
    AffineOperator op_;
    Eigen::VectorXd rhs_;
    SpMat mass_;
    EnergyProduct product_;
    ObjectiveSpec objective_;
    mutable std::atomic<long> primal_solves_{0};
    mutable std::atomic<long> dual_solves_{0};
};

} // namespace lrbopt

#endif
