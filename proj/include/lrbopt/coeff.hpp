#ifndef LRBOPT_COEFF_HPP
#define LRBOPT_COEFF_HPP

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lrbopt/rng.hpp"

namespace lrbopt {

using ParameterVector = Eigen::VectorXd;

// Box-shaped admissible parameter set, lower <= mu <= upper componentwise.
struct BoxParameterSpace {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    BoxParameterSpace() = default;
    BoxParameterSpace(Eigen::VectorXd lo, Eigen::VectorXd up)
        : lower(std::move(lo)), upper(std::move(up)) {
        if (lower.size() != upper.size())
            throw std::invalid_argument("BoxParameterSpace: bound dimensions differ");
        if ((lower.array() > upper.array()).any())
            throw std::invalid_argument("BoxParameterSpace: lower > upper");
    }

    int dim() const { return static_cast<int>(lower.size()); }

    bool contains(const ParameterVector& mu, double tol = 0.0) const {
        return mu.size() == lower.size() &&
               (mu.array() >= lower.array() - tol).all() &&
               (mu.array() <= upper.array() + tol).all();
    }

    ParameterVector project(const ParameterVector& mu) const {
        if (mu.size() != lower.size())
            throw std::invalid_argument("project_to_box: dimension mismatch");
        return mu.cwiseMax(lower).cwiseMin(upper);
    }

    ParameterVector midpoint() const { return 0.5 * (lower + upper); }

    ParameterVector random(Rng& rng) const {
        ParameterVector mu(dim());
        for (int i = 0; i < dim(); ++i) mu[i] = rng.uniform(lower[i], upper[i]);
        return mu;
    }

    // uniform in the box shrunk by `margin` on every side
    ParameterVector random_interior(Rng& rng, double margin) const {
        ParameterVector mu(dim());
        for (int i = 0; i < dim(); ++i) {
            const double lo = lower[i] + margin * (upper[i] - lower[i]);
            const double hi = upper[i] - margin * (upper[i] - lower[i]);
            mu[i] = rng.uniform(lo, std::max(lo, hi));
        }
        return mu;
    }
};

inline ParameterVector project_to_box(const BoxParameterSpace& box, const ParameterVector& mu) {
    return box.project(mu);
}

// Piecewise-constant scalar field on an N x N grid over [0,1]^2,
// values stored row-major (iy*resolution + ix).
struct MultiscaleField {
    int resolution = 0;
    Eigen::VectorXd values;

    double value_at(double x, double y) const {
        const int ix = std::min(static_cast<int>(x * resolution), resolution - 1);
        const int iy = std::min(static_cast<int>(y * resolution), resolution - 1);
        return values[iy * resolution + ix];
    }
};

inline MultiscaleField sample_field(int resolution, double lo, double hi, std::uint64_t seed) {
    if (resolution < 1) throw std::invalid_argument("sample_field: resolution must be >= 1");
    if (lo > hi) throw std::invalid_argument("sample_field: empty value range");
    MultiscaleField f;
    f.resolution = resolution;
    f.values.resize(static_cast<Eigen::Index>(resolution) * resolution);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] = rng.uniform(lo, hi);
    return f;
}

// One affine component mu_xi * A_xi(x): a multiscale field restricted to an
// axis-aligned block; zero outside the block.
struct DiffusionComponent {
    int param_index = 0;
    std::shared_ptr<const MultiscaleField> field;
    std::array<double, 2> block_lo{0.0, 0.0};
    std::array<double, 2> block_hi{1.0, 1.0};
    double min_on_support = 0.0;
    double max_on_support = 0.0;

    // A point on a block seam belongs to the block above/right of it; the
    // outermost blocks keep their outer edge.
    bool covers(double x, double y) const {
        const auto in = [](double t, double lo, double hi) {
            return t >= lo && (t < hi || (hi >= 1.0 - 1e-14 && t <= 1.0));
        };
        return in(x, block_lo[0], block_hi[0]) && in(y, block_lo[1], block_hi[1]);
    }

    double value(double x, double y) const {
        return covers(x, y) ? field->value_at(x, y) : 0.0;
    }

    void compute_support_range() {
        const int res = field->resolution;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                // include every field cell overlapping the block
                const double x0 = static_cast<double>(ix) / res, x1 = (ix + 1.0) / res;
                const double y0 = static_cast<double>(iy) / res, y1 = (iy + 1.0) / res;
                if (x1 <= block_lo[0] || x0 >= block_hi[0]) continue;
                if (y1 <= block_lo[1] || y0 >= block_hi[1]) continue;
                const double v = field->values[iy * res + ix];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        min_on_support = lo;
        max_on_support = hi;
    }
};

// Parameter-separable diffusion A(mu)(x) = sum_xi mu_xi A_xi(x). Regions
// partition the domain by which components overlap there; they feed the
// min-theta coercivity lower bound and the continuity upper bound.
struct AffineDiffusion {
    int param_dim = 0;
    std::vector<DiffusionComponent> components;
    std::vector<std::vector<int>> regions; // component indices active on each region

    double evaluate(const ParameterVector& mu, double x, double y) const {
        if (mu.size() != param_dim)
            throw std::invalid_argument("evaluate_diffusion: parameter dimension mismatch");
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
            throw std::out_of_range("evaluate_diffusion: point outside domain");
        double v = 0.0;
        for (const auto& c : components) v += mu[c.param_index] * c.value(x, y);
        return v;
    }

    // min-theta style pointwise lower bound on A(mu): on every region the
    // active components are bounded below by their support minima.
    double alpha_lb(const ParameterVector& mu) const {
        double a = std::numeric_limits<double>::infinity();
        for (const auto& reg : regions) {
            double v = 0.0;
            for (int ci : reg) v += mu[components[ci].param_index] * components[ci].min_on_support;
            a = std::min(a, v);
        }
        return a;
    }

    // pointwise upper bound on A(mu)
    double gamma_ub(const ParameterVector& mu) const {
        double g = 0.0;
        for (const auto& reg : regions) {
            double v = 0.0;
            for (int ci : reg) v += mu[components[ci].param_index] * components[ci].max_on_support;
            g = std::max(g, v);
        }
        return g;
    }
};

inline double evaluate_diffusion(const AffineDiffusion& diff, const ParameterVector& mu,
                                 double x, double y) {
    return diff.evaluate(mu, x, y);
}

// Constant-coefficient diffusion A(mu) = mu_0 * value, one parameter.
// Used for manufactured-solution and oracle setups.
inline AffineDiffusion make_constant_diffusion(double value = 1.0) {
    AffineDiffusion d;
    d.param_dim = 1;
    DiffusionComponent c;
    c.param_index = 0;
    auto f = std::make_shared<MultiscaleField>();
    f->resolution = 1;
    f->values.resize(1);
    f->values[0] = value;
    c.field = std::move(f);
    c.compute_support_range();
    d.components.push_back(std::move(c));
    d.regions.push_back({0});
    return d;
}

inline BoxParameterSpace unit_parameter_box() {
    Eigen::VectorXd lo(1), up(1);
    lo[0] = 1.0;
    up[0] = 1.0;
    return BoxParameterSpace(lo, up);
}

struct ThermalBlockProblem {
    AffineDiffusion diffusion;
    BoxParameterSpace box;
};

// 4x4 thermal-block diffusion A(mu) = A^1(mu) + A^2(mu) with two multiscale
// coefficient fields on N1 x N1 and N2 x N2 grids, values in [0.9,1.1].
// Parameter layout (1-based): xi = 4(j-1)+i for A^1 block (i,j), shifted by
// 16 for A^2. The low-conductivity middle blocks i,j in {2,3} get the
// restricted bounds [1,1.2]; all others [1,4].
inline ThermalBlockProblem make_thermal_block(int n1, int n2, std::uint64_t field_seed,
                                              double value_lo = 0.9, double value_hi = 1.1) {
    ThermalBlockProblem tb;
    tb.diffusion.param_dim = 32;
    auto f1 = std::make_shared<MultiscaleField>(sample_field(n1, value_lo, value_hi, field_seed));
    auto f2 = std::make_shared<MultiscaleField>(sample_field(n2, value_lo, value_hi, field_seed + 1));

    Eigen::VectorXd lower = Eigen::VectorXd::Constant(32, 1.0);
    Eigen::VectorXd upper = Eigen::VectorXd::Constant(32, 4.0);

    for (int level = 0; level < 2; ++level) {
        for (int bj = 0; bj < 4; ++bj)
            for (int bi = 0; bi < 4; ++bi) {
                DiffusionComponent c;
                c.param_index = 16 * level + 4 * bj + bi;
                c.field = (level == 0) ? f1 : f2;
                c.block_lo = {bi * 0.25, bj * 0.25};
                c.block_hi = {(bi + 1) * 0.25, (bj + 1) * 0.25};
                c.compute_support_range();
                if (bi >= 1 && bi <= 2 && bj >= 1 && bj <= 2)
                    upper[c.param_index] = 1.2;
                tb.diffusion.components.push_back(std::move(c));
            }
    }
    // one region per block; both levels are active there
    for (int bj = 0; bj < 4; ++bj)
        for (int bi = 0; bi < 4; ++bi)
            tb.diffusion.regions.push_back({4 * bj + bi, 16 + 4 * bj + bi});

    tb.box = BoxParameterSpace(std::move(lower), std::move(upper));
    return tb;
}

// Serialize field values as flat CSV (row-major), for reproducibility audits.
inline std::string field_to_csv(const MultiscaleField& f) {
    std::string out;
    char buf[32];
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", f.values[i]);
        out += buf;
        out += (i + 1 < f.values.size()) ? ',' : '\n';
    }
    return out;
}

} // namespace lrbopt

#endif
