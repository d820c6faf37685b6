#include <catch2/catch_amalgamated.hpp>

#include "lrbopt/coeff.hpp"
#include "lrbopt/rng.hpp"

using namespace lrbopt;

namespace {

ThermalBlockProblem desk_problem() { return make_thermal_block(24, 48, 42); }

} // namespace

TEST_CASE("box projection") {
    const auto tb = desk_problem();
    SECTION("interior point unchanged") {
        ParameterVector mu = ParameterVector::Constant(32, 1.1);
        CHECK(project_to_box(tb.box, mu) == mu);
        // idempotent
        CHECK(tb.box.project(tb.box.project(mu)) == tb.box.project(mu));
    }
    SECTION("clamps above") {
        ParameterVector mu = ParameterVector::Constant(32, 1.5);
        mu[0] = 5.0;
        CHECK(project_to_box(tb.box, mu)[0] == 4.0);
    }
    SECTION("clamps below, component 25") {
        ParameterVector mu = ParameterVector::Constant(32, 1.1);
        mu[24] = 0.0;
        CHECK(project_to_box(tb.box, mu)[24] == 1.0);
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(project_to_box(tb.box, ParameterVector::Zero(5)),
                        std::invalid_argument);
    }
}

TEST_CASE("thermal block parameter space") {
    const auto tb = desk_problem();
    REQUIRE(tb.box.dim() == 32);
    CHECK((tb.box.lower.array() == 1.0).all());
    // 24 components bounded by 4, the 8 middle-block components by 1.2
    CHECK((tb.box.upper.array() == 4.0).count() == 24);
    CHECK((tb.box.upper.array() == 1.2).count() == 8);
    // middle blocks (i,j), i,j in {2,3}: xi = 4(j-1)+i and +16 (1-based)
    for (int xi : {6, 7, 10, 11, 22, 23, 26, 27}) CHECK(tb.box.upper[xi - 1] == 1.2);
}

TEST_CASE("sample_field") {
    SECTION("deterministic and in range") {
        const auto f1 = sample_field(24, 0.9, 1.1, 42);
        const auto f2 = sample_field(24, 0.9, 1.1, 42);
        CHECK(f1.values == f2.values);
        CHECK((f1.values.array() >= 0.9).all());
        CHECK((f1.values.array() <= 1.1).all());
        const auto f3 = sample_field(24, 0.9, 1.1, 43);
        CHECK(f1.values != f3.values);
    }
    SECTION("degenerate range") {
        const auto f = sample_field(1, 1.0, 1.0, 0);
        CHECK(f.values[0] == 1.0);
    }
    SECTION("invalid input") {
        CHECK_THROWS_AS(sample_field(0, 0.9, 1.1, 0), std::invalid_argument);
        CHECK_THROWS_AS(sample_field(4, 1.1, 0.9, 0), std::invalid_argument);
    }
}

TEST_CASE("evaluate_diffusion") {
    SECTION("constant fields sum to 2c") {
        // both levels identically 1, all mu_xi = c
        auto tb = make_thermal_block(1, 1, 0, 1.0, 1.0);
        const double c = 2.5;
        const ParameterVector mu = ParameterVector::Constant(32, c);
        CHECK(evaluate_diffusion(tb.diffusion, mu, 0.3, 0.7) == Catch::Approx(2 * c));
        CHECK(evaluate_diffusion(tb.diffusion, mu, 0.0, 0.99) == Catch::Approx(2 * c));
    }
    SECTION("lower bound at mu = lower") {
        const auto tb = desk_problem();
        Rng rng(3);
        for (int t = 0; t < 200; ++t) {
            const double x = rng.uniform(), y = rng.uniform();
            CHECK(evaluate_diffusion(tb.diffusion, tb.box.lower, x, y) >= 2 * 0.9);
        }
    }
    SECTION("disjoint block supports") {
        const auto tb = desk_problem();
        // x in block (1,1): only xi = 1 and 17 (1-based) contribute
        ParameterVector mu = ParameterVector::Zero(32);
        const double base = evaluate_diffusion(tb.diffusion, mu, 0.1, 0.1);
        CHECK(base == 0.0);
        mu[0] = 1.0;
        mu[16] = 1.0;
        const double v = evaluate_diffusion(tb.diffusion, mu, 0.1, 0.1);
        CHECK(v > 0.0);
        // all other components do not matter at this point
        ParameterVector mu2 = ParameterVector::Constant(32, 9.0);
        mu2[0] = 1.0;
        mu2[16] = 1.0;
        CHECK(evaluate_diffusion(tb.diffusion, mu2, 0.1, 0.1) == Catch::Approx(v));
    }
    SECTION("outside domain") {
        const auto tb = desk_problem();
        CHECK_THROWS_AS(evaluate_diffusion(tb.diffusion, tb.box.lower, 1.5, 0.5),
                        std::out_of_range);
    }
}

TEST_CASE("affinity in mu") {
    const auto tb = desk_problem();
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const double x = rng.uniform(), y = rng.uniform();
        ParameterVector mu(32), nu(32);
        for (int i = 0; i < 32; ++i) {
            mu[i] = rng.uniform(0.0, 5.0);
            nu[i] = rng.uniform(0.0, 5.0);
        }
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const double lhs = evaluate_diffusion(tb.diffusion, a * mu + b * nu, x, y);
        const double rhs = a * evaluate_diffusion(tb.diffusion, mu, x, y) +
                           b * evaluate_diffusion(tb.diffusion, nu, x, y);
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    }
}

TEST_CASE("coercivity lower bound") {
    const auto tb = desk_problem();
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        ParameterVector mu = tb.box.random(rng);
        const double alb = tb.diffusion.alpha_lb(mu);
        CHECK(alb > 0.0);
        // alpha_lb bounds A(mu) from below pointwise
        double amin = 1e300;
        for (int k = 0; k < 100; ++k) {
            const double v = evaluate_diffusion(tb.diffusion, mu, rng.uniform(), rng.uniform());
            amin = std::min(amin, v);
        }
        CHECK(alb <= amin + 1e-12);
        CHECK(tb.diffusion.gamma_ub(mu) >= amin);
    }
}

TEST_CASE("field CSV export is reproducible") {
    const auto f1 = sample_field(6, 0.9, 1.1, 42);
    const auto f2 = sample_field(6, 0.9, 1.1, 42);
    CHECK(field_to_csv(f1) == field_to_csv(f2));
    CHECK(field_to_csv(f1).find(',') != std::string::npos);
}
