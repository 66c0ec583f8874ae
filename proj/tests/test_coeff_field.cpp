#include <doctest.h>

#include <cmath>
#include <vector>

#include "fmcf/coeff_field.hpp"
#include "fmcf/grid_set.hpp"
#include "fmcf/rng.hpp"
#include "fmcf/stats.hpp"

using namespace fmcf;

namespace {

FieldSpec standard_spec() {
    FieldSpec s;
    s.c_min = 1.0;
    s.c_max = 2.0;
    s.lipschitz_bound = 5.0;
    s.bump_radius = 0.4;
    s.bump_intensity = 1.0;
    s.amp_lo = 0.5;
    s.amp_hi = 1.0;
    s.master_seed = 42;
    return s;
}

} // namespace

TEST_CASE("spec validation rejects constructions breaking the contracts") {
    FieldSpec s = standard_spec();
    s.bump_radius = 0.6;
    CHECK_THROWS_AS(s.validate(), FieldError); // breaks unit range of dependence

    s = standard_spec();
    s.amp_hi = 1.5; // would overshoot c_max
    CHECK_THROWS_AS(s.validate(), FieldError);

    s = standard_spec();
    s.bump_radius = 0.1; // single-bump slope 15.4 > L0
    CHECK_THROWS_AS(s.validate(), FieldError);

    s = standard_spec();
    s.c_min = 0.0;
    CHECK_THROWS_AS(s.validate(), FieldError);

    CHECK_NOTHROW(standard_spec().validate());
}

TEST_CASE("intensity zero gives the constant floor field") {
    FieldSpec s = standard_spec();
    s.bump_intensity = 0.0;
    CoefficientField f = CoefficientField::sample(s, 7);
    SplitMix64 rng(1);
    for (int k = 0; k < 1000; ++k) {
        Vec2 p{rng.next_double(-50.0, 50.0), rng.next_double(-50.0, 50.0)};
        CHECK(f.evaluate(p) == s.c_min);
    }
}

TEST_CASE("evaluation is a pure function: two orders, bit-identical") {
    FieldSpec s = standard_spec();
    CoefficientField f = CoefficientField::sample(s, 123);
    const int n = 10000;
    std::vector<Vec2> pts(n);
    SplitMix64 rng(5);
    for (auto& p : pts) p = {rng.next_double(-30.0, 30.0), rng.next_double(-30.0, 30.0)};

    std::vector<double> forward(n), backward(n);
    for (int k = 0; k < n; ++k) forward[k] = f.evaluate(pts[k]);
    for (int k = n - 1; k >= 0; --k) backward[k] = f.evaluate(pts[k]);
    // A second field object from the same (spec, seed) must agree too.
    CoefficientField g = CoefficientField::sample(s, 123);
    for (int k = 0; k < n; ++k) {
        CHECK(forward[k] == backward[k]);
        CHECK(forward[k] == g.evaluate(pts[k]));
    }
}

TEST_CASE("bounds hold exactly over 1e5 probes") {
    FieldSpec s = standard_spec();
    CoefficientField f = CoefficientField::sample(s, 99);
    SplitMix64 rng(17);
    for (int k = 0; k < 100000; ++k) {
        Vec2 p{rng.next_double(-100.0, 100.0), rng.next_double(-100.0, 100.0)};
        double c = f.evaluate(p);
        CHECK(c >= s.c_min);
        CHECK(c <= s.c_max);
    }
}

TEST_CASE("finite-difference Lipschitz audit stays within L0") {
    FieldSpec s = standard_spec();
    CoefficientField f = CoefficientField::sample(s, 2024);
    const double fd = 1e-4;
    double worst = 0.0;
    SplitMix64 rng(23);
    for (int k = 0; k < 10000; ++k) {
        Vec2 p{rng.next_double(-20.0, 20.0), rng.next_double(-20.0, 20.0)};
        double ang = rng.next_double(0.0, 2.0 * M_PI);
        Vec2 q{p.x + fd * std::cos(ang), p.y + fd * std::sin(ang)};
        worst = std::max(worst, std::abs(f.evaluate(q) - f.evaluate(p)) / fd);
    }
    CHECK(worst <= s.lipschitz_bound * (1.0 + 1e-3));
    // the certified constant is itself below the requested bound
    CHECK(f.certified_lipschitz() <= s.lipschitz_bound);
    CHECK(worst <= f.certified_lipschitz() * (1.0 + 1e-3));
}

TEST_CASE("single explicit bump: peak value and analytic slope") {
    FieldSpec s = standard_spec();
    CoefficientField f = CoefficientField::bumps_at(s, {{0.0, 0.0}}, {0.8});
    CHECK(f.evaluate({0.0, 0.0}) == doctest::Approx(s.c_min + 0.8));
    CHECK(f.evaluate({s.bump_radius, 0.0}) == doctest::Approx(s.c_min));
    CHECK(f.evaluate({5.0, 5.0}) == s.c_min);

    // Numerical slope peaks at the analytic inflection value a*kappa/r.
    double worst = 0.0;
    for (int k = 0; k <= 4000; ++k) {
        double x = k * (s.bump_radius / 4000.0);
        double g =
            std::abs(f.evaluate({x + 1e-6, 0.0}) - f.evaluate({x - 1e-6, 0.0})) / 2e-6;
        worst = std::max(worst, g);
    }
    CHECK(worst == doctest::Approx(0.8 * kBumpSlopePeak / s.bump_radius).epsilon(1e-4));
}

TEST_CASE("ensemble independence at separation >= 1 + 2r") {
    FieldSpec s = standard_spec();
    const int n_seeds = 1000;
    const Vec2 p1{10.3, 7.2};
    const Vec2 p2{10.3 + 1.0 + 2.0 * s.bump_radius + 1e-6, 7.2};
    std::vector<double> a(n_seeds), b(n_seeds);
    for (int k = 0; k < n_seeds; ++k) {
        CoefficientField f = CoefficientField::sample(s, 1000 + k);
        a[k] = f.evaluate(p1);
        b[k] = f.evaluate(p2);
    }
    double ma = mean(a), mb = mean(b);
    double sa = sample_std(a), sb = sample_std(b);
    double cov = 0.0;
    for (int k = 0; k < n_seeds; ++k) cov += (a[k] - ma) * (b[k] - mb);
    cov /= (n_seeds - 1);
    double corr = cov / (sa * sb);
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n_seeds)));
}

TEST_CASE("ensemble stationarity: matching means at two distant points") {
    FieldSpec s = standard_spec();
    const int n_seeds = 1000;
    std::vector<double> a(n_seeds), b(n_seeds);
    for (int k = 0; k < n_seeds; ++k) {
        CoefficientField f = CoefficientField::sample(s, 555 + k);
        a[k] = f.evaluate({3.7, -2.9});
        b[k] = f.evaluate({-41.1, 18.6});
    }
    double pooled = 0.5 * (sample_std(a) + sample_std(b));
    CHECK(std::abs(mean(a) - mean(b)) <
          4.0 * pooled / std::sqrt(static_cast<double>(n_seeds)));
}

TEST_CASE("coercivity margin: constant fields") {
    Rect box{{0.0, 0.0}, {4.0, 4.0}};
    CHECK(ls_condition_margin(CoefficientField::constant(1.0), box, 0.05) ==
          doctest::Approx(1.0));
    CHECK(ls_condition_margin(CoefficientField::constant(0.7), box, 0.05) ==
          doctest::Approx(0.49));
}

TEST_CASE("coercivity margin goes negative for steep bumps while c > 0") {
    // Steep narrow bump: slope kappa * a / r = 7.7 exceeds c_max^2 = 4.
    FieldSpec s = standard_spec();
    s.bump_radius = 0.2;
    s.lipschitz_bound = 10.0;
    s.amp_hi = 1.0;
    CoefficientField f = CoefficientField::bumps_at(s, {{2.0, 2.0}}, {1.0});
    Rect box{{0.0, 0.0}, {4.0, 4.0}};
    double margin = ls_condition_margin(f, box, 0.01);
    CHECK(margin < 0.0);

    // Analytic oracle: scan the radial profile c(s) = 1 + (1-(s/r)^2)^2 and
    // its derivative on a fine 1-D grid.
    double analytic = 1e9;
    for (int k = 0; k <= 100000; ++k) {
        double x = k * (s.bump_radius / 100000.0);
        double sr = x / s.bump_radius;
        double c = 1.0 + std::pow(1.0 - sr * sr, 2.0);
        double dc = std::abs(-4.0 * sr * (1.0 - sr * sr) / s.bump_radius);
        analytic = std::min(analytic, c * c - dc);
    }
    CHECK(margin == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("splice: idempotence, whole-plane region, and blend Lipschitz") {
    FieldSpec s = standard_spec();
    CoefficientField inner = CoefficientField::sample(s, 1);
    CoefficientField outer = CoefficientField::sample(s, 2);

    Grid2D grid;
    grid.spacing = 0.25;
    grid.nx = 65;
    grid.ny = 65;
    GridSet region(grid);
    for (int j = 20; j < 45; ++j)
        for (int i = 20; i < 45; ++i) region.set(i, j, true);

    double blend = (s.c_max - s.c_min) / s.lipschitz_bound;
    CHECK_THROWS_AS(CoefficientField::splice(inner, outer, region, blend * 0.5),
                    FieldError);

    CoefficientField same = CoefficientField::splice(inner, inner, region, blend);
    CoefficientField mixed = CoefficientField::splice(inner, outer, region, blend);
    GridSet everything(grid, std::vector<std::uint8_t>(grid.size(), 1));
    CoefficientField whole = CoefficientField::splice(inner, outer, everything, blend);

    SplitMix64 rng(3);
    for (int k = 0; k < 2000; ++k) {
        Vec2 p{rng.next_double(0.0, 16.0), rng.next_double(0.0, 16.0)};
        CHECK(same.evaluate(p) == doctest::Approx(inner.evaluate(p)));
        CHECK(whole.evaluate(p) == doctest::Approx(inner.evaluate(p)));
    }
    // equals inner on the region, outer far away
    CHECK(mixed.evaluate({8.0, 8.0}) == doctest::Approx(inner.evaluate({8.0, 8.0})));
    CHECK(mixed.evaluate({1.0, 1.0}) == doctest::Approx(outer.evaluate({1.0, 1.0})));

    // constant-in / constant-out splice honors L0 across the blend annulus
    CoefficientField lo = CoefficientField::constant(s.c_min);
    CoefficientField hi = CoefficientField::constant(s.c_max);
    CoefficientField blended = CoefficientField::splice(lo, hi, region, blend);
    double worst = 0.0;
    const double fd = 1e-4;
    for (int k = 0; k < 20000; ++k) {
        Vec2 p{rng.next_double(2.0, 14.0), rng.next_double(2.0, 14.0)};
        double ang = rng.next_double(0.0, 2.0 * M_PI);
        Vec2 q{p.x + fd * std::cos(ang), p.y + fd * std::sin(ang)};
        worst = std::max(worst, std::abs(blended.evaluate(q) - blended.evaluate(p)) / fd);
    }
    CHECK(worst <= s.lipschitz_bound * 1.02);
}

TEST_CASE("field spec round-trips through the flat config text") {
    FieldSpec s = standard_spec();
    s.transverse_period = 40.0;
    FieldSpec t = FieldSpec::from_config_text(s.to_config_text());
    CHECK(t.c_min == s.c_min);
    CHECK(t.c_max == s.c_max);
    CHECK(t.lipschitz_bound == s.lipschitz_bound);
    CHECK(t.bump_radius == s.bump_radius);
    CHECK(t.bump_intensity == s.bump_intensity);
    CHECK(t.amp_lo == s.amp_lo);
    CHECK(t.amp_hi == s.amp_hi);
    CHECK(t.transverse_period.has_value());
    CHECK(*t.transverse_period == 40.0);
    CHECK(t.master_seed == s.master_seed);
    CHECK_THROWS_AS(FieldSpec::from_config_text("c_min = 1\nbogus_key = 3\n"),
                    FieldError);
}

TEST_CASE("transverse periodization tiles the medium exactly") {
    FieldSpec s = standard_spec();
    s.transverse_period = 8.0;
    CoefficientField f = CoefficientField::sample(s, 31);
    SplitMix64 rng(11);
    // Probe heights on a binary lattice so y + 8 and y - 16 are exactly
    // representable; periodicity is then bit-exact.
    for (int k = 0; k < 2000; ++k) {
        double y = static_cast<double>(rng.next_below(512)) / 64.0;
        Vec2 p{rng.next_double(0.0, 20.0), y};
        CHECK(f.evaluate(p) == f.evaluate({p.x, p.y + 8.0}));
        CHECK(f.evaluate(p) == f.evaluate({p.x, p.y - 16.0}));
    }
}

