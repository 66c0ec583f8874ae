#include <doctest.h>

#include <cmath>

#include "fmcf/experiments.hpp"

using namespace fmcf;

namespace {

ExperimentPlan small_plan(std::uint64_t seed, std::vector<double> times, int n_seeds,
                          double window = 8.0) {
    ExperimentPlan plan;
    plan.spec.master_seed = seed;
    plan.times = std::move(times);
    plan.n_seeds = n_seeds;
    plan.window = window;
    plan.jobs = 2;
    return plan;
}

CollectOptions constant_medium(double value) {
    CollectOptions opt;
    opt.field_factory = [value](std::uint64_t) {
        return CoefficientField::constant(value);
    };
    return opt;
}

} // namespace

TEST_CASE("plan validation: ordering, positivity, seed count") {
    ExperimentPlan plan = small_plan(1, {1.0, 2.0}, 2);
    CHECK_NOTHROW(plan.validate());
    plan.times = {2.0, 1.0};
    CHECK_THROWS(plan.validate());
    plan.times = {0.0, 1.0};
    CHECK_THROWS(plan.validate());
    plan.times = {1.0};
    plan.n_seeds = 1;
    CHECK_THROWS(plan.validate());
}

TEST_CASE("constant medium: effective speed equals c0 and seeds are replayable") {
    ExperimentPlan plan = small_plan(7, {2.0, 4.0}, 4);
    auto samples = collect_front_samples(plan, {1.0, 0.0}, constant_medium(1.3));
    SpeedEstimate est = speed_estimate_from(plan, samples);
    CHECK(est.n_failed == 0);
    CHECK(est.mu_increasing);
    CHECK(std::abs(est.c_bar - 1.3) / 1.3 < 0.02);

    // common-random-numbers replay: the identical plan reproduces every
    // sample bit-exactly
    auto replay = collect_front_samples(plan, {1.0, 0.0}, constant_medium(1.3));
    for (std::size_t k = 0; k < samples.m.size(); ++k) {
        REQUIRE(samples.ok[k] == replay.ok[k]);
        for (std::size_t ti = 0; ti < samples.times.size(); ++ti)
            CHECK(samples.m[k][ti] == replay.m[k][ti]);
    }
}

TEST_CASE("random medium: replay of the plan is bit-exact") {
    ExperimentPlan plan = small_plan(21, {2.0, 4.0}, 4);
    auto a = collect_front_samples(plan, {1.0, 0.0});
    auto b = collect_front_samples(plan, {1.0, 0.0});
    for (std::size_t k = 0; k < a.m.size(); ++k)
        for (std::size_t ti = 0; ti < a.times.size(); ++ti)
            CHECK(a.m[k][ti] == b.m[k][ti]);
}

TEST_CASE("laminar medium along e: arrival matches the 1-D quadrature oracle") {
    ExperimentPlan plan = small_plan(3, {4.0, 8.0}, 2);
    plan.spec.c_min = 1.1; // declared envelope of the laminar profile
    plan.spec.c_max = 1.9;
    plan.spec.amp_lo = 0.2;
    plan.spec.amp_hi = 0.5;
    const double mid = 1.5, amp = 0.4, period = 4.0;
    CollectOptions opt;
    opt.field_factory = [&](std::uint64_t) {
        return CoefficientField::laminar({1.0, 0.0}, period, mid, amp);
    };
    auto samples = collect_front_samples(plan, {1.0, 0.0}, opt);
    REQUIRE(samples.n_ok() == 2);

    // flat front through a laminar medium: t(s) = integral of dx / c(x)
    auto oracle_time = [&](double s0, double s1) {
        const int n = 200000;
        double acc = 0.0;
        double dx = (s1 - s0) / n;
        for (int k = 0; k < n; ++k) {
            double x = s0 + (k + 0.5) * dx;
            acc += dx / (mid + amp * std::sin(2.0 * M_PI * x / period));
        }
        return acc;
    };
    for (std::size_t ti = 0; ti < plan.times.size(); ++ti) {
        double expect = oracle_time(plan.source_offset, plan.source_offset + plan.times[ti]);
        CHECK(std::abs(samples.m[0][ti] - expect) / expect < 0.02);
    }
}

TEST_CASE("fluctuations: constant medium is degenerate with empty tails") {
    ExperimentPlan plan = small_plan(9, {2.0, 4.0}, 4);
    auto samples = collect_front_samples(plan, {1.0, 0.0}, constant_medium(1.0));
    FluctuationStats fl = fluctuation_stats_from(plan, samples);
    CHECK(fl.fit.degenerate);
    CHECK(fl.sigma[0] <= 1e-12);
    CHECK(fl.tail_fraction[0] == 0.0);
    CHECK(fl.tails_pass);
}

TEST_CASE("approximate linearity is exact for constant media") {
    ExperimentPlan plan = small_plan(13, {2.0, 4.0}, 4);
    auto samples = collect_front_samples(plan, {1.0, 0.0}, constant_medium(1.0));
    LinearityReport rep = linearity_from(plan, samples);
    REQUIRE(rep.t_values.size() == 1);
    // machine scale up to the far-field value cap's exponentially small drag
    CHECK(rep.delta[0] <= 1e-5);
    CHECK(rep.pass);
}

TEST_CASE("flatness: constant medium stays exactly flat") {
    ExperimentPlan plan = small_plan(15, {2.0, 4.0}, 3);
    CollectOptions opt = constant_medium(1.0);
    opt.measure_flatness = true;
    auto samples = collect_front_samples(plan, {1.0, 0.0}, opt);
    FlatnessReport rep = flatness_from(plan, samples);
    CHECK(rep.median_w[0] <= 2.0 * plan.h);
    CHECK(rep.median_w[1] <= 2.0 * plan.h);
    CHECK(rep.pass);
}

TEST_CASE("flatness: laminar transverse medium corrugates but stays bounded") {
    ExperimentPlan plan = small_plan(17, {5.0, 10.0, 20.0}, 2);
    plan.spec.c_min = 1.1;
    plan.spec.c_max = 1.9;
    plan.spec.amp_lo = 0.2;
    plan.spec.amp_hi = 0.5;
    CollectOptions opt;
    opt.measure_flatness = true;
    opt.field_factory = [](std::uint64_t) {
        // varies only transversally: rows race at different speeds until
        // curvature balances the speed contrast
        return CoefficientField::laminar({0.0, 1.0}, 4.0, 1.5, 0.4);
    };
    auto samples = collect_front_samples(plan, {1.0, 0.0}, opt);
    FlatnessReport rep = flatness_from(plan, samples);
    // corrugation saturates: W bounded and W/t decreasing
    CHECK(rep.median_w.back() < 2.0);
    CHECK(rep.ratio.back() < rep.ratio.front());
    CHECK(rep.decreasing);
}

TEST_CASE("direction profile on a constant medium is exactly isotropic") {
    ExperimentPlan plan = small_plan(19, {2.0, 4.0}, 3, 10.0);
    plan.directions.clear();
    for (int k = 0; k < 8; ++k) {
        double th = 0.5 * M_PI * k / 7.0;
        plan.directions.push_back({std::cos(th), std::sin(th)});
    }
    // a genuinely close pair, off the quarter-circle lattice
    plan.directions.push_back({std::cos(0.25 * M_PI + 0.02), std::sin(0.25 * M_PI + 0.02)});
    plan.directions.push_back(
        {std::cos(0.25 * M_PI + 0.02 + 1e-2), std::sin(0.25 * M_PI + 0.02 + 1e-2)});
    // constant medium via the factory: identical physics for every direction
    // exercised through the same non-periodic window
    // (direction runs always use non-periodic lateral boundaries)
    // NOTE: run_direction_profile samples plan.spec, so instead make the
    // medium effectively constant by zero bump intensity.
    plan.spec.bump_intensity = 0.0;
    DirectionProfile prof = run_direction_profile(plan);
    CHECK(prof.spread <= 1e-6);
    CHECK(prof.pass_spread);
    CHECK(prof.pass_near);
    CHECK(prof.near_distance == doctest::Approx(1e-2).epsilon(0.05));
}

TEST_CASE("ordered localization: equal sources give a zero constant") {
    LocalizationConfig cfg;
    cfg.spec.master_seed = 23;
    cfg.n_seeds = 1;
    cfg.window = 20.0;
    cfg.r_window = 6.0;
    cfg.shrink = 2.0;
    cfg.blob_center = {4.0, 18.0};
    cfg.blob_radius = -1.0; // no extra material: S2 == S1
    cfg.constant_medium = true;
    LocalizationReport rep = check_ordered_localization(cfg);
    CHECK(rep.delta_window == 0.0);
    CHECK(rep.c2_emp == 0.0);
    CHECK(rep.pass);
}

TEST_CASE("ordered localization: exterior blob is strongly damped inside") {
    LocalizationConfig cfg;
    cfg.spec.master_seed = 29;
    cfg.n_seeds = 2;
    cfg.window = 20.0;
    cfg.r_window = 6.0;
    cfg.shrink = 2.0;
    cfg.blob_center = {4.0, 18.0};
    cfg.blob_radius = 2.0;
    LocalizationReport rep = check_ordered_localization(cfg);
    CHECK(rep.delta_outer > 1.0);          // genuine head start near the blob
    CHECK(rep.delta_window < rep.delta_outer);
    CHECK(rep.pass);
}
