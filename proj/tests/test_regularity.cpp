#include <doctest.h>

#include <cmath>

#include "fmcf/arrival_checks.hpp"
#include "fmcf/coeff_field.hpp"
#include "fmcf/level_set.hpp"

using namespace fmcf;

namespace {

Grid2D window_grid(double extent_s, double extent_t, double h, bool periodic = true) {
    Grid2D g;
    g.spacing = h;
    g.nx = static_cast<int>(std::lround(extent_s / h)) + 1;
    g.ny = static_cast<int>(std::lround(extent_t / h)) + (periodic ? 0 : 1);
    g.transverse_periodic = periodic;
    return g;
}

ArrivalTimeField constant_half_space_arrival(double c0, double extent, double h,
                                             double offset = 2.0) {
    Grid2D g = window_grid(extent, 8.0, h);
    CoefficientField c = CoefficientField::constant(c0);
    auto res = compute_arrival(c, InitialSet::half_space(offset), g, 4.0 * extent / c0);
    REQUIRE(res.status == EvolveStatus::Done);
    return res.field;
}

} // namespace

TEST_CASE("waiting time and slope constants for the standard configuration") {
    CHECK(waiting_time_tau(2.0, 1.0) == doctest::Approx(13.0));
    CHECK(large_scale_slope(2.0, 1.0) == doctest::Approx(6.5));
    CHECK(waiting_time_tau(3.0, 0.5) == doctest::Approx(39.0));
}

TEST_CASE("small-scale Lipschitz check passes with a factor-2 margin on flat data") {
    ArrivalTimeField m = constant_half_space_arrival(1.0, 12.0, 0.1);
    auto rep = check_small_scale_lipschitz(m, 1.0, 0.0, 42);
    CHECK(rep.pass);
    // constant field: |dm| = h / c over adjacent pairs, bound = (2/c) * 3h
    CHECK(rep.max_violation <= -0.4 * 0.1); // at least the factor-2 margin
}

TEST_CASE("large-scale Lipschitz check on flat data, with fitted constants") {
    ArrivalTimeField m = constant_half_space_arrival(1.0, 12.0, 0.1);
    auto rep = check_large_scale_lipschitz(m, 13.0, 6.5, 43);
    CHECK(rep.pass);
    CHECK(rep.constants.at("tau_hat") <= 0.01);
    CHECK(rep.constants.at("L_hat") <= 0.01); // tau = 13 already dominates
}

TEST_CASE("filling-time check passes with wide margin for a flat constant front") {
    ArrivalTimeField m = constant_half_space_arrival(1.0, 12.0, 0.1);
    auto rep = check_filling_time(m, 2.0, 1.0, 44);
    CHECK(rep.pass);
    // ball of radius 2 fills in ~2 time units against tau = 13
    CHECK(rep.max_violation <= -10.0);
}

TEST_CASE("monotone growth check: trivial below tau and sharp for flat fronts") {
    ArrivalTimeField m = constant_half_space_arrival(1.0, 12.0, 0.1);
    auto rep = check_monotone_growth(m, 13.0, 6.5, 45);
    CHECK(rep.pass);
}

TEST_CASE("time regularity fitted constant is ~0 for constant media") {
    ArrivalTimeField m = constant_half_space_arrival(1.0, 12.0, 0.1);
    auto rep = check_time_regularity(m, 1.0, 46);
    CHECK(rep.pass);
    CHECK(rep.constants.at("C2") <= 0.05);
}

TEST_CASE("data continuity: identical sources, shifted sources, disc oracle") {
    Grid2D g = window_grid(12.0, 8.0, 0.1);
    CoefficientField one = CoefficientField::constant(1.0);
    auto ra = compute_arrival(one, InitialSet::half_space(2.0), g, 40.0);
    auto rb = compute_arrival(one, InitialSet::half_space(3.0), g, 40.0);
    REQUIRE(ra.status == EvolveStatus::Done);

    auto same = check_data_continuity(ra.field, ra.field, 1.0);
    CHECK(same.pass);
    CHECK(same.constants.at("dH_sources") == 0.0);

    auto shifted = check_data_continuity(ra.field, rb.field, 1.0);
    CHECK(shifted.pass);
    CHECK(shifted.constants.at("dH_sources") == doctest::Approx(1.0).epsilon(0.02));

    // disc sources R = 2 vs R = 3: sup |m difference| equals the expanding-disc
    // travel time between radii, integral of dr / (1 - 1/r) from 2 to 3
    Grid2D gd = window_grid(18.0, 18.0, 0.1, false);
    auto da = compute_arrival(one, InitialSet::disc({9.0, 9.0}, 2.0), gd, 25.0);
    auto db = compute_arrival(one, InitialSet::disc({9.0, 9.0}, 3.0), gd, 25.0);
    REQUIRE(da.status == EvolveStatus::Done);
    auto disc_rep = check_data_continuity(da.field, db.field, 1.0);
    CHECK(disc_rep.pass);
    double sup = 0.0;
    for (std::size_t k = 0; k < da.field.m.size(); ++k)
        if (std::isfinite(da.field.m[k]) && std::isfinite(db.field.m[k]))
            sup = std::max(sup, std::abs(da.field.m[k] - db.field.m[k]));
    double oracle = 3.0 + std::log(2.0) - (2.0 + std::log(1.0)); // r + ln(r-1)
    CHECK(sup == doctest::Approx(oracle).epsilon(0.05));
}

TEST_CASE("sublevel localization: identical fields agree exactly") {
    Grid2D g = window_grid(12.0, 8.0, 0.1);
    FieldSpec spec;
    spec.transverse_period = 8.0;
    CoefficientField field = CoefficientField::sample(spec, 3);
    auto res = compute_arrival(field, InitialSet::half_space(2.0), g, 40.0);
    REQUIRE(res.status == EvolveStatus::Done);
    double dt = cfl_dt(0.1, field.c_max(), true);
    auto rep = check_sublevel_localization(res.field, res.field, 5.0, 0.5, dt);
    CHECK(rep.pass);
    CHECK(rep.max_violation == 0.0);
}

TEST_CASE("sublevel localization: spliced exterior cannot change early arrivals") {
    Grid2D g = window_grid(12.0, 8.0, 0.1);
    FieldSpec spec;
    spec.transverse_period = 8.0;
    CoefficientField field = CoefficientField::sample(spec, 4);
    InitialSet src = InitialSet::half_space(2.0);
    auto base = compute_arrival(field, src, g, 40.0);
    REQUIRE(base.status == EvolveStatus::Done);

    const double t_loc = 5.0;
    const double blend = 0.2;
    GridSet region = base.field.sublevel(t_loc).dilate(blend);
    CoefficientField other = CoefficientField::sample(spec, 999);
    CoefficientField spliced = CoefficientField::splice(field, other, region, blend);
    auto mod = compute_arrival(spliced, src, g, 40.0);
    REQUIRE(mod.status == EvolveStatus::Done);

    double dt = cfl_dt(0.1, field.c_max(), true);
    auto rep = check_sublevel_localization(base.field, mod.field, t_loc,
                                           blend + 3.0 * 0.1, dt);
    INFO("max |dm| on the eroded sublevel: ", rep.max_violation);
    CHECK(rep.pass);
}

TEST_CASE("semigroup restart stays within 4 tau of the full run") {
    Grid2D g = window_grid(14.0, 8.0, 0.1);
    CoefficientField one = CoefficientField::constant(1.0);
    InitialSet src = InitialSet::half_space(2.0);
    auto full = compute_arrival(one, src, g, 40.0);
    REQUIRE(full.status == EvolveStatus::Done);

    const double r0 = 2.0;
    const double tau = waiting_time_tau(r0, 1.0);
    for (double t_sg : {0.0, 4.0}) {
        GridSet restart_set = regularize_set(full.field.sublevel(t_sg), r0);
        auto restart = compute_arrival(one, InitialSet::from_mask(restart_set, r0), g, 40.0);
        REQUIRE(restart.status == EvolveStatus::Done);
        auto rep = check_semigroup(full.field, restart.field, t_sg, tau);
        CHECK(rep.pass);
        // flat fronts restart from a set grown by <= R0 + 1, so the raw
        // discrepancy stays near that head start, far below 4 tau
        CHECK(rep.max_violation <= (2.0 * r0 + 2.0) / 1.0 + 1.0);
        CHECK(rep.tolerance == doctest::Approx(4.0 * tau));
    }
}

TEST_CASE("arrival consistency check accepts a solver snapshot") {
    Grid2D g = window_grid(10.0, 8.0, 0.1);
    FieldSpec spec;
    spec.transverse_period = 8.0;
    CoefficientField field = CoefficientField::sample(spec, 6);
    InitialSet src = InitialSet::half_space(2.0);
    LevelSetSolver solver(g, field, src, {});
    StopCondition stop;
    stop.time_at_least = 4.0;
    stop.t_max = 40.0;
    REQUIRE(solver.evolve_until(stop) == EvolveStatus::Done);
    LevelSetState snap = solver.snapshot();
    StopCondition to_end;
    to_end.all_nodes_crossed = true;
    to_end.t_max = 40.0;
    REQUIRE(solver.evolve_until(to_end) == EvolveStatus::Done);
    ArrivalTimeField m;
    m.grid = g;
    m.m = solver.arrival();
    m.source = solver.source_mask();
    auto rep = check_arrival_consistency(m, snap, solver.dt());
    CHECK(rep.pass);
}

TEST_CASE("full verify suite passes on a reduced random configuration") {
    VerifyConfig cfg;
    cfg.spec.master_seed = 11;
    cfg.n_seeds = 2;
    cfg.window = 16.0;
    cfg.semigroup_t = 5.0;
    cfg.localization_t = 5.0;
    cfg.refine_check = true;
    cfg.refine_seeds = 1;
    cfg.refine_window = 8.0;
    auto reports = verify_suite(cfg);
    CHECK(reports.size() == 9);
    for (const auto& r : reports) {
        INFO("check ", r.check, " violation ", r.max_violation, " tol ", r.tolerance);
        CHECK(r.pass);
        // report invariant: pass flag is equivalent to the tolerance test
        CHECK(r.pass == (r.max_violation <= r.tolerance));
        ordered_json j = r.to_json();
        CHECK(j.contains("check"));
        CHECK(j.contains("max_violation"));
        CHECK(j.contains("pass"));
        CHECK(j.contains("tolerance"));
    }
}
