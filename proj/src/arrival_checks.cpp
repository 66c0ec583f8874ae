#include "fmcf/arrival_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "fmcf/rng.hpp"
#include "fmcf/task_pool.hpp"

namespace fmcf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Deterministic sample of node indices with finite m.
std::vector<std::size_t> sample_nodes(const ArrivalTimeField& m, std::size_t want,
                                      std::uint64_t seed) {
    std::vector<std::size_t> out;
    out.reserve(want);
    SplitMix64 rng(mix64(seed));
    const std::size_t n = m.m.size();
    for (std::size_t k = 0; k < want * 4 && out.size() < want; ++k) {
        std::size_t id = rng.next_below(n);
        if (std::isfinite(m.m[id])) out.push_back(id);
    }
    return out;
}

double transverse_gap(const Grid2D& g, int j1, int j2) {
    double dj = std::abs(j1 - j2);
    if (g.transverse_periodic) dj = std::min(dj, g.ny - dj);
    return dj * g.spacing;
}

} // namespace

ordered_json RegularityReport::to_json() const {
    ordered_json j;
    j["check"] = check;
    ordered_json c;
    for (const auto& [k, v] : constants) c[k] = v;
    j["constants"] = c;
    j["max_violation"] = max_violation;
    j["location"] = {location[0], location[1]};
    j["pass"] = pass;
    j["tolerance"] = tolerance;
    if (!note.empty()) j["note"] = note;
    return j;
}

RegularityReport check_small_scale_lipschitz(const ArrivalTimeField& m, double c_min,
                                             double field_lipschitz,
                                             std::uint64_t sample_seed) {
    RegularityReport rep;
    rep.check = "small_scale_lipschitz";
    rep.constants["c_min"] = c_min;
    rep.constants["field_lipschitz"] = field_lipschitz;
    rep.tolerance = 0.0;
    const Grid2D& g = m.grid;
    const double h = g.spacing;
    SplitMix64 rng(mix64(sample_seed));
    const std::size_t pairs = std::min<std::size_t>(100000, g.size());
    for (std::size_t k = 0; k < pairs; ++k) {
        int i = static_cast<int>(rng.next_below(g.nx - 1));
        int j = static_cast<int>(rng.next_below(g.ny));
        bool horizontal = (rng.next_u64() & 1) != 0;
        int i2 = horizontal ? i + 1 : i;
        int j2 = horizontal ? j : (j + 1 < g.ny ? j + 1 : j - 1);
        double ma = m.at(i, j), mb = m.at(i2, j2);
        if (!std::isfinite(ma) || !std::isfinite(mb)) continue;
        double slope = (2.0 / c_min) * std::exp(field_lipschitz * std::min(ma, mb));
        double bound = slope * (h + 2.0 * h);
        double v = std::abs(ma - mb) - bound;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            rep.location = {g.s_coord(i), g.t_coord(j)};
        }
    }
    rep.finalize();
    return rep;
}

RegularityReport check_large_scale_lipschitz(const ArrivalTimeField& m, double tau,
                                             double L, std::uint64_t sample_seed) {
    RegularityReport rep;
    rep.check = "large_scale_lipschitz";
    rep.constants["tau"] = tau;
    rep.constants["L"] = L;
    rep.tolerance = 0.0;
    const Grid2D& g = m.grid;
    SplitMix64 rng(mix64(sample_seed));
    double tau_hat = 0.0; // minimal intercept with the nominal slope
    double l_hat = 0.0;   // minimal slope with the nominal waiting time
    std::size_t used = 0;
    for (std::size_t k = 0; k < 200000 && used < 100000; ++k) {
        int i1 = static_cast<int>(rng.next_below(g.nx));
        int j1 = static_cast<int>(rng.next_below(g.ny));
        int i2 = static_cast<int>(rng.next_below(g.nx));
        int j2 = static_cast<int>(rng.next_below(g.ny));
        double ds = (i1 - i2) * g.spacing;
        double dtv = transverse_gap(g, j1, j2);
        double dist = std::hypot(ds, dtv);
        if (dist < 1.0) continue;
        double ma = m.at(i1, j1), mb = m.at(i2, j2);
        if (!std::isfinite(ma) || !std::isfinite(mb)) continue;
        ++used;
        double gap = std::abs(ma - mb);
        double v = gap - (tau + L * dist);
        if (v > rep.max_violation) {
            rep.max_violation = v;
            rep.location = {g.s_coord(i1), g.t_coord(j1)};
        }
        tau_hat = std::max(tau_hat, gap - L * dist);
        l_hat = std::max(l_hat, (gap - tau) / dist);
    }
    rep.constants["tau_hat"] = std::max(tau_hat, 0.0);
    rep.constants["L_hat"] = std::max(l_hat, 0.0);
    rep.constants["pairs"] = static_cast<double>(used);
    rep.finalize();
    return rep;
}

RegularityReport check_filling_time(const ArrivalTimeField& m, double r0, double c_min,
                                    std::uint64_t sample_seed) {
    RegularityReport rep;
    rep.check = "filling_time";
    const double tau = waiting_time_tau(r0, c_min);
    rep.constants["R0"] = r0;
    rep.constants["tau"] = tau;
    rep.tolerance = 0.0;
    const Grid2D& g = m.grid;
    const double h = g.spacing;
    const double collar = 1.5 * h;
    const int rad_cells = static_cast<int>(std::floor((r0 - collar) / h));

    // Ball offsets once.
    std::vector<std::pair<int, int>> ball;
    for (int dj = -rad_cells; dj <= rad_cells; ++dj)
        for (int di = -rad_cells; di <= rad_cells; ++di)
            if (std::hypot(di * h, dj * h) <= r0 - collar) ball.emplace_back(di, dj);

    auto centers = sample_nodes(m, 1500, sample_seed);
    for (std::size_t id : centers) {
        int i0 = static_cast<int>(id % g.nx);
        int j0 = static_cast<int>(id / g.nx);
        if (i0 - rad_cells < 0 || i0 + rad_cells >= g.nx) continue;
        if (!g.transverse_periodic && (j0 - rad_cells < 0 || j0 + rad_cells >= g.ny))
            continue;
        double t0 = m.m[id];
        for (auto [di, dj] : ball) {
            int jj = j0 + dj;
            if (g.transverse_periodic) jj = ((jj % g.ny) + g.ny) % g.ny;
            double mv = m.at(i0 + di, jj);
            double v = (std::isfinite(mv) ? mv : kInf) - (t0 + tau);
            if (v > rep.max_violation) {
                rep.max_violation = v;
                rep.location = {g.s_coord(i0), g.t_coord(j0)};
            }
        }
    }
    rep.finalize();
    return rep;
}

RegularityReport check_monotone_growth(const ArrivalTimeField& m, double tau, double L,
                                       std::uint64_t sample_seed) {
    RegularityReport rep;
    rep.check = "monotone_growth";
    rep.constants["tau"] = tau;
    rep.constants["L"] = L;
    rep.tolerance = 0.0;
    const Grid2D& g = m.grid;
    const double h = g.spacing;
    const double collar = 1.5 * h;
    const double mmax = m.max_finite();
    SplitMix64 rng(mix64(sample_seed));
    for (int pair = 0; pair < 20; ++pair) {
        double s = rng.next_double(0.0, mmax);
        double t = rng.next_double(0.0, mmax);
        if (s > t) std::swap(s, t);
        double rho = std::max(0.0, ((t - s) - tau)) / L;
        GridSet ss = m.sublevel(s);
        if (ss.empty()) continue;
        GridSet grown = rho > 0.0 ? ss.dilate(rho) : ss;
        auto dist_to_st = m.sublevel(t).distance_field();
        const auto& mask = grown.mask();
        for (std::size_t k = 0; k < mask.size(); ++k) {
            if (!mask[k]) continue;
            double v = dist_to_st[k] - collar;
            if (v > rep.max_violation) {
                rep.max_violation = v;
                int i = static_cast<int>(k % g.nx);
                int j = static_cast<int>(k / g.nx);
                rep.location = {g.s_coord(i), g.t_coord(j)};
            }
        }
    }
    rep.finalize();
    return rep;
}

RegularityReport check_time_regularity(const ArrivalTimeField& m, double c_max,
                                       std::uint64_t sample_seed) {
    RegularityReport rep;
    rep.check = "time_regularity";
    rep.constants["c_max"] = c_max;
    const Grid2D& g = m.grid;
    const double h = g.spacing;
    const double mmax = m.max_finite();
    SplitMix64 rng(mix64(sample_seed));
    double c2 = 0.0;
    for (int pair = 0; pair < 24; ++pair) {
        double s = rng.next_double(0.0, mmax);
        double t = rng.next_double(0.0, mmax);
        if (s > t) std::swap(s, t);
        if (t - s < 4.0 * h * h) continue;
        GridSet ss = m.sublevel(s);
        GridSet st = m.sublevel(t);
        if (ss.empty() || st.empty()) continue;
        double dh = hausdorff(ss, st);
        double need = (dh - 2.0 * c_max * (t - s) - h) / std::sqrt(t - s);
        c2 = std::max(c2, need);
    }
    rep.constants["C2"] = c2;
    // The fitted constant is reported; refinement stability is judged by the
    // caller, which owns the second (refined) run.
    rep.max_violation = 0.0;
    rep.tolerance = 0.0;
    rep.finalize();
    return rep;
}

RegularityReport check_data_continuity(const ArrivalTimeField& ma,
                                       const ArrivalTimeField& mb, double c_min) {
    RegularityReport rep;
    rep.check = "data_continuity";
    const Grid2D& g = ma.grid;
    const double h = g.spacing;
    double dh = hausdorff(ma.source_set(), mb.source_set());
    rep.constants["c_min"] = c_min;
    rep.constants["dH_sources"] = dh;
    rep.tolerance = 0.0;
    double bound = (2.0 / c_min) * dh + 4.0 * h / c_min;
    for (std::size_t k = 0; k < ma.m.size(); ++k) {
        double va = ma.m[k], vb = mb.m[k];
        if (!std::isfinite(va) || !std::isfinite(vb)) continue;
        double v = std::abs(va - vb) - bound;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            int i = static_cast<int>(k % g.nx);
            int j = static_cast<int>(k / g.nx);
            rep.location = {g.s_coord(i), g.t_coord(j)};
        }
    }
    rep.finalize();
    return rep;
}

RegularityReport check_sublevel_localization(const ArrivalTimeField& ma,
                                             const ArrivalTimeField& mb, double t,
                                             double collar, double dt) {
    RegularityReport rep;
    rep.check = "sublevel_localization";
    rep.constants["t"] = t;
    rep.constants["collar"] = collar;
    rep.tolerance = 2.0 * dt;
    const Grid2D& g = ma.grid;
    GridSet region = ma.sublevel(t).erode(collar);
    const auto& mask = region.mask();
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (!mask[k]) continue;
        double va = ma.m[k], vb = mb.m[k];
        double v = (std::isfinite(va) && std::isfinite(vb)) ? std::abs(va - vb) : kInf;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            int i = static_cast<int>(k % g.nx);
            int j = static_cast<int>(k / g.nx);
            rep.location = {g.s_coord(i), g.t_coord(j)};
        }
    }
    rep.finalize();
    return rep;
}

RegularityReport check_semigroup(const ArrivalTimeField& m_full,
                                 const ArrivalTimeField& m_restart, double t,
                                 double tau) {
    RegularityReport rep;
    rep.check = "semigroup";
    rep.constants["t"] = t;
    rep.constants["tau"] = tau;
    rep.tolerance = 4.0 * tau;
    const Grid2D& g = m_full.grid;
    for (std::size_t k = 0; k < m_full.m.size(); ++k) {
        double mf = m_full.m[k];
        if (!std::isfinite(mf) || mf <= t) continue;
        double mr = m_restart.m[k];
        double v = std::isfinite(mr) ? std::abs(mf - (t + mr)) : kInf;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            int i = static_cast<int>(k % g.nx);
            int j = static_cast<int>(k / g.nx);
            rep.location = {g.s_coord(i), g.t_coord(j)};
        }
    }
    rep.finalize();
    return rep;
}

RegularityReport check_arrival_consistency(const ArrivalTimeField& m,
                                           const LevelSetState& snapshot, double dt) {
    RegularityReport rep;
    rep.check = "arrival_consistency";
    rep.constants["t_snapshot"] = snapshot.t;
    rep.tolerance = 0.0;
    const Grid2D& g = m.grid;
    const double ts = snapshot.t;
    for (std::size_t k = 0; k < m.m.size(); ++k) {
        double u = snapshot.u[k];
        double mv = m.m[k];
        double v;
        if (u >= 0.0)
            v = (std::isfinite(mv) ? mv - ts : kInf) - dt;
        else
            v = (ts - (std::isfinite(mv) ? mv : kInf)) - dt;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            int i = static_cast<int>(k % g.nx);
            int j = static_cast<int>(k / g.nx);
            rep.location = {g.s_coord(i), g.t_coord(j)};
        }
    }
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// The full verification suite.

namespace {

struct SeedReports {
    std::vector<RegularityReport> reports;
    double c2 = 0.0;
};

/// Time-regularity C2 fitted on a reduced window at the given spacing.
double fitted_c2_on_window(const FieldSpec& spec, std::uint64_t seed, double h,
                           double window, double source_offset, double r0,
                           std::uint64_t sample_seed) {
    FieldSpec fs = spec;
    fs.transverse_period = window;
    CoefficientField field = CoefficientField::sample(fs, seed);
    Grid2D grid;
    grid.spacing = h;
    grid.nx = static_cast<int>(std::lround(window / h)) + 1;
    grid.ny = static_cast<int>(std::lround(window / h));
    grid.transverse_periodic = true;
    InitialSet src = InitialSet::half_space(source_offset, r0);
    double t_max = 2.0 * window / spec.c_min + 10.0;
    auto res = compute_arrival(field, src, grid, t_max);
    auto rep = check_time_regularity(res.field, spec.c_max, sample_seed);
    return rep.constants.at("C2");
}

SeedReports run_one_seed(const VerifyConfig& cfg, std::uint64_t field_seed,
                         std::uint64_t check_seed_base) {
    SeedReports out;
    FieldSpec fs = cfg.spec;
    fs.transverse_period = cfg.window;
    CoefficientField field = CoefficientField::sample(fs, field_seed);
    const double c_min = field.c_min();
    const double c_max = field.c_max();
    const double tau = waiting_time_tau(cfg.r0, c_min);
    const double L = large_scale_slope(cfg.r0, c_min);

    Grid2D grid;
    grid.spacing = cfg.h;
    grid.nx = static_cast<int>(std::lround(cfg.window / cfg.h)) + 1;
    grid.ny = static_cast<int>(std::lround(cfg.window / cfg.h));
    grid.transverse_periodic = true;

    InitialSet src = InitialSet::half_space(cfg.source_offset, cfg.r0);
    const double t_max = 2.0 * cfg.window / c_min + 20.0;
    const double dt = cfl_dt(cfg.h, c_max, true);

    // Base run with a mid-time snapshot for the consistency check.
    LevelSetSolver solver(grid, field, src, {});
    const double t_snap = cfg.semigroup_t;
    StopCondition to_snap;
    to_snap.time_at_least = t_snap;
    to_snap.t_max = t_max;
    if (solver.evolve_until(to_snap) == EvolveStatus::Aborted)
        throw std::runtime_error("verify: solver aborted: " + solver.abort_message());
    LevelSetState snapshot = solver.snapshot();
    StopCondition to_end;
    to_end.all_nodes_crossed = true;
    to_end.t_max = t_max;
    if (solver.evolve_until(to_end) == EvolveStatus::Aborted)
        throw std::runtime_error("verify: solver aborted: " + solver.abort_message());
    ArrivalTimeField m_full;
    m_full.grid = grid;
    m_full.m = solver.arrival();
    m_full.source = solver.source_mask();
    m_full.horizon = solver.time();
    m_full.field_seed = field_seed;
    m_full.source_r0 = cfg.r0;

    out.reports.push_back(check_small_scale_lipschitz(
        m_full, c_min, field.certified_lipschitz(), check_seed_base + 1));
    out.reports.push_back(
        check_large_scale_lipschitz(m_full, tau, L, check_seed_base + 2));
    out.reports.push_back(
        check_filling_time(m_full, cfg.r0, c_min, check_seed_base + 3));
    out.reports.push_back(
        check_monotone_growth(m_full, tau, L, check_seed_base + 4));
    auto timereg = check_time_regularity(m_full, c_max, check_seed_base + 5);
    out.c2 = timereg.constants.at("C2");
    out.reports.push_back(std::move(timereg));
    out.reports.push_back(check_arrival_consistency(m_full, snapshot, dt));

    // Data continuity: the same medium, source shifted forward by 1.
    {
        InitialSet shifted = InitialSet::half_space(cfg.source_offset + 1.0, cfg.r0);
        auto res = compute_arrival(field, shifted, grid, t_max);
        out.reports.push_back(check_data_continuity(m_full, res.field, c_min));
    }

    // Sublevel localization: splice the medium beyond {m <= t_loc}.
    {
        const double blend =
            std::max((c_max - c_min) / field.spec().lipschitz_bound, 2.0 * cfg.h);
        GridSet region = m_full.sublevel(cfg.localization_t).dilate(blend);
        CoefficientField other = CoefficientField::sample(fs, mix64(field_seed + 77));
        CoefficientField spliced = CoefficientField::splice(field, other, region, blend);
        auto res = compute_arrival(spliced, src, grid, cfg.localization_t + 5.0);
        out.reports.push_back(check_sublevel_localization(
            m_full, res.field, cfg.localization_t, blend + 3.0 * cfg.h, dt));
    }

    // Semigroup: restart from the regularized sublevel set at t_sg.
    {
        const double t_sg = cfg.semigroup_t;
        GridSet restart_set = regularize_set(m_full.sublevel(t_sg), cfg.r0);
        InitialSet restart = InitialSet::from_mask(restart_set, cfg.r0);
        auto res = compute_arrival(field, restart, grid, t_max);
        out.reports.push_back(check_semigroup(m_full, res.field, t_sg, tau));
    }
    return out;
}

} // namespace

std::vector<RegularityReport> verify_suite(const VerifyConfig& cfg) {
    std::vector<SeedReports> per_seed(cfg.n_seeds);
    std::vector<std::uint64_t> field_seeds(cfg.n_seeds);
    for (int k = 0; k < cfg.n_seeds; ++k)
        field_seeds[k] = hash_combine(mix64(cfg.master_seed), k);

    run_tasks(cfg.n_seeds, cfg.jobs, [&](std::size_t k) {
        per_seed[k] = run_one_seed(cfg, field_seeds[k],
                                   hash_combine(mix64(cfg.master_seed), 1000 + k));
    });

    // Aggregate: worst violation per check across seeds.
    std::vector<RegularityReport> agg = per_seed[0].reports;
    for (int k = 1; k < cfg.n_seeds; ++k) {
        for (std::size_t c = 0; c < agg.size(); ++c) {
            const auto& r = per_seed[k].reports[c];
            if (r.max_violation > agg[c].max_violation) {
                agg[c].max_violation = r.max_violation;
                agg[c].location = r.location;
            }
            for (const auto& [key, val] : r.constants) {
                if (key == "tau_hat" || key == "L_hat" || key == "C2")
                    agg[c].constants[key] = std::max(agg[c].constants[key], val);
            }
        }
    }
    for (auto& r : agg) {
        r.constants["seeds"] = cfg.n_seeds;
        r.finalize();
    }

    // Refinement stability of the fitted time-regularity constant.
    if (cfg.refine_check) {
        double c2_h = 0.0, c2_half = 0.0;
        int nref = std::min(cfg.refine_seeds, cfg.n_seeds);
        std::vector<double> a(nref), b(nref);
        run_tasks(static_cast<std::size_t>(nref) * 2, cfg.jobs, [&](std::size_t task) {
            int k = static_cast<int>(task / 2);
            bool fine = (task % 2) != 0;
            double h = fine ? cfg.h / 2.0 : cfg.h;
            double c2 = fitted_c2_on_window(cfg.spec, field_seeds[k], h,
                                            cfg.refine_window, cfg.source_offset, cfg.r0,
                                            hash_combine(mix64(cfg.master_seed), 555));
            (fine ? b[k] : a[k]) = c2;
        });
        for (int k = 0; k < nref; ++k) {
            c2_h = std::max(c2_h, a[k]);
            c2_half = std::max(c2_half, b[k]);
        }
        for (auto& r : agg) {
            if (r.check != "time_regularity") continue;
            r.constants["C2_refined"] = c2_half;
            r.constants["C2_window"] = c2_h;
            // Stable within 2x, with a small absolute floor for near-zero fits.
            double hi = std::max(c2_h, c2_half);
            double lo = std::min(c2_h, c2_half);
            r.max_violation = std::max(r.max_violation, hi - (2.0 * lo + 0.05));
            r.finalize();
        }
    }
    return agg;
}

} // namespace fmcf
