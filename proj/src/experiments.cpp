#include "fmcf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fmcf/rng.hpp"
#include "fmcf/task_pool.hpp"

namespace fmcf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_axis_direction(Vec2 e) {
    return std::abs(e.x - 1.0) < 1e-12 && std::abs(e.y) < 1e-12;
}

/// Leading front position per row at time t, from the arrival field.
double front_position(const ArrivalTimeField& m, int j, double t) {
    const Grid2D& g = m.grid;
    for (int i = g.nx - 1; i >= 0; --i) {
        double mv = m.at(i, j);
        if (mv <= t) {
            if (i + 1 >= g.nx) return g.s_coord(i);
            double up = m.at(i + 1, j);
            double frac = (up > t && std::isfinite(up)) ? (t - mv) / (up - mv)
                          : std::isfinite(up)           ? 0.0
                                                        : 0.0;
            return g.s_coord(i) + frac * g.spacing;
        }
    }
    return g.s_coord(0);
}

double front_width(const ArrivalTimeField& m, double t) {
    double lo = kInf, hi = -kInf;
    for (int j = 0; j < m.grid.ny; ++j) {
        double x = front_position(m, j, t);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

} // namespace

void ExperimentPlan::validate() const {
    if (times.empty()) throw std::invalid_argument("plan needs at least one probe time");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (times[k] <= times[k - 1])
            throw std::invalid_argument("plan times must be sorted ascending");
    if (times.front() <= 0.0) throw std::invalid_argument("plan times must be positive");
    if (n_seeds < 2) throw std::invalid_argument("plan needs n_seeds >= 2");
    spec.validate();
}

int FrontSampleSet::n_ok() const {
    int n = 0;
    for (char c : ok) n += (c != 0);
    return n;
}

FrontSampleSet collect_front_samples(const ExperimentPlan& plan, Vec2 e,
                                     CollectOptions opt) {
    plan.validate();
    e = e.normalized();
    const bool axis = is_axis_direction(e);
    const bool periodic = opt.periodic_transverse && axis;

    FrontSampleSet out;
    out.direction = e;
    out.times = plan.times;
    out.seeds.resize(plan.n_seeds);
    out.ok.assign(plan.n_seeds, 0);
    out.m.assign(plan.n_seeds, {});
    if (opt.measure_flatness) out.w.assign(plan.n_seeds, {});
    for (int k = 0; k < plan.n_seeds; ++k)
        out.seeds[k] = hash_combine(mix64(plan.spec.master_seed), k);

    const double h = plan.h;
    const double max_t = plan.times.back();
    const double c_min = plan.spec.c_min;

    // Flatness needs the whole front inside the window up to max_t; probe
    // runs only need the probe column plus a margin.
    const double extent = opt.measure_flatness
                              ? plan.source_offset + plan.spec.c_max * max_t + 8.0
                              : plan.source_offset + max_t + 6.0;
    Grid2D grid;
    grid.spacing = h;
    grid.nx = static_cast<int>(std::lround(extent / h)) + 1;
    grid.ny = static_cast<int>(std::lround(plan.window / h));
    grid.transverse_periodic = periodic;
    grid.front_direction = e;
    const int probe_row = grid.ny / 2;
    const double t_max = plan.t_max_factor * max_t / c_min + 20.0;

    run_tasks(plan.n_seeds, plan.jobs, [&](std::size_t k) {
        FieldSpec fs = plan.spec;
        if (periodic)
            fs.transverse_period = plan.window;
        else
            fs.transverse_period.reset();
        CoefficientField field = opt.field_factory
                                     ? opt.field_factory(out.seeds[k])
                                     : CoefficientField::sample(fs, out.seeds[k]);

        SolverOptions sopt;
        sopt.band_mode = true;
        InitialSet src = InitialSet::half_space(plan.source_offset);
        StopCondition stop;
        stop.t_max = t_max;
        for (double t : plan.times) {
            int pi = static_cast<int>(std::lround((plan.source_offset + t) / h));
            stop.probes_crossed.emplace_back(pi, probe_row);
        }
        if (opt.measure_flatness) stop.time_at_least = max_t;

        try {
            LevelSetSolver solver(grid, field, src, sopt);
            EvolveStatus st = solver.evolve_until(stop);
            if (st != EvolveStatus::Done) return; // seed failed, stays not-ok
            ArrivalTimeField af;
            af.grid = grid;
            af.m = solver.arrival();
            af.source = solver.source_mask();
            af.horizon = solver.time();
            std::vector<double> ms;
            for (double t : plan.times) {
                int pi = static_cast<int>(std::lround((plan.source_offset + t) / h));
                ms.push_back(af.at(pi, probe_row));
            }
            out.m[k] = std::move(ms);
            if (opt.measure_flatness) {
                std::vector<double> ws;
                for (double t : plan.times) ws.push_back(front_width(af, t));
                out.w[k] = std::move(ws);
            }
            out.ok[k] = 1;
        } catch (const std::exception&) {
            // leave seed marked failed
        }
    });

    if (out.n_ok() < static_cast<int>(std::ceil(0.8 * plan.n_seeds)))
        throw std::runtime_error("front experiment: more than 20% of seeds failed");
    return out;
}

namespace {

std::vector<double> samples_at(const FrontSampleSet& s, std::size_t ti) {
    std::vector<double> v;
    for (std::size_t k = 0; k < s.m.size(); ++k)
        if (s.ok[k]) v.push_back(s.m[k][ti]);
    return v;
}

} // namespace

SpeedEstimate speed_estimate_from(const ExperimentPlan& plan, const FrontSampleSet& s) {
    SpeedEstimate est;
    est.direction = s.direction;
    est.times = s.times;
    est.n_seeds = plan.n_seeds;
    est.n_failed = plan.n_seeds - s.n_ok();
    for (std::size_t ti = 0; ti < s.times.size(); ++ti) {
        auto v = samples_at(s, ti);
        est.mu.push_back(mean(v));
        est.sigma.push_back(sample_std(v));
    }
    est.mu_increasing = true;
    for (std::size_t ti = 1; ti < est.mu.size(); ++ti)
        if (est.mu[ti] <= est.mu[ti - 1]) est.mu_increasing = false;

    const std::size_t last = s.times.size() - 1;
    est.c_bar = s.times[last] / est.mu[last];
    auto vlast = samples_at(s, last);
    auto stat = [&](const std::vector<std::size_t>& pick) {
        double acc = 0.0;
        for (auto id : pick) acc += vlast[id];
        return s.times[last] / (acc / static_cast<double>(pick.size()));
    };
    auto ci = bootstrap_interval(vlast.size(), stat, 800,
                                 hash_combine(mix64(plan.spec.master_seed), 9001));
    est.c_bar_ci = {ci.first, ci.second};
    double tol = 0.05 * plan.spec.c_max;
    est.speed_in_bounds =
        est.c_bar >= plan.spec.c_min - tol && est.c_bar <= plan.spec.c_max + tol;
    return est;
}

SpeedEstimate run_speed_experiment(const ExperimentPlan& plan, Vec2 e) {
    return speed_estimate_from(plan, collect_front_samples(plan, e));
}

FluctuationStats fluctuation_stats_from(const ExperimentPlan& plan,
                                        const FrontSampleSet& s) {
    FluctuationStats fl;
    fl.times = s.times;
    std::vector<double> mu;
    for (std::size_t ti = 0; ti < s.times.size(); ++ti) {
        auto v = samples_at(s, ti);
        mu.push_back(mean(v));
        fl.sigma.push_back(sample_std(v));
    }
    // Fit over the largest decade of t.
    std::vector<double> ft, fs;
    for (std::size_t ti = 0; ti < s.times.size(); ++ti)
        if (s.times[ti] >= s.times.back() / 10.0 - 1e-12) {
            ft.push_back(s.times[ti]);
            fs.push_back(fl.sigma[ti]);
        }
    fl.fit = fit_power_law(ft, fs);

    // Pooled tail fractions of |m - mu(t)| / sqrt(t).
    const double lambdas[3] = {1.0, 2.0, 3.0};
    std::size_t total = 0;
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t ti = 0; ti < s.times.size(); ++ti) {
        double rt = std::sqrt(s.times[ti]);
        for (std::size_t k = 0; k < s.m.size(); ++k) {
            if (!s.ok[k]) continue;
            double dev = std::abs(s.m[k][ti] - mu[ti]);
            ++total;
            for (int l = 0; l < 3; ++l)
                if (dev > lambdas[l] * rt) ++counts[l];
        }
    }
    for (int l = 0; l < 3; ++l)
        fl.tail_fraction[l] =
            total ? static_cast<double>(counts[l]) / static_cast<double>(total) : 0.0;
    fl.envelope_c = calibrate_envelope_constant(fl.tail_fraction[0]);
    for (int l = 0; l < 3; ++l)
        fl.tail_envelope[l] =
            fl.envelope_c > 0.0
                ? fl.envelope_c * std::exp(-lambdas[l] * lambdas[l] / fl.envelope_c)
                : 0.0;
    fl.tails_pass = fl.tail_fraction[1] <= fl.tail_envelope[1] + 1e-12 &&
                    fl.tail_fraction[2] <= fl.tail_envelope[2] + 1e-12;
    return fl;
}

FluctuationStats run_fluctuation_experiment(const ExperimentPlan& plan, Vec2 e) {
    if (plan.n_seeds < 64)
        throw std::invalid_argument("fluctuation experiment needs n_seeds >= 64");
    return fluctuation_stats_from(plan, collect_front_samples(plan, e));
}

LinearityReport linearity_from(const ExperimentPlan& plan, const FrontSampleSet& s) {
    LinearityReport rep;
    auto index_of = [&](double t) -> int {
        for (std::size_t k = 0; k < s.times.size(); ++k)
            if (std::abs(s.times[k] - t) < 1e-9) return static_cast<int>(k);
        return -1;
    };
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        double t = s.times[k];
        int i2 = index_of(2.0 * t);
        if (i2 < 0) continue;
        auto v1 = samples_at(s, k);
        auto v2 = samples_at(s, i2);
        double d = std::abs(2.0 * mean(v1) - mean(v2));
        rep.t_values.push_back(t);
        rep.delta.push_back(d);
        rep.normalized.push_back(d / std::pow(t, 2.0 / 3.0));
    }
    if (rep.t_values.size() < 2) {
        rep.pass = rep.t_values.size() == 1; // single point: nothing to compare
        return rep;
    }
    // Paired bootstrap of normalized(max t) - 2 * normalized(min t).
    int lo = index_of(rep.t_values.front());
    int lo2 = index_of(2.0 * rep.t_values.front());
    int hi = index_of(rep.t_values.back());
    int hi2 = index_of(2.0 * rep.t_values.back());
    std::vector<std::size_t> okset;
    for (std::size_t k = 0; k < s.m.size(); ++k)
        if (s.ok[k]) okset.push_back(k);
    auto stat = [&](const std::vector<std::size_t>& pick) {
        double m_lo = 0, m_lo2 = 0, m_hi = 0, m_hi2 = 0;
        for (auto id : pick) {
            const auto& row = s.m[okset[id]];
            m_lo += row[lo];
            m_lo2 += row[lo2];
            m_hi += row[hi];
            m_hi2 += row[hi2];
        }
        double n = static_cast<double>(pick.size());
        double eta_lo = std::abs(2.0 * m_lo / n - m_lo2 / n) /
                        std::pow(rep.t_values.front(), 2.0 / 3.0);
        double eta_hi = std::abs(2.0 * m_hi / n - m_hi2 / n) /
                        std::pow(rep.t_values.back(), 2.0 / 3.0);
        return eta_hi - 2.0 * eta_lo;
    };
    rep.stat_error = 2.0 * bootstrap_se(okset.size(), stat, 600,
                                        hash_combine(mix64(plan.spec.master_seed), 9002));
    rep.trend_gap = rep.normalized.back() - 2.0 * rep.normalized.front();
    rep.pass = rep.trend_gap <= rep.stat_error;
    return rep;
}

LinearityReport check_approximate_linearity(const ExperimentPlan& plan, Vec2 e) {
    bool has_pair = false;
    for (double t : plan.times)
        for (double t2 : plan.times)
            if (std::abs(t2 - 2.0 * t) < 1e-9) has_pair = true;
    if (!has_pair)
        throw std::invalid_argument("linearity check needs times containing (t, 2t)");
    return linearity_from(plan, collect_front_samples(plan, e));
}

DirectionProfile run_direction_profile(const ExperimentPlan& plan) {
    if (plan.directions.size() < 2)
        throw std::invalid_argument("direction profile needs at least two directions");
    DirectionProfile prof;
    prof.directions = plan.directions;
    const std::size_t nd = plan.directions.size();
    prof.c_bar.assign(nd, 0.0);
    prof.mc_std.assign(nd, 0.0);

    // Non-periodic lateral boundaries so every direction is treated alike;
    // shared seeds give common random numbers across directions.
    std::vector<FrontSampleSet> sets(nd);
    run_tasks(nd, 1, [&](std::size_t d) {
        ExperimentPlan sub = plan;
        sub.jobs = plan.jobs; // seeds parallelize inside
        CollectOptions copt;
        copt.periodic_transverse = false;
        sets[d] = collect_front_samples(sub, plan.directions[d], copt);
    });

    const std::size_t last = plan.times.size() - 1;
    for (std::size_t d = 0; d < nd; ++d) {
        auto v = samples_at(sets[d], last);
        double mu = mean(v);
        prof.c_bar[d] = plan.times[last] / mu;
        auto stat = [&](const std::vector<std::size_t>& pick) {
            double acc = 0.0;
            for (auto id : pick) acc += v[id];
            return plan.times[last] / (acc / static_cast<double>(pick.size()));
        };
        prof.mc_std[d] = bootstrap_se(v.size(), stat, 500,
                                      hash_combine(mix64(plan.spec.master_seed), 9100 + d));
    }

    double cmax = *std::max_element(prof.c_bar.begin(), prof.c_bar.end());
    double cmin = *std::min_element(prof.c_bar.begin(), prof.c_bar.end());
    prof.spread = cmax - cmin;
    double worst_std = *std::max_element(prof.mc_std.begin(), prof.mc_std.end());
    prof.pass_spread = prof.spread <= 2.0 * worst_std + 1e-12;

    // Envelope constant from well-separated pairs, validated on the nearest.
    prof.near_distance = kInf;
    std::size_t na = 0, nb = 0;
    for (std::size_t a = 0; a < nd; ++a)
        for (std::size_t b = a + 1; b < nd; ++b) {
            double dist = (plan.directions[a] - plan.directions[b]).norm();
            if (dist < prof.near_distance) {
                prof.near_distance = dist;
                na = a;
                nb = b;
            }
            if (dist >= 0.15 && dist < 1.0) {
                double inc = std::abs(prof.c_bar[a] - prof.c_bar[b]);
                prof.fitted_log_c =
                    std::max(prof.fitted_log_c, inc * std::abs(std::log(dist)));
            }
        }
    prof.near_increment = std::abs(prof.c_bar[na] - prof.c_bar[nb]);
    if (prof.near_distance < 1.0 && prof.near_distance > 0.0) {
        prof.near_bound = std::max(prof.fitted_log_c, 1e-12) /
                          std::abs(std::log(prof.near_distance));
        double se = std::hypot(prof.mc_std[na], prof.mc_std[nb]);
        prof.pass_near = prof.near_increment <= prof.near_bound + 2.0 * se;
    } else {
        prof.pass_near = true;
    }
    return prof;
}

FlatnessReport flatness_from(const ExperimentPlan& plan, const FrontSampleSet& s,
                             double threshold) {
    FlatnessReport rep;
    rep.threshold = threshold;
    rep.times = s.times;
    for (std::size_t ti = 0; ti < s.times.size(); ++ti) {
        std::vector<double> ws;
        for (std::size_t k = 0; k < s.w.size(); ++k)
            if (s.ok[k]) ws.push_back(s.w[k][ti]);
        double med = median(ws);
        rep.median_w.push_back(med);
        rep.ratio.push_back(med / s.times[ti]);
    }
    rep.decreasing = true;
    for (std::size_t ti = 1; ti < rep.ratio.size(); ++ti)
        if (rep.ratio[ti] > rep.ratio[ti - 1]) rep.decreasing = false;
    rep.final_ratio = rep.ratio.empty() ? 0.0 : rep.ratio.back();
    rep.pass = rep.decreasing && rep.final_ratio <= threshold;
    (void)plan;
    return rep;
}

FlatnessReport run_flatness_check(const ExperimentPlan& plan, Vec2 e) {
    CollectOptions copt;
    copt.measure_flatness = true;
    return flatness_from(plan, collect_front_samples(plan, e, copt));
}

LocalizationReport check_ordered_localization(const LocalizationConfig& cfg) {
    LocalizationReport rep;
    const double h = cfg.h;
    Grid2D grid;
    grid.spacing = h;
    grid.nx = static_cast<int>(std::lround(cfg.window / h)) + 1;
    grid.ny = static_cast<int>(std::lround(cfg.window / h)) + 1;
    grid.transverse_periodic = false;

    const Vec2 center{cfg.window / 2.0, cfg.window / 2.0};
    const double t_cross = cfg.window / std::max(cfg.spec.c_min, 1e-9) + 10.0;
    rep.n_schedule = std::ceil(std::pow(cfg.window / 2.0, 2.0 / 3.0));

    std::vector<double> dwin(cfg.n_seeds, 0.0), dout(cfg.n_seeds, 0.0);
    run_tasks(cfg.n_seeds, cfg.jobs, [&](std::size_t k) {
        CoefficientField field =
            cfg.constant_medium
                ? CoefficientField::constant(cfg.constant_value)
                : CoefficientField::sample(cfg.spec,
                                           hash_combine(mix64(cfg.master_seed), k));
        double dt = cfl_dt(h, field.c_max(), true);

        // S1: half-space. S2: the same mask plus a blob outside B_R, so the
        // sources agree (in order) on the window. Both go through the mask
        // path; equal masks then give bit-identical runs. The ordering
        // hypothesis only concerns the window, so the declared R0 is nominal.
        const double r0_nominal = std::max(2.0, 2.0 / field.c_min());
        GridSet mask1(grid), mask2(grid);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                bool in_half = grid.s_coord(i) <= cfg.source_offset;
                double db = std::hypot(grid.s_coord(i) - cfg.blob_center.x,
                                       grid.t_coord(j) - cfg.blob_center.y);
                mask1.set(i, j, in_half);
                mask2.set(i, j, in_half || db <= cfg.blob_radius);
            }
        InitialSet s1 = InitialSet::from_mask(mask1, r0_nominal);
        InitialSet s2 = InitialSet::from_mask(mask2, r0_nominal);

        auto r1 = compute_arrival(field, s1, grid, t_cross);
        auto r2 = compute_arrival(field, s2, grid, t_cross);

        double near_window = 0.0, near_blob = 0.0;
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                double m1 = r1.field.at(i, j), m2 = r2.field.at(i, j);
                if (!std::isfinite(m1) || !std::isfinite(m2)) continue;
                double adv = m1 - m2; // head start of the larger source
                double dc = std::hypot(grid.s_coord(i) - center.x,
                                       grid.t_coord(j) - center.y);
                double dblob = std::hypot(grid.s_coord(i) - cfg.blob_center.x,
                                          grid.t_coord(j) - cfg.blob_center.y);
                if (dc <= cfg.r_window - cfg.shrink)
                    near_window = std::max(near_window, adv);
                if (dblob <= cfg.blob_radius + 2.0) near_blob = std::max(near_blob, adv);
            }
        dwin[k] = near_window;
        dout[k] = near_blob + 2.0 * dt;
    });

    for (int k = 0; k < cfg.n_seeds; ++k) {
        rep.delta_window = std::max(rep.delta_window, dwin[k]);
        rep.delta_outer = std::max(rep.delta_outer, dout[k]);
    }
    rep.c2_emp = rep.delta_window / rep.n_schedule;
    // The proposition's C2(c_min) is not quantified; the desk-scale pass is
    // a unit cap on the fitted constant (equal sources give exactly 0; the
    // exterior head start, reported alongside, is several times larger).
    rep.pass = rep.c2_emp <= 1.0;
    return rep;
}

} // namespace fmcf
