// Acceptance suite: one pass/fail line per criterion, standard configuration
// c_min = 1, c_max = 2, L0 = 5, r = 0.4, h = 0.1 (0.05 for the circle
// oracles), transverse window 40, R0 = 2, tau = 13, L = 6.5.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "fmcf/arrival_checks.hpp"
#include "fmcf/cli.hpp"
#include "fmcf/experiments.hpp"
#include "fmcf/level_set.hpp"
#include "fmcf/rng.hpp"
#include "fmcf/stats.hpp"

using namespace fmcf;
namespace fs = std::filesystem;

namespace {

int g_pass = 0, g_fail = 0;
std::chrono::steady_clock::time_point g_t0;

double elapsed_s(std::chrono::steady_clock::time_point from) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

void record(int criterion, const std::string& name, bool pass, const std::string& qoi) {
    (pass ? g_pass : g_fail)++;
    std::printf("%s  criterion %2d: %s  %s  [t=%.0fs]\n", pass ? "PASS" : "FAIL",
                criterion, name.c_str(), qoi.c_str(), elapsed_s(g_t0));
    std::fflush(stdout);
}

FieldSpec standard_spec(std::uint64_t seed) {
    FieldSpec s;
    s.c_min = 1.0;
    s.c_max = 2.0;
    s.lipschitz_bound = 5.0;
    s.bump_radius = 0.4;
    s.bump_intensity = 1.0;
    s.amp_lo = 0.5;
    s.amp_hi = 1.0;
    s.master_seed = seed;
    return s;
}

int jobs() {
    if (const char* v = std::getenv("FMCF_JOBS")) return std::atoi(v);
    return 0;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// --------------------------------------------------------------------------

void criterion1_flat_front() {
    ExperimentPlan plan;
    plan.spec = standard_spec(101);
    plan.times = {5.0, 10.0, 20.0};
    plan.n_seeds = 2;
    plan.window = 40.0;
    plan.jobs = jobs();
    CollectOptions opt;
    opt.field_factory = [](std::uint64_t) { return CoefficientField::constant(1.0); };
    auto s = collect_front_samples(plan, {1.0, 0.0}, opt);
    double worst = 0.0;
    for (std::size_t ti = 0; ti < s.times.size(); ++ti)
        worst = std::max(worst, std::abs(s.m[0][ti] - s.times[ti]) / s.times[ti]);
    record(1, "flat-front oracle m(te) = t, t in {5,10,20}", worst < 0.02,
           fmt("(max rel err %.5f, tol 0.02)", worst));
}

void criterion2_circle_oracles() {
    // (a) forcing-disabled shrinking disc vs r(t) = sqrt(r0^2 - 2t)
    {
        const double h = 0.05, r0 = 1.2;
        Grid2D g;
        g.spacing = h;
        g.origin_s = -1.6;
        g.origin_t = -1.6;
        g.nx = 65;
        g.ny = 65;
        LevelSetState s = make_signed_disc_state(g, {0.0, 0.0}, r0);
        CoefficientField one = CoefficientField::constant(1.0);
        double worst = 0.0;
        long n = 0;
        bool ok = true;
        while (true) {
            double r2 = r0 * r0 - 2.0 * s.t;
            if (r2 < 16.0 * h * h) break;
            if (n % 100 == 0 && s.t > 0.05) {
                double re = std::sqrt(r2);
                int jc = 32;
                double rn = 0.0;
                for (int i = g.nx - 1; i > 0; --i) {
                    double ui = s.at(i, jc), um = s.at(i - 1, jc);
                    if (ui < 0.0 && um >= 0.0) {
                        rn = g.s_coord(i - 1) + um / (um - ui) * h;
                        break;
                    }
                }
                worst = std::max(worst, std::abs(rn - re) / re);
            }
            ok = ok && step(s, one, false);
            ++n;
        }
        record(2, "shrinking-disc oracle r(t)^2 = r0^2 - 2t down to 4h",
               ok && worst < 0.02, fmt("(max rel err %.5f, tol 0.02)", worst));
    }
    // (b) expanding disc, c = 1, r0 = 2 -> 10 vs RK4 of dr/dt = 1 - 1/r
    {
        const double h = 0.05;
        Grid2D g;
        g.spacing = h;
        g.origin_s = -10.8;
        g.origin_t = -10.8;
        g.nx = static_cast<int>(std::lround(21.6 / h)) + 1;
        g.ny = g.nx;
        CoefficientField one = CoefficientField::constant(1.0);
        LevelSetSolver solver(g, one, InitialSet::disc({0.0, 0.0}, 2.0), {});
        auto rk4_radius = [](double r0, double t_end) {
            double r = r0, t = 0.0, dt = 1e-4;
            auto f = [](double rr) { return 1.0 - 1.0 / rr; };
            while (t < t_end - 1e-12) {
                double s2 = std::min(dt, t_end - t);
                double k1 = f(r), k2 = f(r + 0.5 * s2 * k1), k3 = f(r + 0.5 * s2 * k2),
                       k4 = f(r + s2 * k3);
                r += s2 / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
                t += s2;
            }
            return r;
        };
        double worst = 0.0;
        bool ok = true;
        // r = 10 is reached at 8 + ln(9) ~ 10.197
        for (double t_probe : {2.0, 4.0, 6.0, 8.0, 10.19}) {
            StopCondition stop;
            stop.time_at_least = t_probe;
            stop.t_max = 14.0;
            ok = ok && solver.evolve_until(stop) == EvolveStatus::Done;
            LevelSetState snap = solver.snapshot();
            int jc = (g.ny - 1) / 2;
            double rn = 0.0;
            for (int i = g.nx - 1; i > 0; --i) {
                double ui = snap.at(i, jc), um = snap.at(i - 1, jc);
                if (ui < 0.0 && um >= 0.0) {
                    rn = g.s_coord(i - 1) + um / (um - ui) * h;
                    break;
                }
            }
            double re = rk4_radius(2.0, solver.time());
            worst = std::max(worst, std::abs(rn - re) / re);
        }
        record(2, "expanding-disc oracle vs RK4, r0 = 2 to r = 10",
               ok && worst < 0.02, fmt("(max rel err %.5f, tol 0.02)", worst));
    }
}

void criterion3_monotone_pairs() {
    // 200 random front-like ordered pairs, 100 steps each, zero violations.
    Grid2D g;
    g.spacing = 0.1;
    g.nx = 64;
    g.ny = 60;
    g.transverse_periodic = true;
    FieldSpec spec = standard_spec(303);
    spec.transverse_period = 6.0;
    long violations = 0;
    double worst_gap = 0.0;
    for (int pair = 0; pair < 200; ++pair) {
        CoefficientField field =
            CoefficientField::sample(spec, hash_combine(mix64(303), pair));
        SplitMix64 rng(hash_combine(mix64(909), pair));
        double phi = rng.next_double(0.0, 2.0 * M_PI);
        struct Mode {
            double a, kx, ky, ph;
        } modes[4];
        for (auto& m : modes) {
            m.a = 0.25 * rng.next_double(0.3, 1.0);
            m.kx = rng.next_double(-1.2, 1.2);
            m.ky = rng.next_double(-1.2, 1.2);
            m.ph = rng.next_double(0.0, 2.0 * M_PI);
        }
        double gx = rng.next_double(0.4, 1.0), gy = rng.next_double(0.4, 1.0);
        double gp = rng.next_double(0.0, 2.0 * M_PI);
        LevelSetState u;
        u.grid = g;
        u.u.resize(g.size());
        LevelSetState v = u;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double x = g.s_coord(i), y = g.t_coord(j);
                double base = x * std::cos(phi) + y * std::sin(phi);
                for (const auto& m : modes) base += m.a * std::cos(m.kx * x + m.ky * y + m.ph);
                double wig = 0.5 + 0.5 * std::cos(gx * x + gy * y + gp);
                u.u[g.idx(i, j)] = base;
                v.u[g.idx(i, j)] = base + 0.4 + 0.2 * wig;
            }
        for (int n = 0; n < 100; ++n) {
            step(u, field, true);
            step(v, field, true);
        }
        for (std::size_t k = 0; k < u.u.size(); ++k) {
            double gap = v.u[k] - u.u[k];
            if (gap < 0.0) {
                ++violations;
                worst_gap = std::min(worst_gap, gap);
            }
        }
    }
    record(3, "monotone scheme: 200 ordered pairs stay ordered for 100 steps",
           violations == 0, fmt("(violations %ld, worst gap %.3e)", violations, worst_gap));
}

int criterion4_verify_cli(const fs::path& out_root) {
    fs::path out = out_root / "verify";
    auto cfg = cli::parse_args({"fmcf", "verify", "-o", out.string(), "--seed", "404"});
    cfg.jobs = jobs();
    int code = cli::run(cfg);
    record(4, "regularity suite `verify` (8 seeds, nine checks)", code == 0,
           fmt("(exit code %d)", code));
    return code;
}

void criteria5_6_7_fluctuations(const fs::path& out_root) {
    ExperimentPlan plan;
    plan.spec = standard_spec(505);
    plan.times = {10.0, 20.0, 40.0, 80.0};
    plan.n_seeds = 64;
    plan.window = 40.0;
    plan.jobs = jobs();
    FrontSampleSet samples = collect_front_samples(plan, {1.0, 0.0});

    // criterion 5: sigma(t) ~ A t^beta with beta <= 0.6, R^2 >= 0.8; tails
    FluctuationStats fl = fluctuation_stats_from(plan, samples);
    bool beta_ok = !fl.fit.degenerate && fl.fit.exponent <= 0.6 && fl.fit.r2 >= 0.8;
    record(5, "fluctuation scaling beta <= 0.6 with R^2 >= 0.8", beta_ok,
           fmt("(beta %.3f, R2 %.3f)", fl.fit.exponent, fl.fit.r2));
    record(5, "sub-Gaussian tails under the lambda=1-calibrated envelope", fl.tails_pass,
           fmt("(frac %.4f/%.4f vs env %.4f/%.4f at lambda 2,3)", fl.tail_fraction[1],
               fl.tail_fraction[2], fl.tail_envelope[1], fl.tail_envelope[2]));

    // criterion 6: approximate linearity trend
    LinearityReport lin = linearity_from(plan, samples);
    record(6, "approximate linearity: eta(40) <= 2 eta(10) + stat error", lin.pass,
           fmt("(eta %.4f -> %.4f, allowance %.4f)", lin.normalized.front(),
               lin.normalized.back(), 2.0 * lin.normalized.front() + lin.stat_error));

    // criterion 7: |t/mu(t) - 2t/mu(2t)| decreasing over t in {10, 20, 40}
    SpeedEstimate est = speed_estimate_from(plan, samples);
    auto mu_at = [&](double t) {
        for (std::size_t k = 0; k < est.times.size(); ++k)
            if (std::abs(est.times[k] - t) < 1e-9) return est.mu[k];
        return 0.0;
    };
    std::vector<double> gap;
    for (double t : {10.0, 20.0, 40.0})
        gap.push_back(std::abs(t / mu_at(t) - 2.0 * t / mu_at(2.0 * t)));
    bool decreasing = gap[0] >= gap[1] && gap[1] >= gap[2];
    record(7, "speed convergence: |t/mu(t) - 2t/mu(2t)| decreasing", decreasing,
           fmt("(gaps %.5f, %.5f, %.5f)", gap[0], gap[1], gap[2]));

    // persist the raw samples alongside the acceptance outputs
    CsvWriter csv({"direction_x", "direction_y", "t", "seed", "m"});
    for (std::size_t k = 0; k < samples.m.size(); ++k) {
        if (!samples.ok[k]) continue;
        for (std::size_t ti = 0; ti < samples.times.size(); ++ti)
            csv.add_row({1.0, 0.0, samples.times[ti],
                         static_cast<double>(samples.seeds[k]), samples.m[k][ti]});
    }
    csv.write(out_root / "fluct_samples.csv");
}

void criterion8_flatness() {
    ExperimentPlan plan;
    plan.spec = standard_spec(808);
    plan.times = {20.0, 40.0, 80.0};
    plan.n_seeds = 16;
    plan.window = 40.0;
    plan.jobs = jobs();
    FlatnessReport rep = run_flatness_check(plan, {1.0, 0.0});
    record(8, "flatness: median W(t)/t decreasing and <= 0.1 at t = 80",
           rep.pass,
           fmt("(ratios %.4f, %.4f, %.4f)", rep.ratio[0], rep.ratio[1], rep.ratio[2]));
}

void criterion9_directions() {
    ExperimentPlan plan;
    plan.spec = standard_spec(909);
    plan.times = {10.0, 20.0};
    plan.n_seeds = 8;
    plan.window = 40.0;
    plan.jobs = jobs();
    plan.directions.clear();
    for (int k = 0; k < 8; ++k) {
        double th = 0.5 * M_PI * k / 7.0;
        plan.directions.push_back({std::cos(th), std::sin(th)});
    }
    double th0 = 0.25 * M_PI + 0.02;
    plan.directions.push_back({std::cos(th0), std::sin(th0)});
    plan.directions.push_back({std::cos(th0 + 1e-2), std::sin(th0 + 1e-2)});
    DirectionProfile prof = run_direction_profile(plan);
    record(9, "direction profile: log-continuity envelope at |e1-e2| = 1e-2",
           prof.pass_near,
           fmt("(increment %.5f vs bound %.5f)", prof.near_increment, prof.near_bound));
    record(9, "direction profile: spread <= 2x Monte Carlo std", prof.pass_spread,
           fmt("(spread %.5f, worst MC std %.5f)", prof.spread,
               *std::max_element(prof.mc_std.begin(), prof.mc_std.end())));
}

void criterion10_reproducibility(const fs::path& out_root, int verify_code) {
    fs::path d1 = out_root / "speed_a";
    fs::path d2 = out_root / "speed_b";
    auto cfg = cli::parse_args({"fmcf", "speed", "--seeds", "4", "--times", "2,4",
                                "--window", "8", "--seed", "1010", "-o", d1.string()});
    cfg.jobs = jobs();
    int c1 = cli::run(cfg);
    auto replayed = cli::parse_args(
        {"fmcf", "replay", (d1 / "manifest.json").string(), "-o", d2.string()});
    replayed.jobs = 1; // a different job count must not change any byte
    int c2 = cli::run(replayed);
    bool identical = c1 == 0 && c2 == 0;
    for (const char* name : {"speed_samples.csv", "speed_summary.json"})
        identical = identical && read_text(d1 / name) == read_text(d2 / name);
    record(10, "manifest replay reproduces outputs byte-for-byte", identical,
           fmt("(speed run + replay, exit %d/%d)", c1, c2));
    record(10, "`verify` exit code 0", verify_code == 0, fmt("(code %d)", verify_code));
}

} // namespace

int main() {
    g_t0 = std::chrono::steady_clock::now();
    fs::path out_root = fs::temp_directory_path() / "fmcf_acceptance";
    fs::remove_all(out_root);
    fs::create_directories(out_root);

    std::printf("acceptance: standard configuration c_min=1 c_max=2 L0=5 r=0.4 "
                "h=0.1 window=40 R0=2 tau=13 L=6.5\n");
    criterion1_flat_front();
    criterion2_circle_oracles();
    criterion3_monotone_pairs();
    int verify_code = criterion4_verify_cli(out_root);
    criteria5_6_7_fluctuations(out_root);
    criterion8_flatness();
    criterion9_directions();
    criterion10_reproducibility(out_root, verify_code);

    std::printf("acceptance summary: %d passed, %d failed (%.0f s)\n", g_pass, g_fail,
                elapsed_s(g_t0));
    return g_fail == 0 ? 0 : 1;
}
