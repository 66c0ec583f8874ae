#include "fmcf/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "fmcf/arrival_checks.hpp"
#include "fmcf/experiments.hpp"
#include "fmcf/level_set.hpp"

namespace fs = std::filesystem;

namespace fmcf::cli {

namespace {

const char* kSubcommands[] = {"field",  "evolve",       "arrival", "verify",
                              "speed",  "fluctuations", "directions", "flatness",
                              "localization"};

void add_common_options(CLI::App* sub, CommandConfig& c, std::string& config_file) {
    sub->add_option("--config", config_file, "flat key = value configuration file");
    sub->add_option("--c-min", c.spec.c_min, "lower speed bound c_min")
        ->capture_default_str();
    sub->add_option("--c-max", c.spec.c_max, "upper speed bound c_max")
        ->capture_default_str();
    sub->add_option("--lipschitz-bound", c.spec.lipschitz_bound,
                    "certified bound L0 on |Dc|")
        ->capture_default_str();
    sub->add_option("--bump-radius", c.spec.bump_radius,
                    "bump support radius r (<= 1/2 for unit range of dependence)")
        ->capture_default_str();
    sub->add_option("--bump-intensity", c.spec.bump_intensity,
                    "Poisson points per unit area")
        ->capture_default_str();
    sub->add_option("--amp-lo", c.spec.amp_lo, "bump amplitude lower bound")
        ->capture_default_str();
    sub->add_option("--amp-hi", c.spec.amp_hi, "bump amplitude upper bound")
        ->capture_default_str();
    sub->add_option("--seed", c.spec.master_seed, "master seed")->capture_default_str();
    sub->add_option("--spacing", c.h, "grid spacing h")->capture_default_str();
    sub->add_option("--window", c.window, "window extent (length units)")
        ->capture_default_str();
    sub->add_option("--r0", c.r0, "interior ball radius R0 of the source")
        ->capture_default_str();
    sub->add_option("--source-offset", c.source_offset,
                    "half-space front position in the window")
        ->capture_default_str();
    sub->add_option("--times", c.times, "probe times, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--seeds", c.n_seeds, "number of Monte Carlo seeds")
        ->capture_default_str();
    sub->add_option("--jobs", c.jobs, "worker threads (0 = all cores)")
        ->capture_default_str();
    sub->add_option("-o,--out", c.out_dir, "output directory")->capture_default_str();
    sub->add_option("-e,--direction", c.direction, "front normal direction ex,ey")
        ->delimiter(',')
        ->expected(2)
        ->capture_default_str();
}

std::uint64_t task_seed(const CommandConfig& c, int k) {
    return hash_combine(mix64(c.spec.master_seed), k);
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) out.push_back(std::stod(item));
    return out;
}

/// Flat `key = value` configuration file. Values apply only to keys the
/// command line did not set (flags override the file); unknown keys are
/// usage errors. Returns the canonical keys present in the file.
std::set<std::string> apply_config_file(const std::string& path, CLI::App* sub,
                                        CommandConfig& c) {
    std::set<std::string> seen;
    std::istringstream is(read_text(path));
    std::string line;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    while (std::getline(is, line)) {
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config file: expected `key = value`, got: " + line);
        std::string key = trim(stripped.substr(0, eq));
        std::string val = trim(stripped.substr(eq + 1));
        seen.insert(key);
        if (key == "c_min" || key == "c-min") {
            if (!given("--c-min")) c.spec.c_min = std::stod(val);
        } else if (key == "c_max" || key == "c-max") {
            if (!given("--c-max")) c.spec.c_max = std::stod(val);
        } else if (key == "lipschitz_bound" || key == "lipschitz-bound") {
            if (!given("--lipschitz-bound")) c.spec.lipschitz_bound = std::stod(val);
        } else if (key == "bump_radius" || key == "bump-radius") {
            if (!given("--bump-radius")) c.spec.bump_radius = std::stod(val);
        } else if (key == "bump_intensity" || key == "bump-intensity") {
            if (!given("--bump-intensity")) c.spec.bump_intensity = std::stod(val);
        } else if (key == "amp_lo" || key == "amp-lo") {
            if (!given("--amp-lo")) c.spec.amp_lo = std::stod(val);
        } else if (key == "amp_hi" || key == "amp-hi") {
            if (!given("--amp-hi")) c.spec.amp_hi = std::stod(val);
        } else if (key == "seed") {
            if (!given("--seed")) c.spec.master_seed = std::stoull(val);
        } else if (key == "spacing" || key == "h") {
            if (!given("--spacing")) c.h = std::stod(val);
        } else if (key == "window") {
            if (!given("--window")) c.window = std::stod(val);
        } else if (key == "r0") {
            if (!given("--r0")) c.r0 = std::stod(val);
        } else if (key == "source_offset" || key == "source-offset") {
            if (!given("--source-offset")) c.source_offset = std::stod(val);
        } else if (key == "times") {
            if (!given("--times")) c.times = parse_double_list(val);
        } else if (key == "seeds") {
            if (!given("--seeds")) c.n_seeds = std::stoi(val);
        } else if (key == "jobs") {
            if (!given("--jobs")) c.jobs = std::stoi(val);
        } else if (key == "out") {
            if (!given("--out")) c.out_dir = val;
        } else if (key == "direction") {
            if (!given("--direction")) c.direction = parse_double_list(val);
        } else if (key == "t_end" || key == "t-end") {
            c.t_end = std::stod(val);
        } else if (key == "n_directions" || key == "n-directions") {
            c.n_directions = std::stoi(val);
        } else {
            throw std::invalid_argument("config file: unknown key `" + key + "`");
        }
    }
    return seen;
}

Vec2 config_direction(const CommandConfig& c) {
    Vec2 e{c.direction[0], c.direction[1]};
    double n = e.norm();
    if (!(n > 0.0)) throw std::invalid_argument("direction must be nonzero");
    return {e.x / n, e.y / n};
}

ExperimentPlan make_plan(const CommandConfig& c) {
    ExperimentPlan plan;
    plan.spec = c.spec;
    plan.times = c.times;
    plan.n_seeds = c.n_seeds;
    plan.h = c.h;
    plan.window = c.window;
    plan.source_offset = c.source_offset;
    plan.jobs = c.jobs;
    plan.output_dir = c.out_dir;
    return plan;
}

void write_sample_csv(const fs::path& path, const FrontSampleSet& s) {
    CsvWriter csv({"direction_x", "direction_y", "t", "seed", "m"});
    for (std::size_t k = 0; k < s.m.size(); ++k) {
        if (!s.ok[k]) continue;
        for (std::size_t ti = 0; ti < s.times.size(); ++ti)
            csv.add_row({s.direction.x, s.direction.y, s.times[ti],
                         static_cast<double>(s.seeds[k]), s.m[k][ti]});
    }
    csv.write(path);
}

int run_field(const CommandConfig& c, RunManifest& man) {
    CoefficientField field = CoefficientField::sample(c.spec, c.spec.master_seed);
    CsvWriter csv({"x", "y", "c"});
    int n = static_cast<int>(std::floor(c.sample_extent / c.sample_spacing)) + 1;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double x = i * c.sample_spacing, y = j * c.sample_spacing;
            csv.add_row({x, y, field.evaluate({x, y})});
        }
    fs::path p = fs::path(c.out_dir) / "field_sample.csv";
    csv.write(p);
    man.add_output(p);
    ordered_json meta;
    meta["kind"] = "random-bumps";
    meta["certified_lipschitz"] = field.certified_lipschitz();
    meta["spec"] = c.spec.to_config_text();
    fs::path mp = fs::path(c.out_dir) / "field_meta.json";
    write_json(mp, meta);
    man.add_output(mp);
    return kOk;
}

int run_evolve(const CommandConfig& c, RunManifest& man) {
    if (c.disable_forcing) {
        const char* harness = std::getenv("FMCF_TEST_HARNESS");
        if (!harness || std::string(harness) != "1") {
            std::cerr << "--disable-forcing is an oracle-test mode (the medium must "
                         "satisfy c > 0); set FMCF_TEST_HARNESS=1 to use it\n";
            return kUsage;
        }
    }
    FieldSpec spec = c.spec;
    spec.transverse_period = c.window;
    CoefficientField field = CoefficientField::sample(spec, spec.master_seed);
    Grid2D grid;
    grid.spacing = c.h;
    grid.nx = static_cast<int>(std::lround(c.window / c.h)) + 1;
    grid.ny = static_cast<int>(std::lround(c.window / c.h));
    grid.transverse_periodic = true;
    InitialSet src = c.use_disc_source
                         ? InitialSet::disc({c.window / 2.0, c.window / 2.0}, c.disc_radius)
                         : InitialSet::half_space(c.source_offset, c.r0);
    SolverOptions opt;
    opt.forcing_enabled = !c.disable_forcing;
    LevelSetSolver solver(grid, field, src, opt);
    StopCondition stop;
    stop.time_at_least = c.t_end;
    stop.t_max = c.t_end + 1.0;
    EvolveStatus st = solver.evolve_until(stop);
    if (st == EvolveStatus::Aborted) {
        std::cerr << "solver aborted: " << solver.abort_message() << "\n";
        return kSolverFailure;
    }
    LevelSetState snap = solver.snapshot();
    CsvWriter csv({"x", "y", "u"});
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            Vec2 p = grid.node_pos(i, j);
            csv.add_row({p.x, p.y, snap.u[grid.idx(i, j)]});
        }
    fs::path p = fs::path(c.out_dir) / "snapshot.csv";
    csv.write(p);
    man.add_output(p);
    ordered_json meta;
    meta["t"] = solver.time();
    meta["dt"] = solver.dt();
    meta["steps"] = solver.steps_taken();
    meta["value_cap"] = solver.value_cap();
    meta["grid"] = {{"h", grid.spacing}, {"nx", grid.nx}, {"ny", grid.ny},
                    {"transverse_periodic", grid.transverse_periodic}};
    fs::path mp = fs::path(c.out_dir) / "evolve_meta.json";
    write_json(mp, meta);
    man.add_output(mp);
    return kOk;
}

int run_arrival(const CommandConfig& c, RunManifest& man) {
    FieldSpec spec = c.spec;
    spec.transverse_period = c.window;
    CoefficientField field = CoefficientField::sample(spec, spec.master_seed);
    Grid2D grid;
    grid.spacing = c.h;
    grid.nx = static_cast<int>(std::lround(c.window / c.h)) + 1;
    grid.ny = static_cast<int>(std::lround(c.window / c.h));
    grid.transverse_periodic = true;
    InitialSet src = InitialSet::half_space(c.source_offset, c.r0);
    double t_max = 2.0 * c.window / c.spec.c_min + 20.0;
    auto res = compute_arrival(field, src, grid, t_max);
    if (res.status == EvolveStatus::Aborted) {
        std::cerr << "solver aborted: " << res.message << "\n";
        return kSolverFailure;
    }
    CsvWriter csv({"x", "y", "m"});
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            Vec2 p = grid.node_pos(i, j);
            csv.add_row({p.x, p.y, res.field.at(i, j)});
        }
    fs::path p = fs::path(c.out_dir) / "arrival.csv";
    csv.write(p);
    man.add_output(p);
    return kOk;
}

int run_verify(const CommandConfig& c, RunManifest& man) {
    VerifyConfig vc;
    vc.spec = c.spec;
    vc.n_seeds = c.n_seeds;
    vc.h = c.h;
    vc.window = c.window;
    vc.source_offset = c.source_offset;
    vc.r0 = c.r0;
    vc.master_seed = c.spec.master_seed;
    vc.jobs = c.jobs;
    auto reports = verify_suite(vc);
    ordered_json j = ordered_json::array();
    bool all_pass = true;
    for (const auto& r : reports) {
        j.push_back(r.to_json());
        all_pass = all_pass && r.pass;
        std::cout << (r.pass ? "pass" : "FAIL") << "  " << r.check
                  << "  max_violation=" << format_value(r.max_violation)
                  << " tolerance=" << format_value(r.tolerance) << "\n";
    }
    ordered_json top;
    top["all_pass"] = all_pass;
    top["reports"] = j;
    fs::path p = fs::path(c.out_dir) / "verify_report.json";
    write_json(p, top);
    man.add_output(p);
    return all_pass ? kOk : kCheckFailed;
}

int run_speed(const CommandConfig& c, RunManifest& man) {
    ExperimentPlan plan = make_plan(c);
    Vec2 e = config_direction(c);
    FrontSampleSet samples = collect_front_samples(plan, e);
    SpeedEstimate est = speed_estimate_from(plan, samples);
    fs::path p = fs::path(c.out_dir) / "speed_samples.csv";
    write_sample_csv(p, samples);
    man.add_output(p);
    ordered_json j;
    j["direction"] = {est.direction.x, est.direction.y};
    j["times"] = est.times;
    j["mu"] = est.mu;
    j["sigma"] = est.sigma;
    j["c_bar"] = est.c_bar;
    j["c_bar_ci"] = {est.c_bar_ci[0], est.c_bar_ci[1]};
    j["n_failed"] = est.n_failed;
    j["mu_increasing"] = est.mu_increasing;
    j["speed_in_bounds"] = est.speed_in_bounds;
    fs::path sp = fs::path(c.out_dir) / "speed_summary.json";
    write_json(sp, j);
    man.add_output(sp);
    std::cout << "c_bar(" << e.x << "," << e.y << ") = " << est.c_bar << "  CI ["
              << est.c_bar_ci[0] << ", " << est.c_bar_ci[1] << "]\n";
    return (est.mu_increasing && est.speed_in_bounds) ? kOk : kCheckFailed;
}

int run_fluctuations(const CommandConfig& c, RunManifest& man) {
    ExperimentPlan plan = make_plan(c);
    Vec2 e = config_direction(c);
    if (plan.n_seeds < 64)
        throw std::invalid_argument("fluctuations needs --seeds >= 64");
    FrontSampleSet samples = collect_front_samples(plan, e);
    FluctuationStats fl = fluctuation_stats_from(plan, samples);
    LinearityReport lin = linearity_from(plan, samples);
    SpeedEstimate est = speed_estimate_from(plan, samples);

    fs::path p = fs::path(c.out_dir) / "fluct_samples.csv";
    write_sample_csv(p, samples);
    man.add_output(p);
    ordered_json j;
    j["times"] = fl.times;
    j["sigma"] = fl.sigma;
    j["beta"] = fl.fit.exponent;
    j["fit_r2"] = fl.fit.r2;
    j["degenerate"] = fl.fit.degenerate;
    j["envelope_c"] = fl.envelope_c;
    j["tail_fraction"] = {fl.tail_fraction[0], fl.tail_fraction[1], fl.tail_fraction[2]};
    j["tail_envelope"] = {fl.tail_envelope[0], fl.tail_envelope[1], fl.tail_envelope[2]};
    j["tails_pass"] = fl.tails_pass;
    j["linearity_normalized"] = lin.normalized;
    j["linearity_pass"] = lin.pass;
    j["mu"] = est.mu;
    fs::path sp = fs::path(c.out_dir) / "fluct_summary.json";
    write_json(sp, j);
    man.add_output(sp);

    bool beta_ok = fl.fit.degenerate || (fl.fit.exponent <= 0.6 && fl.fit.r2 >= 0.8);
    std::cout << "beta = " << fl.fit.exponent << " (r2 = " << fl.fit.r2
              << (fl.fit.degenerate ? ", degenerate" : "") << ")\n";
    return (beta_ok && fl.tails_pass) ? kOk : kCheckFailed;
}

int run_directions(const CommandConfig& c, RunManifest& man) {
    ExperimentPlan plan = make_plan(c);
    plan.directions.clear();
    for (int k = 0; k < c.n_directions; ++k) {
        double th = 0.5 * M_PI * k / (c.n_directions - 1);
        plan.directions.push_back({std::cos(th), std::sin(th)});
    }
    // A nearby pair (both members) for the logarithmic-continuity envelope,
    // chosen off the quarter-circle lattice.
    double th0 = 0.25 * M_PI + 0.02;
    plan.directions.push_back({std::cos(th0), std::sin(th0)});
    plan.directions.push_back(
        {std::cos(th0 + c.near_pair_gap), std::sin(th0 + c.near_pair_gap)});
    DirectionProfile prof = run_direction_profile(plan);

    CsvWriter csv({"direction_x", "direction_y", "c_bar", "mc_std"});
    for (std::size_t d = 0; d < prof.directions.size(); ++d)
        csv.add_row({prof.directions[d].x, prof.directions[d].y, prof.c_bar[d],
                     prof.mc_std[d]});
    fs::path p = fs::path(c.out_dir) / "direction_profile.csv";
    csv.write(p);
    man.add_output(p);
    ordered_json j;
    j["spread"] = prof.spread;
    j["fitted_log_c"] = prof.fitted_log_c;
    j["near_distance"] = prof.near_distance;
    j["near_increment"] = prof.near_increment;
    j["near_bound"] = prof.near_bound;
    j["pass_near"] = prof.pass_near;
    j["pass_spread"] = prof.pass_spread;
    fs::path sp = fs::path(c.out_dir) / "direction_summary.json";
    write_json(sp, j);
    man.add_output(sp);
    return (prof.pass_near && prof.pass_spread) ? kOk : kCheckFailed;
}

int run_flatness(const CommandConfig& c, RunManifest& man) {
    ExperimentPlan plan = make_plan(c);
    Vec2 e = config_direction(c);
    CollectOptions copt;
    copt.measure_flatness = true;
    FrontSampleSet samples = collect_front_samples(plan, e, copt);
    FlatnessReport rep = flatness_from(plan, samples);

    CsvWriter csv({"seed", "t", "w"});
    for (std::size_t k = 0; k < samples.w.size(); ++k) {
        if (!samples.ok[k]) continue;
        for (std::size_t ti = 0; ti < samples.times.size(); ++ti)
            csv.add_row({static_cast<double>(samples.seeds[k]), samples.times[ti],
                         samples.w[k][ti]});
    }
    fs::path p = fs::path(c.out_dir) / "flatness_samples.csv";
    csv.write(p);
    man.add_output(p);
    ordered_json j;
    j["times"] = rep.times;
    j["median_w"] = rep.median_w;
    j["ratio"] = rep.ratio;
    j["decreasing"] = rep.decreasing;
    j["final_ratio"] = rep.final_ratio;
    j["pass"] = rep.pass;
    fs::path sp = fs::path(c.out_dir) / "flatness_summary.json";
    write_json(sp, j);
    man.add_output(sp);
    return rep.pass ? kOk : kCheckFailed;
}

int run_localization(const CommandConfig& c, RunManifest& man) {
    LocalizationConfig lc;
    lc.spec = c.spec;
    lc.n_seeds = std::min(c.n_seeds, 4);
    lc.h = c.h;
    lc.window = c.window;
    lc.source_offset = c.source_offset;
    lc.master_seed = c.spec.master_seed;
    lc.jobs = c.jobs;
    LocalizationReport rep = check_ordered_localization(lc);
    ordered_json j;
    j["delta_window"] = rep.delta_window;
    j["delta_outer"] = rep.delta_outer;
    j["n_schedule"] = rep.n_schedule;
    j["c2_emp"] = rep.c2_emp;
    j["pass"] = rep.pass;
    fs::path sp = fs::path(c.out_dir) / "localization_summary.json";
    write_json(sp, j);
    man.add_output(sp);
    return rep.pass ? kOk : kCheckFailed;
}

void apply_env_overrides(CommandConfig& c) {
    // Only the output directory and the job count may come from the
    // environment.
    if (const char* v = std::getenv("FMCF_OUT")) c.out_dir = v;
    if (const char* v = std::getenv("FMCF_JOBS")) c.jobs = std::atoi(v);
}

} // namespace

ordered_json CommandConfig::to_json() const {
    ordered_json j;
    j["subcommand"] = subcommand;
    j["c_min"] = spec.c_min;
    j["c_max"] = spec.c_max;
    j["lipschitz_bound"] = spec.lipschitz_bound;
    j["bump_radius"] = spec.bump_radius;
    j["bump_intensity"] = spec.bump_intensity;
    j["amp_lo"] = spec.amp_lo;
    j["amp_hi"] = spec.amp_hi;
    j["seed"] = spec.master_seed;
    j["h"] = h;
    j["window"] = window;
    j["r0"] = r0;
    j["source_offset"] = source_offset;
    j["times"] = times;
    j["seeds"] = n_seeds;
    j["direction"] = direction;
    j["t_end"] = t_end;
    j["sample_extent"] = sample_extent;
    j["sample_spacing"] = sample_spacing;
    j["disable_forcing"] = disable_forcing;
    j["n_directions"] = n_directions;
    j["near_pair_gap"] = near_pair_gap;
    j["use_disc_source"] = use_disc_source;
    j["disc_radius"] = disc_radius;
    return j;
}

CommandConfig CommandConfig::from_json(const ordered_json& j) {
    CommandConfig c;
    c.subcommand = j.at("subcommand").get<std::string>();
    c.spec.c_min = j.at("c_min").get<double>();
    c.spec.c_max = j.at("c_max").get<double>();
    c.spec.lipschitz_bound = j.at("lipschitz_bound").get<double>();
    c.spec.bump_radius = j.at("bump_radius").get<double>();
    c.spec.bump_intensity = j.at("bump_intensity").get<double>();
    c.spec.amp_lo = j.at("amp_lo").get<double>();
    c.spec.amp_hi = j.at("amp_hi").get<double>();
    c.spec.master_seed = j.at("seed").get<std::uint64_t>();
    c.h = j.at("h").get<double>();
    c.window = j.at("window").get<double>();
    c.r0 = j.at("r0").get<double>();
    c.source_offset = j.at("source_offset").get<double>();
    c.times = j.at("times").get<std::vector<double>>();
    c.n_seeds = j.at("seeds").get<int>();
    c.direction = j.at("direction").get<std::vector<double>>();
    c.t_end = j.at("t_end").get<double>();
    c.sample_extent = j.at("sample_extent").get<double>();
    c.sample_spacing = j.at("sample_spacing").get<double>();
    c.disable_forcing = j.at("disable_forcing").get<bool>();
    c.n_directions = j.at("n_directions").get<int>();
    c.near_pair_gap = j.at("near_pair_gap").get<double>();
    c.use_disc_source = j.at("use_disc_source").get<bool>();
    c.disc_radius = j.at("disc_radius").get<double>();
    return c;
}

namespace {

/// CLI definition shared by run_main and the test-facing parse_args.
struct Parser {
    CommandConfig cfg;
    std::string config_file;
    std::string replay_path;
    std::string replay_out = "out";
    CLI::App app{"fmcf: forced mean curvature flow in 2-D random media"};
    CLI::App* rep = nullptr;

    Parser() {
        app.require_subcommand(1);
        for (const char* name : kSubcommands) {
            CLI::App* sub = app.add_subcommand(name, "");
            add_common_options(sub, cfg, config_file);
            if (std::string(name) == "field") {
                sub->add_option("--sample-extent", cfg.sample_extent,
                                "raster window extent")
                    ->capture_default_str();
                sub->add_option("--sample-spacing", cfg.sample_spacing, "raster spacing")
                    ->capture_default_str();
            }
            if (std::string(name) == "evolve") {
                sub->add_option("--t-end", cfg.t_end, "evolution horizon")
                    ->capture_default_str();
                sub->add_flag("--disable-forcing", cfg.disable_forcing,
                              "oracle-test mode: drop the c|Du| term (test harness only)");
                sub->add_flag("--disc-source", cfg.use_disc_source,
                              "start from a disc instead of a half-space");
                sub->add_option("--disc-radius", cfg.disc_radius, "disc source radius")
                    ->capture_default_str();
            }
            if (std::string(name) == "directions") {
                sub->add_option("--n-directions", cfg.n_directions,
                                "directions spanning a quarter circle")
                    ->capture_default_str();
                sub->add_option("--near-pair-gap", cfg.near_pair_gap,
                                "|e1 - e2| of the close pair")
                    ->capture_default_str();
            }
        }
        rep = app.add_subcommand("replay", "re-run a manifest's resolved config");
        rep->add_option("manifest", replay_path, "manifest.json to replay")->required();
        rep->add_option("-o,--out", replay_out, "output directory")->capture_default_str();
    }

    CommandConfig finish() {
        CLI::App* picked = app.get_subcommands().at(0);
        if (picked == rep) {
            ordered_json man = ordered_json::parse(read_text(replay_path));
            CommandConfig replayed = CommandConfig::from_json(man.at("config"));
            replayed.out_dir = replay_out;
            replayed.spec.validate();
            return replayed;
        }
        cfg.subcommand = picked->get_name();
        std::set<std::string> file_keys;
        if (!config_file.empty()) file_keys = apply_config_file(config_file, picked, cfg);
        bool times_given = picked->count("--times") > 0 || file_keys.count("times") > 0;
        bool seeds_given = picked->count("--seeds") > 0 || file_keys.count("seeds") > 0;
        if (cfg.subcommand == "fluctuations") {
            if (!times_given) cfg.times = {10.0, 20.0, 40.0, 80.0};
            if (!seeds_given) cfg.n_seeds = 64;
        } else if (cfg.subcommand == "flatness") {
            if (!times_given) cfg.times = {20.0, 40.0, 80.0};
            if (!seeds_given) cfg.n_seeds = 16;
        } else if (cfg.subcommand == "directions") {
            if (!times_given) cfg.times = {10.0, 20.0};
        }
        cfg.spec.validate();
        return cfg;
    }
};

} // namespace

CommandConfig parse_args(const std::vector<std::string>& argv) {
    Parser p;
    std::vector<const char*> cargv;
    for (const auto& a : argv) cargv.push_back(a.c_str());
    try {
        p.app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::Error& e) {
        throw std::invalid_argument(std::string("usage: ") + e.what());
    }
    return p.finish();
}

int run(const CommandConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    RunManifest man(cfg.subcommand, cfg.spec.master_seed);
    man.set_config(cfg.to_json());
    for (int k = 0; k < cfg.n_seeds; ++k)
        man.add_task_seed("seed_" + std::to_string(k), task_seed(cfg, k));

    int code = kUsage;
    if (cfg.subcommand == "field") code = run_field(cfg, man);
    else if (cfg.subcommand == "evolve") code = run_evolve(cfg, man);
    else if (cfg.subcommand == "arrival") code = run_arrival(cfg, man);
    else if (cfg.subcommand == "verify") code = run_verify(cfg, man);
    else if (cfg.subcommand == "speed") code = run_speed(cfg, man);
    else if (cfg.subcommand == "fluctuations") code = run_fluctuations(cfg, man);
    else if (cfg.subcommand == "directions") code = run_directions(cfg, man);
    else if (cfg.subcommand == "flatness") code = run_flatness(cfg, man);
    else if (cfg.subcommand == "localization") code = run_localization(cfg, man);
    else throw std::invalid_argument("unknown subcommand " + cfg.subcommand);

    man.finish();
    man.write(fs::path(cfg.out_dir) / "manifest.json");
    return code;
}

int run_main(int argc, const char* const* argv) {
    Parser p;
    CommandConfig cfg;
    try {
        p.app.parse(argc, argv);
        cfg = p.finish();
        apply_env_overrides(cfg);
    } catch (const CLI::CallForHelp& e) {
        return p.app.exit(e) == 0 ? kOk : kUsage;
    } catch (const CLI::Error& e) {
        p.app.exit(e);
        return kUsage;
    } catch (const FieldError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        return run(cfg);
    } catch (const FieldError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolverFailure;
    }
}

} // namespace fmcf::cli
