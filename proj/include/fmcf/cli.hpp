#pragma once

#include <string>
#include <vector>

#include "fmcf/coeff_field.hpp"
#include "fmcf/io.hpp"

namespace fmcf::cli {

/// Fully resolved command configuration (flags override config-file values;
/// the resolved form is echoed into the run manifest and is what `replay`
/// consumes).
struct CommandConfig {
    std::string subcommand;
    FieldSpec spec;
    double h = 0.1;
    double window = 40.0;
    double r0 = 2.0;
    double source_offset = 2.0;
    std::vector<double> times{10.0, 20.0};
    int n_seeds = 8;
    int jobs = 0;
    std::string out_dir = "out";
    std::vector<double> direction{1.0, 0.0};
    double t_end = 5.0;            ///< evolve horizon
    double sample_extent = 10.0;   ///< field raster window
    double sample_spacing = 0.1;
    bool disable_forcing = false;
    int n_directions = 8;
    double near_pair_gap = 1e-2;
    bool use_disc_source = false;
    double disc_radius = 2.0;

    ordered_json to_json() const;
    static CommandConfig from_json(const ordered_json& j);
};

/// Exit codes: 0 pass, 1 failed check or envelope, 2 usage error,
/// 3 solver failure.
enum ExitCode { kOk = 0, kCheckFailed = 1, kUsage = 2, kSolverFailure = 3 };

/// Parse argv (program name included). Throws CLI::Error on usage problems
/// and FieldError/invalid_argument on constraint violations.
CommandConfig parse_args(const std::vector<std::string>& argv);

/// Execute a resolved command; writes outputs and manifest into out_dir.
int run(const CommandConfig& cfg);

/// Full entry point: parse, apply environment overrides, dispatch.
int run_main(int argc, const char* const* argv);

} // namespace fmcf::cli
