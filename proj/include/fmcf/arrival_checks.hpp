#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fmcf/io.hpp"
#include "fmcf/level_set.hpp"

namespace fmcf {

/// Outcome of one regularity check: pass iff max_violation <= tolerance.
/// max_violation is the maximum over all sampled pairs, so a negative value
/// reports the margin by which the estimate held.
struct RegularityReport {
    std::string check;
    std::map<std::string, double> constants;
    double max_violation = -std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    std::array<double, 2> location{0.0, 0.0}; ///< grid (s, t) of the worst pair
    bool pass = false;
    std::string note;

    void finalize() {
        if (!std::isfinite(max_violation) && max_violation < 0.0) {
            max_violation = 0.0;
            note = note.empty() ? "no sample pairs" : note;
        }
        pass = max_violation <= tolerance;
    }
    ordered_json to_json() const;
};

/// |m(x) - m(y)| <= (2/c_min) e^{Lc * min(m)} (|x-y| + 2h) over sampled
/// adjacent node pairs; Lc is the field's certified Lipschitz constant.
RegularityReport check_small_scale_lipschitz(const ArrivalTimeField& m, double c_min,
                                             double field_lipschitz,
                                             std::uint64_t sample_seed);

/// |m(x) - m(y)| <= tau + L |x-y| over sampled pairs at distance >= 1.
/// Also reports the minimal tau (at fixed L) and minimal L (at fixed tau)
/// satisfied by the data, for constant-stability comparisons.
RegularityReport check_large_scale_lipschitz(const ArrivalTimeField& m, double tau,
                                             double L, std::uint64_t sample_seed);

/// Every ball B_R0(x0) around a reached point is covered within the waiting
/// time tau = 13 R0 / (2 c_min), up to an h-collar.
RegularityReport check_filling_time(const ArrivalTimeField& m, double r0, double c_min,
                                    std::uint64_t sample_seed);

/// S_s dilated by ((t-s) - tau)+ / L is contained in S_t, up to an h-collar,
/// over sampled (s, t) pairs.
RegularityReport check_monotone_growth(const ArrivalTimeField& m, double tau, double L,
                                       std::uint64_t sample_seed);

/// Fits the smallest C2 with d_H(S_t, S_s) <= C2 sqrt|t-s| + 2 c_max |t-s| + h
/// over sampled pairs. Stability under refinement is judged by the caller.
RegularityReport check_time_regularity(const ArrivalTimeField& m, double c_max,
                                       std::uint64_t sample_seed);

/// sup |m(x,S) - m(x,S')| <= (2/c_min) d_H(S, S') + 4h/c_min.
RegularityReport check_data_continuity(const ArrivalTimeField& ma,
                                       const ArrivalTimeField& mb, double c_min);

/// Arrivals up to t agree between a field and its splice when the media agree
/// on {m_a <= t} plus the blend collar: max |m_a - m_b| <= 2 dt on the
/// sublevel set eroded by (blend_width + 3h).
RegularityReport check_sublevel_localization(const ArrivalTimeField& ma,
                                             const ArrivalTimeField& mb, double t,
                                             double collar, double dt);

/// |m(x,S) - (t + m(x, regularize(S_t)))| <= 4 tau on {m > t}.
RegularityReport check_semigroup(const ArrivalTimeField& m_full,
                                 const ArrivalTimeField& m_restart, double t,
                                 double tau);

/// Node in {m <= t}  <=>  u(node, t) >= 0, up to one time step.
RegularityReport check_arrival_consistency(const ArrivalTimeField& m,
                                           const LevelSetState& snapshot, double dt);

/// Configuration of the full nine-check verification run.
struct VerifyConfig {
    FieldSpec spec;
    int n_seeds = 8;
    double h = 0.1;
    double window = 40.0; ///< normal extent; also the periodic transverse extent
    double source_offset = 2.0;
    double r0 = 2.0;
    double semigroup_t = 10.0;
    double localization_t = 10.0;
    std::uint64_t master_seed = 1;
    int jobs = 0; ///< worker threads; 0 = hardware concurrency
    bool refine_check = true;
    int refine_seeds = 2;
    double refine_window = 16.0;
};

/// Runs the nine-check suite over n_seeds random media and aggregates one
/// report per check (worst violation across seeds).
std::vector<RegularityReport> verify_suite(const VerifyConfig& cfg);

/// tau and L of the large-scale Lipschitz estimate for this configuration:
/// tau = 13 R0 / (2 c_min), L = tau / R0.
inline double waiting_time_tau(double r0, double c_min) { return 13.0 * r0 / (2.0 * c_min); }
inline double large_scale_slope(double r0, double c_min) {
    return waiting_time_tau(r0, c_min) / r0;
}

} // namespace fmcf
