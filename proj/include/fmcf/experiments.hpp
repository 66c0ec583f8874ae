#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fmcf/coeff_field.hpp"
#include "fmcf/io.hpp"
#include "fmcf/level_set.hpp"
#include "fmcf/stats.hpp"

namespace fmcf {

/// Monte Carlo plan shared by the front experiments.
struct ExperimentPlan {
    FieldSpec spec;
    std::vector<Vec2> directions{{1.0, 0.0}};
    std::vector<double> times{10.0, 20.0};
    int n_seeds = 8;
    double h = 0.1;
    double window = 40.0; ///< transverse extent
    double source_offset = 2.0;
    std::string output_dir;
    int jobs = 0;
    double t_max_factor = 1.6; ///< horizon = factor * max_t / c_min + 20

    void validate() const;
};

/// Raw per-seed front samples for one direction: arrival times m(t e) and,
/// optionally, the transverse front width W(t).
struct FrontSampleSet {
    Vec2 direction{1.0, 0.0};
    std::vector<double> times;
    std::vector<std::uint64_t> seeds;
    std::vector<char> ok;
    std::vector<std::vector<double>> m; ///< [seed][time]
    std::vector<std::vector<double>> w; ///< [seed][time], empty if not collected

    int n_ok() const;
};

struct CollectOptions {
    bool measure_flatness = false;
    bool periodic_transverse = true; ///< forced off for non-axis directions
    /// Medium per seed; defaults to sampling plan.spec. Oracle runs inject
    /// constant or laminar comparison fields here.
    std::function<CoefficientField(std::uint64_t)> field_factory;
};

/// Run one arrival computation per seed (moving-band half-space run) and
/// extract the probe arrivals. Fails a seed on solver abort/timeout; the
/// experiment continues if >= 80% of seeds succeed.
FrontSampleSet collect_front_samples(const ExperimentPlan& plan, Vec2 e,
                                     CollectOptions opt = {});

/// Effective-speed estimate for one direction.
struct SpeedEstimate {
    Vec2 direction{1.0, 0.0};
    std::vector<double> times;
    std::vector<double> mu;    ///< sample mean of m(t e)
    std::vector<double> sigma; ///< sample std
    double c_bar = 0.0;        ///< t* / mu(t*) at the largest t*
    std::array<double, 2> c_bar_ci{0.0, 0.0};
    int n_seeds = 0;
    int n_failed = 0;
    bool mu_increasing = false;
    bool speed_in_bounds = false; ///< within [c_min, c_max] +- 5% c_max
};

SpeedEstimate run_speed_experiment(const ExperimentPlan& plan, Vec2 e);
SpeedEstimate speed_estimate_from(const ExperimentPlan& plan, const FrontSampleSet& s);

/// Fluctuation scaling sigma(t) ~ A t^beta plus the sub-Gaussian tail check.
struct FluctuationStats {
    std::vector<double> times;
    std::vector<double> sigma;
    PowerLawFit fit;            ///< over the largest decade of t
    double envelope_c = 0.0;    ///< calibrated at lambda = 1
    std::array<double, 3> tail_fraction{0.0, 0.0, 0.0}; ///< lambda = 1, 2, 3
    std::array<double, 3> tail_envelope{0.0, 0.0, 0.0}; ///< C exp(-l^2 / C)
    bool tails_pass = false;
};

FluctuationStats run_fluctuation_experiment(const ExperimentPlan& plan, Vec2 e);
FluctuationStats fluctuation_stats_from(const ExperimentPlan& plan,
                                        const FrontSampleSet& s);

/// Approximate linearity of t -> E m(t e): Delta(t, t) = |2 mu(t) - mu(2t)|,
/// normalized by t^(2/3); the trend check compares the largest and smallest
/// available t with a paired-bootstrap error allowance.
struct LinearityReport {
    std::vector<double> t_values;
    std::vector<double> delta;
    std::vector<double> normalized;
    double trend_gap = 0.0; ///< normalized(max t) - 2 * normalized(min t)
    double stat_error = 0.0;
    bool pass = false;
};

LinearityReport check_approximate_linearity(const ExperimentPlan& plan, Vec2 e);
LinearityReport linearity_from(const ExperimentPlan& plan, const FrontSampleSet& s);

/// Effective speed across directions with shared seeds, and the logarithmic
/// continuity envelope.
struct DirectionProfile {
    std::vector<Vec2> directions;
    std::vector<double> c_bar;
    std::vector<double> mc_std; ///< bootstrap std error per direction
    double spread = 0.0;
    double fitted_log_c = 0.0;  ///< from well-separated pairs
    double near_distance = 0.0; ///< smallest |e1 - e2| in the plan
    double near_increment = 0.0;
    double near_bound = 0.0; ///< fitted_log_c / |log near_distance|
    bool pass_near = false;
    bool pass_spread = false;
};

DirectionProfile run_direction_profile(const ExperimentPlan& plan);

/// Front flatness W(t)/t for an initially flat front in a periodic window.
struct FlatnessReport {
    std::vector<double> times;
    std::vector<double> median_w;
    std::vector<double> ratio; ///< median W(t) / t
    bool decreasing = false;
    double final_ratio = 0.0;
    bool pass = false; ///< decreasing and final ratio <= threshold
    double threshold = 0.1;
};

FlatnessReport run_flatness_check(const ExperimentPlan& plan, Vec2 e);
FlatnessReport flatness_from(const ExperimentPlan& plan, const FrontSampleSet& s,
                             double threshold = 0.1);

/// Ordered-localization probe: a second source with extra material outside
/// B_R gains a head start there; the gained time inside the shrunk window is
/// fitted and must be a small fraction of the head start near the blob.
struct LocalizationConfig {
    FieldSpec spec;
    int n_seeds = 3;
    double h = 0.1;
    double window = 40.0;
    double source_offset = 2.0;
    double r_window = 12.0;  ///< ordering window radius R
    double shrink = 4.0;     ///< comparison on B_{R - shrink}
    Vec2 blob_center{6.0, 36.0};
    double blob_radius = 3.0;
    std::uint64_t master_seed = 1;
    int jobs = 0;
    bool constant_medium = false;
    double constant_value = 1.0;
};

struct LocalizationReport {
    double delta_window = 0.0; ///< max (m1 - m2)+ on the shrunk window
    double delta_outer = 0.0;  ///< max (m1 - m2)+ near the blob
    double n_schedule = 0.0;   ///< n = ceil(s^(2/3)) at the crossing time
    double c2_emp = 0.0;       ///< delta_window / n
    bool pass = false;
};

LocalizationReport check_ordered_localization(const LocalizationConfig& cfg);

} // namespace fmcf
