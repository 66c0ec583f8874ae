#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmcf/geometry.hpp"

namespace fmcf {

class GridSet;

/// Raised on invalid field specifications or construction parameters.
class FieldError : public std::runtime_error {
public:
    explicit FieldError(const std::string& what) : std::runtime_error(what) {}
};

/// Parameters of the random speed medium c : R^2 -> [c_min, c_max].
///
/// The medium is a stationary cloud of radial bumps on a constant floor.
/// Bump supports have radius <= 1/2 so that evaluations over regions at
/// Euclidean distance >= 1 read disjoint parts of the point cloud.
struct FieldSpec {
    double c_min = 1.0;
    double c_max = 2.0;
    double lipschitz_bound = 5.0;   ///< L0, certified bound on |Dc|
    double bump_radius = 0.4;       ///< support radius r, must be <= 1/2
    double bump_intensity = 1.0;    ///< Poisson points per unit area
    double amp_lo = 0.5;            ///< bump amplitude range (speed units)
    double amp_hi = 1.0;
    std::optional<double> transverse_period; ///< wrap cells mod P in y
    std::uint64_t master_seed = 0;

    /// Throws FieldError if any invariant fails.
    void validate() const;

    /// Serialize to the flat `key = value` text format.
    std::string to_config_text() const;
    static FieldSpec from_config_text(const std::string& text);

    /// Max slope of a single bump of amplitude `a`: a * kappa / r, where
    /// kappa = 8/(3*sqrt(3)) is the peak of |d/ds (1-s^2)^2|.
    double single_bump_slope(double a) const;
};

/// Peak of the radial bump profile derivative, max_s |d/ds (1-s^2)^2|.
inline constexpr double kBumpSlopePeak = 1.5396007178390020; // 8/(3*sqrt(3))

/// A speed field with certified bounds, Lipschitz constant and range of
/// dependence. Evaluation is a pure function of (spec, seed, x): repeated
/// calls return bit-identical values in any order.
class CoefficientField {
public:
    enum class Kind { RandomBumps, Constant, Laminar, ExplicitBumps, Spliced };

    /// Random bump cloud: per unit cell, a Poisson(intensity) number of
    /// points placed uniformly, each carrying a C^1 radial bump of support
    /// `bump_radius` and amplitude uniform in [amp_lo, amp_hi]. Bumps are
    /// combined with the floor by pointwise max.
    static CoefficientField sample(const FieldSpec& spec, std::uint64_t seed);

    /// Deterministic comparison field c == value.
    static CoefficientField constant(double value);

    /// Laminar field c(x) = mid + amp * sin(2*pi * (x . axis) / period),
    /// varying only along `axis`.
    static CoefficientField laminar(Vec2 axis, double period, double mid, double amp);

    /// Explicit bump list on the c_min floor (test/oracle construction).
    static CoefficientField bumps_at(const FieldSpec& spec,
                                     const std::vector<Vec2>& centers,
                                     const std::vector<double>& amplitudes);

    /// Spliced field: equals `inner` on `region`, equals `outer` at distance
    /// >= blend_width from it, and interpolates linearly in between.
    /// Rejects blend_width < (c_max - c_min) / L0.
    static CoefficientField splice(const CoefficientField& inner,
                                   const CoefficientField& outer,
                                   const GridSet& region,
                                   double blend_width);

    double evaluate(Vec2 x) const;

    Kind kind() const { return kind_; }
    const FieldSpec& spec() const { return spec_; }
    double c_min() const { return spec_.c_min; }
    double c_max() const { return spec_.c_max; }
    /// Certified bound on |Dc| for this construction (<= spec L0).
    double certified_lipschitz() const { return certified_lipschitz_; }
    std::uint64_t seed() const { return seed_; }

private:
    CoefficientField() = default;

    struct SpliceData {
        std::shared_ptr<CoefficientField> inner;
        std::shared_ptr<CoefficientField> outer;
        double blend_width = 0.0;
        // Region geometry: the node mask plus a bucketed cloud of its
        // boundary nodes. The blend distance is the exact Euclidean distance
        // to that cloud (shifted by half a cell diagonal and capped), which
        // is 1-Lipschitz by construction.
        Vec2 origin;
        double spacing = 0.0;
        int nx = 0, ny = 0;
        std::vector<std::uint8_t> mask;
        double cap = 0.0;
        double bucket_size = 0.0;
        int bnx = 0, bny = 0;
        Vec2 bucket_origin;
        std::vector<int> bucket_start; // CSR layout over bucket cells
        std::vector<Vec2> cloud;
        double dist_eff(Vec2 x) const;
    };

    double eval_bumps(Vec2 x) const;
    double eval_explicit(Vec2 x) const;

    Kind kind_ = Kind::Constant;
    FieldSpec spec_;
    std::uint64_t seed_ = 0;
    double constant_value_ = 0.0;
    // laminar
    Vec2 laminar_axis_{1.0, 0.0};
    double laminar_period_ = 1.0;
    double laminar_mid_ = 1.0;
    double laminar_amp_ = 0.0;
    // explicit bumps
    std::vector<Vec2> bump_centers_;
    std::vector<double> bump_amps_;
    std::shared_ptr<SpliceData> splice_;
    double certified_lipschitz_ = 0.0;
};

/// Minimum over a probe grid of c(x)^2 - |Dc(x)| (the d = 2 coercivity
/// margin; gradient by central differences at the probe spacing). A negative
/// value exhibits a field that violates the coercivity condition while
/// keeping c > 0.
double ls_condition_margin(const CoefficientField& field, const Rect& region,
                           double probe_spacing);

} // namespace fmcf
