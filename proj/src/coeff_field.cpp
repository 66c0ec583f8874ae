#include "fmcf/coeff_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fmcf/grid_set.hpp"
#include "fmcf/rng.hpp"

namespace fmcf {

namespace {

/// C^1 radial profile on [0, 1]: psi(0) = 1, psi(1) = 0, psi'(0) = psi'(1) = 0.
inline double bump_profile(double s2) {
    // argument is s^2 to avoid a sqrt; (1 - s^2)^2
    double w = 1.0 - s2;
    return w * w;
}

} // namespace

double FieldSpec::single_bump_slope(double a) const {
    return a * kBumpSlopePeak / bump_radius;
}

void FieldSpec::validate() const {
    if (!(c_min > 0.0) || !(c_min <= c_max) || !std::isfinite(c_max))
        throw FieldError("field spec requires 0 < c_min <= c_max < inf");
    if (!(lipschitz_bound > 0.0) || !std::isfinite(lipschitz_bound))
        throw FieldError("field spec requires finite positive lipschitz_bound");
    if (!(bump_radius > 0.0))
        throw FieldError("field spec requires bump_radius > 0");
    if (bump_radius > 0.5)
        throw FieldError("bump_radius > 1/2 would break the unit range of dependence");
    if (bump_intensity < 0.0)
        throw FieldError("bump_intensity must be nonnegative");
    if (!(0.0 <= amp_lo && amp_lo <= amp_hi))
        throw FieldError("field spec requires 0 <= amp_lo <= amp_hi");
    if (amp_hi > c_max - c_min + 1e-12)
        throw FieldError("amp_hi exceeds c_max - c_min; bumps would overshoot c_max");
    if (single_bump_slope(amp_hi) > lipschitz_bound * (1.0 + 1e-12))
        throw FieldError("amp_hi / bump_radius too steep: certified slope "
                         "exceeds lipschitz_bound");
    if (transverse_period) {
        double p = *transverse_period;
        if (!(p >= 2.0) || std::abs(p - std::round(p)) > 1e-9)
            throw FieldError("transverse_period must be an integer >= 2 (unit cells)");
    }
}

std::string FieldSpec::to_config_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "c_min = " << c_min << "\n";
    os << "c_max = " << c_max << "\n";
    os << "lipschitz_bound = " << lipschitz_bound << "\n";
    os << "bump_radius = " << bump_radius << "\n";
    os << "bump_intensity = " << bump_intensity << "\n";
    os << "amp_lo = " << amp_lo << "\n";
    os << "amp_hi = " << amp_hi << "\n";
    if (transverse_period) os << "transverse_period = " << *transverse_period << "\n";
    os << "seed = " << master_seed << "\n";
    return os.str();
}

FieldSpec FieldSpec::from_config_text(const std::string& text) {
    FieldSpec spec;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || key[0] == '#') continue;
        if (key == "c_min") spec.c_min = std::stod(val);
        else if (key == "c_max") spec.c_max = std::stod(val);
        else if (key == "lipschitz_bound") spec.lipschitz_bound = std::stod(val);
        else if (key == "bump_radius") spec.bump_radius = std::stod(val);
        else if (key == "bump_intensity") spec.bump_intensity = std::stod(val);
        else if (key == "amp_lo") spec.amp_lo = std::stod(val);
        else if (key == "amp_hi") spec.amp_hi = std::stod(val);
        else if (key == "transverse_period") spec.transverse_period = std::stod(val);
        else if (key == "seed") spec.master_seed = std::stoull(val);
        else throw FieldError("unknown field spec key: " + key);
    }
    return spec;
}

CoefficientField CoefficientField::sample(const FieldSpec& spec, std::uint64_t seed) {
    spec.validate();
    CoefficientField f;
    f.kind_ = Kind::RandomBumps;
    f.spec_ = spec;
    f.seed_ = seed;
    f.certified_lipschitz_ =
        spec.bump_intensity == 0.0 ? 0.0 : spec.single_bump_slope(spec.amp_hi);
    return f;
}

CoefficientField CoefficientField::constant(double value) {
    if (!(value > 0.0)) throw FieldError("constant field requires a positive value");
    CoefficientField f;
    f.kind_ = Kind::Constant;
    f.constant_value_ = value;
    f.spec_.c_min = value;
    f.spec_.c_max = value;
    f.spec_.amp_lo = f.spec_.amp_hi = 0.0;
    f.spec_.bump_intensity = 0.0;
    f.certified_lipschitz_ = 0.0;
    return f;
}

CoefficientField CoefficientField::laminar(Vec2 axis, double period, double mid,
                                           double amp) {
    if (!(period > 0.0)) throw FieldError("laminar field requires period > 0");
    if (!(mid - std::abs(amp) > 0.0))
        throw FieldError("laminar field must stay positive");
    CoefficientField f;
    f.kind_ = Kind::Laminar;
    f.laminar_axis_ = axis.normalized();
    f.laminar_period_ = period;
    f.laminar_mid_ = mid;
    f.laminar_amp_ = amp;
    f.spec_.c_min = mid - std::abs(amp);
    f.spec_.c_max = mid + std::abs(amp);
    f.certified_lipschitz_ = std::abs(amp) * 2.0 * M_PI / period;
    f.spec_.lipschitz_bound = std::max(f.certified_lipschitz_, 1e-12);
    return f;
}

CoefficientField CoefficientField::bumps_at(const FieldSpec& spec,
                                            const std::vector<Vec2>& centers,
                                            const std::vector<double>& amplitudes) {
    if (centers.size() != amplitudes.size())
        throw FieldError("bumps_at: centers/amplitudes size mismatch");
    CoefficientField f;
    f.kind_ = Kind::ExplicitBumps;
    f.spec_ = spec;
    f.bump_centers_ = centers;
    f.bump_amps_ = amplitudes;
    double a_max = 0.0;
    for (double a : amplitudes) a_max = std::max(a_max, a);
    f.certified_lipschitz_ = spec.single_bump_slope(a_max);
    return f;
}

CoefficientField CoefficientField::splice(const CoefficientField& inner,
                                          const CoefficientField& outer,
                                          const GridSet& region,
                                          double blend_width) {
    // Both fields are assumed to live in a shared speed envelope; the blend
    // must be wide enough that crossing it cannot exceed the Lipschitz budget.
    double lo = std::min(inner.c_min(), outer.c_min());
    double hi = std::max(inner.c_max(), outer.c_max());
    double span = hi - lo;
    double l0 = std::max(inner.spec().lipschitz_bound, outer.spec().lipschitz_bound);
    double threshold = span > 0.0 ? span / l0 : 0.0;
    if (blend_width < threshold * (1.0 - 1e-12))
        throw FieldError("splice: blend_width below the Lipschitz-compatibility "
                         "threshold (c_max - c_min) / L0");
    if (blend_width <= 0.0) blend_width = 1e-9;

    CoefficientField f;
    f.kind_ = Kind::Spliced;
    f.spec_ = inner.spec_;
    f.spec_.c_min = lo;
    f.spec_.c_max = hi;
    auto d = std::make_shared<SpliceData>();
    d->inner = std::make_shared<CoefficientField>(inner);
    d->outer = std::make_shared<CoefficientField>(outer);
    const Grid2D& g = region.grid();
    d->origin = g.node_pos(0, 0);
    d->spacing = g.spacing;
    d->nx = g.nx;
    d->ny = g.ny;
    d->blend_width = blend_width;
    d->mask = region.mask();
    d->cap = blend_width + g.spacing;

    // Boundary nodes of the region (4-neighbor sense, grid edge counts).
    std::vector<Vec2> boundary;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!d->mask[g.idx(i, j)]) continue;
            bool edge = i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 ||
                        !d->mask[g.idx(i - 1, j)] || !d->mask[g.idx(i + 1, j)] ||
                        !d->mask[g.idx(i, j - 1)] || !d->mask[g.idx(i, j + 1)];
            if (edge) boundary.push_back(g.node_pos(i, j));
        }

    d->bucket_size = d->cap;
    d->bucket_origin = d->origin;
    d->bnx = std::max(1, static_cast<int>(std::ceil(g.nx * g.spacing / d->bucket_size)) + 1);
    d->bny = std::max(1, static_cast<int>(std::ceil(g.ny * g.spacing / d->bucket_size)) + 1);
    std::vector<std::vector<Vec2>> cells(static_cast<std::size_t>(d->bnx) * d->bny);
    for (Vec2 p : boundary) {
        int bi = std::clamp(static_cast<int>((p.x - d->bucket_origin.x) / d->bucket_size),
                            0, d->bnx - 1);
        int bj = std::clamp(static_cast<int>((p.y - d->bucket_origin.y) / d->bucket_size),
                            0, d->bny - 1);
        cells[static_cast<std::size_t>(bj) * d->bnx + bi].push_back(p);
    }
    d->bucket_start.assign(cells.size() + 1, 0);
    for (std::size_t k = 0; k < cells.size(); ++k)
        d->bucket_start[k + 1] = d->bucket_start[k] + static_cast<int>(cells[k].size());
    d->cloud.reserve(boundary.size());
    for (const auto& cell : cells)
        for (Vec2 p : cell) d->cloud.push_back(p);

    f.splice_ = std::move(d);
    // The blend term contributes at most span/blend_width on top of the
    // steeper of the two fields.
    f.certified_lipschitz_ =
        std::max(inner.certified_lipschitz(), outer.certified_lipschitz()) +
        (span > 0.0 ? span / blend_width : 0.0);
    return f;
}

double CoefficientField::SpliceData::dist_eff(Vec2 x) const {
    // Inside the region (nearest node is a region node) the distance is 0.
    int ni = std::clamp(static_cast<int>(std::lround((x.x - origin.x) / spacing)), 0,
                        nx - 1);
    int nj = std::clamp(static_cast<int>(std::lround((x.y - origin.y) / spacing)), 0,
                        ny - 1);
    if (mask[static_cast<std::size_t>(nj) * nx + ni] &&
        std::abs(x.x - (origin.x + ni * spacing)) <= 0.5 * spacing + 1e-12 &&
        std::abs(x.y - (origin.y + nj * spacing)) <= 0.5 * spacing + 1e-12)
        return 0.0;

    // Exact distance to the boundary-node cloud, capped at `cap`; shifting by
    // half a cell diagonal makes it vanish continuously at the inside test.
    int bi = static_cast<int>(std::floor((x.x - bucket_origin.x) / bucket_size));
    int bj = static_cast<int>(std::floor((x.y - bucket_origin.y) / bucket_size));
    double best2 = cap * cap;
    for (int dj = -1; dj <= 1; ++dj) {
        int jj = bj + dj;
        if (jj < 0 || jj >= bny) continue;
        for (int di = -1; di <= 1; ++di) {
            int ii = bi + di;
            if (ii < 0 || ii >= bnx) continue;
            std::size_t cell = static_cast<std::size_t>(jj) * bnx + ii;
            for (int k = bucket_start[cell]; k < bucket_start[cell + 1]; ++k) {
                double dx = x.x - cloud[k].x;
                double dy = x.y - cloud[k].y;
                double d2 = dx * dx + dy * dy;
                if (d2 < best2) best2 = d2;
            }
        }
    }
    double dist = std::sqrt(best2) - spacing / std::sqrt(2.0);
    return std::max(dist, 0.0);
}

double CoefficientField::evaluate(Vec2 x) const {
    switch (kind_) {
    case Kind::Constant:
        return constant_value_;
    case Kind::Laminar: {
        double s = x.dot(laminar_axis_);
        return laminar_mid_ + laminar_amp_ * std::sin(2.0 * M_PI * s / laminar_period_);
    }
    case Kind::RandomBumps:
        return eval_bumps(x);
    case Kind::ExplicitBumps:
        return eval_explicit(x);
    case Kind::Spliced: {
        double d = splice_->dist_eff(x);
        if (d <= 0.0) return splice_->inner->evaluate(x);
        if (d >= splice_->blend_width) return splice_->outer->evaluate(x);
        double w = 1.0 - d / splice_->blend_width;
        return w * splice_->inner->evaluate(x) + (1.0 - w) * splice_->outer->evaluate(x);
    }
    }
    return constant_value_;
}

double CoefficientField::eval_bumps(Vec2 x) const {
    const double r = spec_.bump_radius;
    const double r2 = r * r;
    const bool periodic = spec_.transverse_period.has_value();
    const std::int64_t period =
        periodic ? static_cast<std::int64_t>(std::llround(*spec_.transverse_period)) : 0;
    if (periodic) {
        // Fold into the fundamental strip; fmod is exact, so evaluations one
        // period apart see bit-identical coordinates whenever y +/- P is
        // exactly representable.
        x.y = std::fmod(x.y, static_cast<double>(period));
        if (x.y < 0.0) x.y += static_cast<double>(period);
    }

    // All bumps covering x live in cells intersecting the disc B(x, r);
    // bump_radius <= 1/2 keeps this a <= 2x2 cell window.
    std::int64_t ix_lo = static_cast<std::int64_t>(std::floor(x.x - r));
    std::int64_t ix_hi = static_cast<std::int64_t>(std::floor(x.x + r));
    std::int64_t iy_lo = static_cast<std::int64_t>(std::floor(x.y - r));
    std::int64_t iy_hi = static_cast<std::int64_t>(std::floor(x.y + r));

    double best = 0.0; // excess over the c_min floor
    for (std::int64_t cy = iy_lo; cy <= iy_hi; ++cy) {
        std::int64_t cy_hash = cy;
        if (periodic) {
            cy_hash = cy % period;
            if (cy_hash < 0) cy_hash += period;
        }
        for (std::int64_t cx = ix_lo; cx <= ix_hi; ++cx) {
            SplitMix64 rng = stream_for(seed_, static_cast<std::uint64_t>(cx),
                                        static_cast<std::uint64_t>(cy_hash));
            int n = rng.next_poisson(spec_.bump_intensity);
            for (int k = 0; k < n; ++k) {
                double px = static_cast<double>(cx) + rng.next_double();
                double py = static_cast<double>(cy) + rng.next_double();
                double amp = spec_.amp_lo + (spec_.amp_hi - spec_.amp_lo) * rng.next_double();
                double dx = x.x - px;
                double dy = x.y - py;
                double d2 = dx * dx + dy * dy;
                if (d2 < r2) {
                    double v = amp * bump_profile(d2 / r2);
                    if (v > best) best = v;
                }
            }
        }
    }
    return std::min(spec_.c_min + best, spec_.c_max);
}

double CoefficientField::eval_explicit(Vec2 x) const {
    const double r = spec_.bump_radius;
    const double r2 = r * r;
    double best = 0.0;
    for (std::size_t k = 0; k < bump_centers_.size(); ++k) {
        double dx = x.x - bump_centers_[k].x;
        double dy = x.y - bump_centers_[k].y;
        double d2 = dx * dx + dy * dy;
        if (d2 < r2) best = std::max(best, bump_amps_[k] * bump_profile(d2 / r2));
    }
    return std::min(spec_.c_min + best, spec_.c_max);
}

double ls_condition_margin(const CoefficientField& field, const Rect& region,
                           double probe_spacing) {
    if (!(probe_spacing > 0.0))
        throw FieldError("ls_condition_margin: probe_spacing must be positive");
    const double hg = 0.5 * probe_spacing; // central-difference half step
    double margin = std::numeric_limits<double>::infinity();
    int nx = std::max(1, static_cast<int>(std::floor(region.width() / probe_spacing)) + 1);
    int ny = std::max(1, static_cast<int>(std::floor(region.height() / probe_spacing)) + 1);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Vec2 p{region.lo.x + i * probe_spacing, region.lo.y + j * probe_spacing};
            double c = field.evaluate(p);
            double gx = (field.evaluate({p.x + hg, p.y}) - field.evaluate({p.x - hg, p.y})) /
                        (2.0 * hg);
            double gy = (field.evaluate({p.x, p.y + hg}) - field.evaluate({p.x, p.y - hg})) /
                        (2.0 * hg);
            margin = std::min(margin, c * c - std::hypot(gx, gy));
        }
    }
    return margin;
}

} // namespace fmcf
