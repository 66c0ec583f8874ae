#include "fmcf/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace fmcf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void push_dt(std::vector<std::pair<double, int>>& hist, double dt, int n = 1) {
    if (!hist.empty() && hist.back().first == dt)
        hist.back().second += n;
    else
        hist.emplace_back(dt, n);
}

struct KernelParams {
    int nx = 0, ny = 0, stride = 0;
    double h = 0.0, dt = 0.0, eps2 = 0.0;
};

/// One Jacobi update of the ghost-padded field into out (nx * ny).
void advance_padded(const double* pad, const double* cvals, const KernelParams& kp,
                    double* out) {
    const double inv2h = 0.5 / kp.h;
    const double invh = 1.0 / kp.h;
    const double invh2 = invh * invh;
    const double inv4h2 = 0.25 * invh2;
    for (int j = 0; j < kp.ny; ++j) {
        const double* row = pad + static_cast<std::size_t>(j + 1) * kp.stride + 1;
        const double* rm = row - kp.stride;
        const double* rp = row + kp.stride;
        const double* crow = cvals + static_cast<std::size_t>(j) * kp.nx;
        double* orow = out + static_cast<std::size_t>(j) * kp.nx;
        for (int i = 0; i < kp.nx; ++i) {
            const double C = row[i], L = row[i - 1], R = row[i + 1];
            const double B = rm[i], T = rp[i];
            const double ux = (R - L) * inv2h;
            const double uy = (T - B) * inv2h;
            const double uxx = (R - 2.0 * C + L) * invh2;
            const double uyy = (T - 2.0 * C + B) * invh2;
            const double uxy = (rp[i + 1] - rp[i - 1] - rm[i + 1] + rm[i - 1]) * inv4h2;
            // Regularized projector: the eps^2 terms let interior extrema
            // (where the symmetric gradient cancels exactly) evolve by the
            // eigenvalue mean instead of freezing; the bias at regular
            // points is O(eps^2 |D^2 u|).
            const double den = ux * ux + uy * uy + 2.0 * kp.eps2;
            const double curv = (uxx * (uy * uy + kp.eps2) - 2.0 * uxy * ux * uy +
                                 uyy * (ux * ux + kp.eps2)) /
                                den;
            const double am = std::min((C - L) * invh, 0.0);
            const double bp = std::max((R - C) * invh, 0.0);
            const double cm = std::min((C - B) * invh, 0.0);
            const double dp = std::max((T - C) * invh, 0.0);
            const double gp = std::sqrt(am * am + bp * bp + cm * cm + dp * dp);
            orow[i] = C + kp.dt * (curv + crow[i] * gp);
        }
    }
}

/// Fill side ghosts of the real rows, then the ghost rows (with corners).
void fill_ghosts_padded(double* pad, int nx, int ny, int stride, bool periodic,
                        NormalBoundary nb) {
    for (int j = 0; j < ny; ++j) {
        double* row = pad + static_cast<std::size_t>(j + 1) * stride + 1;
        if (nb == NormalBoundary::Extrapolation) {
            row[-1] = 2.0 * row[0] - row[1];
            row[nx] = 2.0 * row[nx - 1] - row[nx - 2];
        } else {
            row[-1] = row[0];
            row[nx] = row[nx - 1];
        }
    }
    double* bottom = pad;                                              // ghost row -1
    double* top = pad + static_cast<std::size_t>(ny + 1) * stride;     // ghost row ny
    const double* first = pad + stride;
    const double* second = pad + 2 * static_cast<std::size_t>(stride);
    const double* last = pad + static_cast<std::size_t>(ny) * stride;
    const double* penult = pad + static_cast<std::size_t>(ny - 1) * stride;
    if (periodic) {
        std::memcpy(bottom, last, sizeof(double) * stride);
        std::memcpy(top, first, sizeof(double) * stride);
    } else {
        for (int k = 0; k < stride; ++k) {
            bottom[k] = 2.0 * first[k] - second[k];
            top[k] = 2.0 * last[k] - penult[k];
        }
    }
}

} // namespace

InitialSet InitialSet::half_space(double offset, double r0) {
    InitialSet s;
    s.shape = Shape::HalfSpace;
    s.half_space_offset = offset;
    s.interior_ball_radius = r0;
    return s;
}

InitialSet InitialSet::disc(Vec2 center, double radius) {
    InitialSet s;
    s.shape = Shape::Disc;
    s.disc_center = center;
    s.disc_radius = radius;
    s.interior_ball_radius = radius;
    return s;
}

InitialSet InitialSet::from_mask(GridSet m, double r0) {
    InitialSet s;
    s.shape = Shape::Mask;
    s.mask = std::make_shared<GridSet>(std::move(m));
    s.interior_ball_radius = r0;
    return s;
}

void InitialSet::validate(double c_min) const {
    double need = std::max(2.0 / c_min, 2.0);
    if (interior_ball_radius < need - 1e-12) {
        std::ostringstream os;
        os << "initial set needs interior ball radius R0 >= max(2/c_min, 2) = " << need
           << ", got " << interior_ball_radius;
        throw std::invalid_argument(os.str());
    }
}

// Initial data is the signed distance (positive inside S). A profile that is
// flat zero on the interior of S freezes under the upwind scheme: the last
// cell outside would approach 0 like exp(-c t / h) and never cross, so no
// arrival could be recorded at fixed h. The zero level set is the same, and
// the level-set equation is geometric, so the front is unchanged.
LevelSetState init_state(const Grid2D& grid, const InitialSet& s) {
    grid.validate();
    LevelSetState st;
    st.grid = grid;
    st.u.resize(grid.size());
    switch (s.shape) {
    case InitialSet::Shape::HalfSpace: {
        if (s.half_space_offset < grid.origin_s - 2.0)
            throw std::invalid_argument("half-space source lies off the grid window");
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                st.u[grid.idx(i, j)] = s.half_space_offset - grid.s_coord(i);
        break;
    }
    case InitialSet::Shape::Disc: {
        Rect window{{grid.s_coord(0), grid.t_coord(0)},
                    {grid.s_coord(grid.nx - 1), grid.t_coord(grid.ny - 1)}};
        double cx = std::clamp(s.disc_center.x, window.lo.x, window.hi.x);
        double cy = std::clamp(s.disc_center.y, window.lo.y, window.hi.y);
        double gap = std::hypot(cx - s.disc_center.x, cy - s.disc_center.y) - s.disc_radius;
        if (gap > 2.0)
            throw std::invalid_argument("disc source lies off the grid window");
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                double d = std::hypot(grid.s_coord(i) - s.disc_center.x,
                                      grid.t_coord(j) - s.disc_center.y);
                st.u[grid.idx(i, j)] = s.disc_radius - d;
            }
        break;
    }
    case InitialSet::Shape::Mask: {
        if (!s.mask || s.mask->empty())
            throw std::invalid_argument("empty mask source");
        auto d_in = s.mask->edt_sq();
        auto d_out = s.mask->complement().edt_sq();
        const double h = grid.spacing;
        const auto& mk = s.mask->mask();
        for (std::size_t k = 0; k < mk.size(); ++k) {
            if (mk[k])
                st.u[k] = h * (std::sqrt(static_cast<double>(d_out[k])) - 0.5);
            else
                st.u[k] = -h * (std::sqrt(static_cast<double>(d_in[k])) - 0.5);
        }
        break;
    }
    }
    return st;
}

LevelSetState make_signed_disc_state(const Grid2D& grid, Vec2 center, double radius) {
    grid.validate();
    LevelSetState st;
    st.grid = grid;
    st.u.resize(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            st.u[grid.idx(i, j)] =
                radius - std::hypot(grid.s_coord(i) - center.x, grid.t_coord(j) - center.y);
    return st;
}

double sample_u(const LevelSetState& s, int i, int j) {
    const Grid2D& g = s.grid;
    if (j < 0 || j >= g.ny) {
        if (g.transverse_periodic) {
            int jj = ((j % g.ny) + g.ny) % g.ny;
            return sample_u(s, i, jj);
        }
        if (j < 0) return 2.0 * sample_u(s, i, 0) - sample_u(s, i, 1);
        return 2.0 * sample_u(s, i, g.ny - 1) - sample_u(s, i, g.ny - 2);
    }
    if (i < 0) {
        if (g.normal_boundary == NormalBoundary::Clamped) return sample_u(s, 0, j);
        return 2.0 * sample_u(s, 0, j) - sample_u(s, 1, j);
    }
    if (i >= g.nx) {
        if (g.normal_boundary == NormalBoundary::Clamped) return sample_u(s, g.nx - 1, j);
        return 2.0 * sample_u(s, g.nx - 1, j) - sample_u(s, g.nx - 2, j);
    }
    return s.u[g.idx(i, j)];
}

double curvature_term(const LevelSetState& s, int i, int j) {
    const double h = s.grid.spacing;
    const double eps2 = 1e-12 * h * h;
    const double C = sample_u(s, i, j);
    const double L = sample_u(s, i - 1, j), R = sample_u(s, i + 1, j);
    const double B = sample_u(s, i, j - 1), T = sample_u(s, i, j + 1);
    const double TL = sample_u(s, i - 1, j + 1), TR = sample_u(s, i + 1, j + 1);
    const double BL = sample_u(s, i - 1, j - 1), BR = sample_u(s, i + 1, j - 1);
    const double ux = (R - L) / (2.0 * h);
    const double uy = (T - B) / (2.0 * h);
    const double uxx = (R - 2.0 * C + L) / (h * h);
    const double uyy = (T - 2.0 * C + B) / (h * h);
    const double uxy = (TR - TL - BR + BL) / (4.0 * h * h);
    const double den = ux * ux + uy * uy + 2.0 * eps2;
    return (uxx * (uy * uy + eps2) - 2.0 * uxy * ux * uy + uyy * (ux * ux + eps2)) / den;
}

double upwind_gradient_norm(const LevelSetState& s, int i, int j) {
    const double h = s.grid.spacing;
    const double C = sample_u(s, i, j);
    const double a = std::min((C - sample_u(s, i - 1, j)) / h, 0.0);
    const double b = std::max((sample_u(s, i + 1, j) - C) / h, 0.0);
    const double c = std::min((C - sample_u(s, i, j - 1)) / h, 0.0);
    const double d = std::max((sample_u(s, i, j + 1) - C) / h, 0.0);
    return std::sqrt(a * a + b * b + c * c + d * d);
}

double forcing_term(const LevelSetState& s, const CoefficientField& field, int i, int j) {
    return field.evaluate(s.grid.node_pos(i, j)) * upwind_gradient_norm(s, i, j);
}

double cfl_dt(double spacing, double c_max, bool forcing_enabled) {
    double parabolic = spacing * spacing / 8.0;
    if (!forcing_enabled) return parabolic;
    return std::min(parabolic, spacing / (4.0 * c_max));
}

bool step(LevelSetState& s, const CoefficientField& field, bool forcing_enabled,
          StepDiagnostics* diag) {
    const Grid2D& g = s.grid;
    const int nx = g.nx, ny = g.ny;
    const int stride = nx + 2;
    std::vector<double> pad(static_cast<std::size_t>(stride) * (ny + 2));
    for (int j = 0; j < ny; ++j)
        std::memcpy(&pad[static_cast<std::size_t>(j + 1) * stride + 1], &s.u[g.idx(0, j)],
                    sizeof(double) * nx);
    fill_ghosts_padded(pad.data(), nx, ny, stride, g.transverse_periodic,
                       g.normal_boundary);

    std::vector<double> c(g.size(), 0.0);
    if (forcing_enabled)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) c[g.idx(i, j)] = field.evaluate(g.node_pos(i, j));

    KernelParams kp;
    kp.nx = nx;
    kp.ny = ny;
    kp.stride = stride;
    kp.h = g.spacing;
    kp.dt = cfl_dt(g.spacing, field.c_max(), forcing_enabled);
    kp.eps2 = 1e-12 * g.spacing * g.spacing;
    std::vector<double> out(g.size());
    advance_padded(pad.data(), c.data(), kp, out.data());

    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double v = out[g.idx(i, j)];
            if (!std::isfinite(v)) {
                if (diag) {
                    diag->finite = false;
                    diag->bad_i = i;
                    diag->bad_j = j;
                    diag->message = "non-finite value after step (CFL violation?)";
                }
                return false;
            }
        }
    s.u = std::move(out);
    s.t += kp.dt;
    push_dt(s.cfl_history, kp.dt);
    return true;
}

// ---------------------------------------------------------------------------
// LevelSetSolver

LevelSetSolver::LevelSetSolver(const Grid2D& grid, const CoefficientField& field,
                               const InitialSet& source, SolverOptions opt)
    : grid_(grid), field_(&field), opt_(opt) {
    grid_.validate();
    source.validate(field.c_min());
    if (grid_.transverse_periodic) {
        if (std::abs(grid_.front_direction.x - 1.0) > 1e-12 ||
            std::abs(grid_.front_direction.y) > 1e-12)
            throw std::invalid_argument(
                "transverse-periodic grids require the front direction (1, 0)");
        if (field.kind() == CoefficientField::Kind::RandomBumps) {
            if (!field.spec().transverse_period ||
                std::abs(*field.spec().transverse_period - grid_.transverse_extent()) > 1e-9)
                throw std::invalid_argument(
                    "periodic window must match the field transverse_period");
        }
    }
    if (opt_.band_mode && source.shape != InitialSet::Shape::HalfSpace)
        throw std::invalid_argument("band mode supports half-space sources only");

    dt_ = cfl_dt(grid_.spacing, field.c_max(), opt_.forcing_enabled);
    cap_ = opt_.cap_values ? opt_.cap_cells * grid_.spacing
                           : std::numeric_limits<double>::infinity();

    const int ny = grid_.ny;
    int band_cols =
        static_cast<int>(std::ceil((opt_.band_trail + opt_.band_lead) / grid_.spacing));
    band_nx_ = opt_.band_mode ? std::min(grid_.nx, std::max(band_cols, 16)) : grid_.nx;
    band_lo_ = 0;
    stride_ = band_nx_ + 2;
    pad_.assign(static_cast<std::size_t>(stride_) * (ny + 2), 0.0);
    next_.resize(static_cast<std::size_t>(band_nx_) * ny);
    c_.assign(static_cast<std::size_t>(band_nx_) * ny, 0.0);

    // Initial data over the full window; the band keeps its slice.
    LevelSetState full = init_state(grid_, source);
    arrival_.assign(grid_.size(), kInf);
    source_.assign(grid_.size(), 0);
    front_col_.assign(ny, -1);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < grid_.nx; ++i) {
            double v = full.u[grid_.idx(i, j)];
            if (v >= 0.0) {
                arrival_[grid_.idx(i, j)] = 0.0;
                source_[grid_.idx(i, j)] = 1;
                front_col_[j] = std::max(front_col_[j], i);
                ++source_count_;
            }
        }
    for (int j = 0; j < ny; ++j) {
        double* row = &pad_[static_cast<std::size_t>(j + 1) * stride_ + 1];
        for (int i = 0; i < band_nx_; ++i)
            row[i] = std::min(full.u[grid_.idx(band_lo_ + i, j)], cap_);
    }
    refill_c(band_lo_, band_lo_ + band_nx_);
}

void LevelSetSolver::refill_c(int gcol_begin, int gcol_end) {
    if (!opt_.forcing_enabled) return;
    for (int j = 0; j < grid_.ny; ++j)
        for (int g = gcol_begin; g < gcol_end; ++g)
            c_[static_cast<std::size_t>(j) * band_nx_ + (g - band_lo_)] =
                field_->evaluate(grid_.node_pos(g, j));
}

void LevelSetSolver::fill_ghosts() {
    fill_ghosts_padded(pad_.data(), band_nx_, grid_.ny, stride_,
                       grid_.transverse_periodic, grid_.normal_boundary);
}

void LevelSetSolver::advance_one_step() {
    fill_ghosts();
    KernelParams kp;
    kp.nx = band_nx_;
    kp.ny = grid_.ny;
    kp.stride = stride_;
    kp.h = grid_.spacing;
    kp.dt = dt_;
    kp.eps2 = 1e-12 * grid_.spacing * grid_.spacing;
    advance_padded(pad_.data(), c_.data(), kp, next_.data());

    // Copy back (capped), recording first crossings.
    for (int j = 0; j < grid_.ny; ++j) {
        double* row = &pad_[static_cast<std::size_t>(j + 1) * stride_ + 1];
        const double* nrow = &next_[static_cast<std::size_t>(j) * band_nx_];
        for (int i = 0; i < band_nx_; ++i) {
            double old = row[i];
            double nv = nrow[i];
            if (old < 0.0 && nv >= 0.0) {
                std::size_t gid = grid_.idx(band_lo_ + i, j);
                if (arrival_[gid] == kInf) {
                    arrival_[gid] = t_ + dt_ * (-old) / (nv - old);
                    front_col_[j] = std::max(front_col_[j], band_lo_ + i);
                    ++recorded_;
                }
            }
            row[i] = std::min(nv, cap_);
        }
    }
    t_ += dt_;
    ++steps_;
}

bool LevelSetSolver::check_finite() {
    for (int j = 0; j < grid_.ny; ++j) {
        const double* row = &pad_[static_cast<std::size_t>(j + 1) * stride_ + 1];
        for (int i = 0; i < band_nx_; ++i)
            if (!std::isfinite(row[i])) {
                std::ostringstream os;
                os << "non-finite u at node (" << band_lo_ + i << ", " << j
                   << ") after step " << steps_ << " (CFL violation indicator)";
                abort_message_ = os.str();
                return false;
            }
    }
    return true;
}

void LevelSetSolver::maybe_shift_band() {
    if (!opt_.band_mode || band_nx_ >= grid_.nx) return;
    const double h = grid_.spacing;
    int lead_col_limit = band_lo_ + band_nx_ - 1;
    int front_lead = *std::max_element(front_col_.begin(), front_col_.end());
    int front_trail = *std::min_element(front_col_.begin(), front_col_.end());
    double lead_space = (lead_col_limit - front_lead) * h;
    if (lead_space >= 0.5 * opt_.band_lead) return;

    int trail_cols = static_cast<int>(std::floor(opt_.band_trail / h));
    int new_lo = std::clamp(front_trail - trail_cols, band_lo_, grid_.nx - band_nx_);
    int shift = new_lo - band_lo_;
    if (shift <= 0) return;

    for (int j = 0; j < grid_.ny; ++j) {
        double* row = &pad_[static_cast<std::size_t>(j + 1) * stride_ + 1];
        std::memmove(row, row + shift, sizeof(double) * (band_nx_ - shift));
        for (int i = band_nx_ - shift; i < band_nx_; ++i)
            row[i] = 2.0 * row[i - 1] - row[i - 2];
        double* crow = &c_[static_cast<std::size_t>(j) * band_nx_];
        std::memmove(crow, crow + shift, sizeof(double) * (band_nx_ - shift));
    }
    band_lo_ = new_lo;
    refill_c(band_lo_ + band_nx_ - shift, band_lo_ + band_nx_);
}

EvolveStatus LevelSetSolver::evolve_until(const StopCondition& stop) {
    const long total = static_cast<long>(grid_.size());
    auto satisfied = [&]() {
        if (stop.time_at_least && t_ >= *stop.time_at_least - 1e-15) return true;
        if (!stop.probes_crossed.empty()) {
            bool all = true;
            for (auto [pi, pj] : stop.probes_crossed)
                if (arrival_[grid_.idx(pi, pj)] == kInf) {
                    all = false;
                    break;
                }
            if (all) return true;
        }
        if (stop.all_nodes_crossed && source_count_ + recorded_ >= total) return true;
        return false;
    };

    if (!stop.time_at_least && stop.probes_crossed.empty() && !stop.all_nodes_crossed)
        throw std::invalid_argument("evolve_until: empty stop condition");

    while (!satisfied()) {
        if (t_ >= stop.t_max - 1e-15) return EvolveStatus::Timeout;
        advance_one_step();
        if (opt_.check_finite_every > 0 && steps_ % opt_.check_finite_every == 0)
            if (!check_finite()) return EvolveStatus::Aborted;
        maybe_shift_band();
    }
    return EvolveStatus::Done;
}

LevelSetState LevelSetSolver::snapshot() const {
    LevelSetState st;
    st.grid = grid_;
    st.t = t_;
    st.u.assign(grid_.size(), 0.0);
    if (steps_ > 0) push_dt(st.cfl_history, dt_, static_cast<int>(steps_));
    for (int j = 0; j < grid_.ny; ++j) {
        const double* row = &pad_[static_cast<std::size_t>(j + 1) * stride_ + 1];
        double left_edge = row[0];
        for (int g = 0; g < grid_.nx; ++g) {
            double v;
            if (g < band_lo_) {
                v = left_edge + (band_lo_ - g) * grid_.spacing; // frozen, large positive
            } else if (g >= band_lo_ + band_nx_) {
                v = row[band_nx_ - 1] -
                    (g - (band_lo_ + band_nx_ - 1)) * grid_.spacing; // untouched ahead
            } else {
                v = row[g - band_lo_];
            }
            st.u[grid_.idx(g, j)] = v;
        }
    }
    return st;
}

// ---------------------------------------------------------------------------

GridSet ArrivalTimeField::sublevel(double t) const {
    GridSet out(grid);
    auto& mk = out.mask();
    for (std::size_t k = 0; k < m.size(); ++k) mk[k] = (m[k] <= t) ? 1 : 0;
    return out;
}

GridSet ArrivalTimeField::source_set() const {
    return GridSet(grid, source);
}

double ArrivalTimeField::max_finite() const {
    double mx = 0.0;
    for (double v : m)
        if (std::isfinite(v)) mx = std::max(mx, v);
    return mx;
}

bool ArrivalTimeField::all_finite() const {
    for (double v : m)
        if (!std::isfinite(v)) return false;
    return true;
}

ArrivalResult compute_arrival(const CoefficientField& field, const InitialSet& s,
                              const Grid2D& grid, double t_max, SolverOptions opt) {
    ArrivalResult res;
    LevelSetSolver solver(grid, field, s, opt);
    StopCondition stop;
    stop.all_nodes_crossed = true;
    stop.t_max = t_max;
    res.status = solver.evolve_until(stop);
    res.message = solver.abort_message();
    res.field.grid = grid;
    res.field.m = solver.arrival();
    res.field.source = solver.source_mask();
    res.field.horizon = solver.time();
    res.field.field_seed = field.seed();
    res.field.source_r0 = s.interior_ball_radius;
    return res;
}

} // namespace fmcf
