#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fmcf/coeff_field.hpp"
#include "fmcf/grid.hpp"
#include "fmcf/grid_set.hpp"

namespace fmcf {

/// Initial front data: a closed set with interior tangent balls of radius R0
/// and exterior tangent balls of radius 1 (declared, checked where possible).
struct InitialSet {
    enum class Shape { HalfSpace, Disc, Mask };

    Shape shape = Shape::HalfSpace;
    double half_space_offset = 0.0; ///< set {s <= offset} in grid coordinates
    Vec2 disc_center{0.0, 0.0};     ///< grid-frame (s, t)
    double disc_radius = 2.0;
    std::shared_ptr<GridSet> mask;
    double interior_ball_radius = 2.0; ///< R0
    double exterior_ball_radius = 1.0;

    static InitialSet half_space(double offset, double r0 = 2.0);
    static InitialSet disc(Vec2 center, double radius);
    static InitialSet from_mask(GridSet m, double r0 = 2.0);

    /// R0 must satisfy R0 >= max(2 / c_min, 2).
    void validate(double c_min) const;
};

/// Scalar level-set field on a grid plus current time. The front is the
/// zero level set of u; initial data is the signed distance to S (positive
/// inside, -d(x, S) outside).
struct LevelSetState {
    Grid2D grid;
    std::vector<double> u;
    double t = 0.0;
    /// Run-length compressed list of accepted step sizes.
    std::vector<std::pair<double, int>> cfl_history;

    double& at(int i, int j) { return u[grid.idx(i, j)]; }
    double at(int i, int j) const { return u[grid.idx(i, j)]; }
};

/// Signed-distance initial data: exact expressions for half-spaces and
/// discs, a two-pass distance transform for masks (error <= h). The values
/// agree with -d(x, S) outside S. Throws on empty S.
LevelSetState init_state(const Grid2D& grid, const InitialSet& s);

/// Signed-distance profile of a disc (positive inside); used by the
/// curvature-flow oracle runs where the interior value matters.
LevelSetState make_signed_disc_state(const Grid2D& grid, Vec2 center, double radius);

/// Neighbor fetch honoring the grid's boundary rules (periodic wrap in j,
/// linear extrapolation or clamp elsewhere).
double sample_u(const LevelSetState& s, int i, int j);

/// Central-difference curvature term tr[(I - n(x)n)D^2u] with denominator
/// regularized by eps = 1e-6 * h.
double curvature_term(const LevelSetState& s, int i, int j);

/// c(x) * G+(u) with the first-order upwind gradient norm for outward motion
/// (positive forcing); G+ >= 0 always.
double forcing_term(const LevelSetState& s, const CoefficientField& field, int i, int j);

/// Upwind gradient norm alone.
double upwind_gradient_norm(const LevelSetState& s, int i, int j);

/// Explicit-Euler CFL step: min(h^2/8, h/(4*c_max)).
double cfl_dt(double spacing, double c_max, bool forcing_enabled);

enum class EvolveStatus { Done, Timeout, Aborted };

struct StepDiagnostics {
    bool finite = true;
    int bad_i = -1, bad_j = -1;
    std::string message;
};

/// One explicit step of u_t = curvature + c|Du| on a full-grid state.
/// Deterministic and independent of traversal order (Jacobi update).
/// Returns false (with diagnostics) if a non-finite value appeared.
bool step(LevelSetState& s, const CoefficientField& field, bool forcing_enabled = true,
          StepDiagnostics* diag = nullptr);

/// Stop condition for evolve_until: time target, probe crossings, or full
/// coverage; the hard cap t_max always applies.
struct StopCondition {
    std::optional<double> time_at_least;
    std::vector<std::pair<int, int>> probes_crossed; ///< global (i, j) nodes
    bool all_nodes_crossed = false;
    double t_max = 1e9;
};

struct SolverOptions {
    bool forcing_enabled = true;
    /// Swept-region values are capped at cap_cells * h. The upwind dynamics
    /// then form a plateau behind the front on their own (the approach to the
    /// cap is asymptotic), which keeps |Du| bounded for arbitrarily long runs
    /// without relabeling anything near the front; min(u, cap) is monotone,
    /// so the discrete comparison property is preserved exactly.
    bool cap_values = true;
    double cap_cells = 30.0;
    int check_finite_every = 25;
    bool band_mode = false;   ///< moving band along the front direction
    double band_trail = 12.0; ///< length kept behind the leading fronts
    double band_lead = 16.0;  ///< length kept ahead of the leading fronts
};

/// Marching front solver. Owns the evolving u (optionally a moving band over
/// a wide global window), caches c at nodes, records per-node first-crossing
/// times, and applies the reinitialization policy.
class LevelSetSolver {
public:
    LevelSetSolver(const Grid2D& grid, const CoefficientField& field,
                   const InitialSet& source, SolverOptions opt);

    /// Evolve until the stop condition holds (or t_max / abort).
    EvolveStatus evolve_until(const StopCondition& stop);

    double time() const { return t_; }
    double dt() const { return dt_; }
    long steps_taken() const { return steps_; }
    double value_cap() const { return cap_; }
    const std::string& abort_message() const { return abort_message_; }

    /// First-crossing times over the full global grid (+inf sentinel).
    const std::vector<double>& arrival() const { return arrival_; }
    /// Source node mask (m == 0 there).
    const std::vector<std::uint8_t>& source_mask() const { return source_; }

    /// Current state copied into the full global frame. Nodes behind the
    /// band carry a large positive value, nodes ahead the initial profile.
    LevelSetState snapshot() const;

    const Grid2D& grid() const { return grid_; }

private:
    void fill_ghosts();
    void advance_one_step();
    void maybe_shift_band();
    void refill_c(int gcol_begin, int gcol_end);
    bool check_finite();

    Grid2D grid_; // full global window
    const CoefficientField* field_;
    SolverOptions opt_;
    double dt_ = 0.0;
    double t_ = 0.0;
    long steps_ = 0;
    double cap_ = 0.0; // +inf when disabled
    std::string abort_message_;

    int band_nx_ = 0;   // columns in the active band
    int band_lo_ = 0;   // global index of band column 0
    int stride_ = 0;    // band_nx_ + 2
    std::vector<double> pad_;   // (ny + 2) x stride ghost-padded u
    std::vector<double> next_;  // band_nx_ x ny
    std::vector<double> c_;     // band_nx_ x ny cached speeds
    std::vector<double> arrival_;
    std::vector<std::uint8_t> source_;
    std::vector<int> front_col_; // per-row max crossed global column
    long source_count_ = 0;
    long recorded_ = 0;
};

/// First time the front started from S reaches each node, by linear
/// interpolation between the bracketing steps; m = 0 on S; +inf where the
/// front has not arrived by t_max.
struct ArrivalTimeField {
    Grid2D grid;
    std::vector<double> m;
    std::vector<std::uint8_t> source;
    double horizon = 0.0;
    std::uint64_t field_seed = 0;
    double source_r0 = 2.0;

    double at(int i, int j) const { return m[grid.idx(i, j)]; }
    /// Mask of nodes with m <= t.
    GridSet sublevel(double t) const;
    GridSet source_set() const;
    double max_finite() const;
    bool all_finite() const;
};

struct ArrivalResult {
    ArrivalTimeField field;
    EvolveStatus status = EvolveStatus::Done;
    std::string message;
};

/// Run the flow from S and extract the arrival time field. On solver abort
/// or timeout the partial field is returned with the corresponding status.
ArrivalResult compute_arrival(const CoefficientField& field, const InitialSet& s,
                              const Grid2D& grid, double t_max,
                              SolverOptions opt = {});

} // namespace fmcf
