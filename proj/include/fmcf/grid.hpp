#pragma once

#include <cstddef>
#include <stdexcept>

#include "fmcf/geometry.hpp"

namespace fmcf {

/// Boundary treatment in the propagation (normal) direction.
enum class NormalBoundary { Extrapolation, Clamped };

/// Uniform 2-D node grid. Index i runs along the front direction e, index j
/// along the transverse direction perp(e). Node (i, j) carries grid-frame
/// coordinates (s, t) = (origin_s + i*h, origin_t + j*h) and sits at field
/// position s*e + t*perp(e); for e = (1,0) grid and field frames coincide.
struct Grid2D {
    double spacing = 0.1;
    int nx = 8;
    int ny = 8;
    double origin_s = 0.0;
    double origin_t = 0.0;
    Vec2 front_direction{1.0, 0.0};
    bool transverse_periodic = false;
    NormalBoundary normal_boundary = NormalBoundary::Extrapolation;

    void validate() const {
        if (spacing <= 0.0) throw std::invalid_argument("grid spacing must be positive");
        if (nx < 8 || ny < 8) throw std::invalid_argument("grid needs nx, ny >= 8");
    }

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    double s_coord(int i) const { return origin_s + i * spacing; }
    double t_coord(int j) const { return origin_t + j * spacing; }

    /// Position of node (i, j) in field coordinates.
    Vec2 node_pos(int i, int j) const {
        Vec2 e = front_direction;
        Vec2 p = e.perp();
        double s = s_coord(i);
        double t = t_coord(j);
        return {s * e.x + t * p.x, s * e.y + t * p.y};
    }

    double transverse_extent() const { return ny * spacing; }
};

} // namespace fmcf
