#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fmcf/grid.hpp"

namespace fmcf {

/// Exact squared Euclidean distance transform (Meijster two-pass),
/// in node units. For every node, the squared distance to the nearest
/// node with mask != 0. Nodes of an empty mask get a large sentinel.
std::vector<std::int64_t> distance_transform_sq(const std::vector<std::uint8_t>& mask,
                                                int nx, int ny);

/// Boolean node mask over a grid, representing a closed set.
class GridSet {
public:
    GridSet() = default;
    GridSet(const Grid2D& grid, std::vector<std::uint8_t> mask);
    explicit GridSet(const Grid2D& grid); // empty set

    const Grid2D& grid() const { return grid_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::vector<std::uint8_t>& mask() { return mask_; }

    bool at(int i, int j) const { return mask_[grid_.idx(i, j)] != 0; }
    void set(int i, int j, bool v) { mask_[grid_.idx(i, j)] = v ? 1 : 0; }

    std::size_t count() const;
    bool empty() const { return count() == 0; }

    /// Exact squared EDT of this set, node units.
    std::vector<std::int64_t> edt_sq() const;
    /// Distance (length units) from each node to the set.
    std::vector<double> distance_field() const;

    /// Morphological dilation by Euclidean radius (length units).
    GridSet dilate(double radius) const;
    /// Morphological erosion by Euclidean radius (length units).
    GridSet erode(double radius) const;
    GridSet complement() const;

    /// Set union / intersection / difference (same grid required).
    GridSet set_union(const GridSet& o) const;
    GridSet set_minus(const GridSet& o) const;

    bool contains(const GridSet& o) const; // o subseteq this, nodewise

private:
    Grid2D grid_;
    std::vector<std::uint8_t> mask_;
};

/// Hausdorff distance between nonempty masks (length units), computed from
/// exact node-to-node distance transforms. Throws on empty input.
double hausdorff(const GridSet& a, const GridSet& b);

/// Morphological regularization: erosion by 1 of the dilation by (R0 + 1).
/// The result contains S and has discrete interior/exterior tangent-ball
/// regularity at radii (R0, 1) up to grid resolution.
GridSet regularize_set(const GridSet& s, double interior_radius);

} // namespace fmcf
