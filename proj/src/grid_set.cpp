#include "fmcf/grid_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fmcf {

namespace {
constexpr std::int64_t kFar = std::numeric_limits<std::int32_t>::max();
}

std::vector<std::int64_t> distance_transform_sq(const std::vector<std::uint8_t>& mask,
                                                int nx, int ny) {
    // Meijster, Roerdink, Hesselink (2000). Exact in integer arithmetic.
    const std::int64_t inf = static_cast<std::int64_t>(nx) + ny + 2;
    std::vector<std::int64_t> g(static_cast<std::size_t>(nx) * ny);

    // Phase 1: per-column vertical scan.
    for (int i = 0; i < nx; ++i) {
        g[i] = mask[i] ? 0 : inf;
        for (int j = 1; j < ny; ++j) {
            std::size_t id = static_cast<std::size_t>(j) * nx + i;
            g[id] = mask[id] ? 0 : std::min(inf, g[id - nx] + 1);
        }
        for (int j = ny - 2; j >= 0; --j) {
            std::size_t id = static_cast<std::size_t>(j) * nx + i;
            if (g[id + nx] + 1 < g[id]) g[id] = g[id + nx] + 1;
        }
    }

    std::vector<std::int64_t> out(g.size());
    std::vector<int> s(nx), t(nx);
    auto f = [&](std::int64_t x, std::int64_t i, const std::int64_t* grow) {
        std::int64_t d = x - i;
        return d * d + grow[i] * grow[i];
    };
    auto sep = [&](std::int64_t i, std::int64_t u, const std::int64_t* grow) {
        return (u * u - i * i + grow[u] * grow[u] - grow[i] * grow[i]) / (2 * (u - i));
    };

    // Phase 2: per-row lower envelope of parabolas.
    for (int j = 0; j < ny; ++j) {
        const std::int64_t* grow = &g[static_cast<std::size_t>(j) * nx];
        int q = 0;
        s[0] = 0;
        t[0] = 0;
        for (int u = 1; u < nx; ++u) {
            while (q >= 0 && f(t[q], s[q], grow) > f(t[q], u, grow)) --q;
            if (q < 0) {
                q = 0;
                s[0] = u;
                t[0] = 0;
            } else {
                std::int64_t w = 1 + sep(s[q], u, grow);
                if (w < nx) {
                    ++q;
                    s[q] = u;
                    t[q] = static_cast<int>(w);
                }
            }
        }
        for (int u = nx - 1; u >= 0; --u) {
            std::int64_t d = f(u, s[q], grow);
            out[static_cast<std::size_t>(j) * nx + u] = std::min<std::int64_t>(d, kFar);
            if (u == t[q]) --q;
        }
    }
    return out;
}

GridSet::GridSet(const Grid2D& grid, std::vector<std::uint8_t> mask)
    : grid_(grid), mask_(std::move(mask)) {
    if (mask_.size() != grid_.size())
        throw std::invalid_argument("GridSet mask size does not match grid");
}

GridSet::GridSet(const Grid2D& grid) : grid_(grid), mask_(grid.size(), 0) {}

std::size_t GridSet::count() const {
    std::size_t n = 0;
    for (auto v : mask_) n += (v != 0);
    return n;
}

std::vector<std::int64_t> GridSet::edt_sq() const {
    return distance_transform_sq(mask_, grid_.nx, grid_.ny);
}

std::vector<double> GridSet::distance_field() const {
    auto d2 = edt_sq();
    std::vector<double> d(d2.size());
    for (std::size_t k = 0; k < d2.size(); ++k)
        d[k] = grid_.spacing * std::sqrt(static_cast<double>(d2[k]));
    return d;
}

GridSet GridSet::dilate(double radius) const {
    if (radius < 0.0) throw std::invalid_argument("dilate: negative radius");
    auto d2 = edt_sq();
    double rn = radius / grid_.spacing;
    // small slack so dilation by exactly k*h includes nodes at distance k*h
    double lim = rn * rn * (1.0 + 1e-12) + 1e-9;
    GridSet out(grid_);
    for (std::size_t k = 0; k < mask_.size(); ++k)
        out.mask_[k] = (static_cast<double>(d2[k]) <= lim) ? 1 : 0;
    return out;
}

GridSet GridSet::erode(double radius) const {
    return complement().dilate(radius).complement();
}

GridSet GridSet::complement() const {
    GridSet out(grid_);
    for (std::size_t k = 0; k < mask_.size(); ++k) out.mask_[k] = mask_[k] ? 0 : 1;
    return out;
}

GridSet GridSet::set_union(const GridSet& o) const {
    GridSet out(grid_);
    for (std::size_t k = 0; k < mask_.size(); ++k)
        out.mask_[k] = (mask_[k] || o.mask_[k]) ? 1 : 0;
    return out;
}

GridSet GridSet::set_minus(const GridSet& o) const {
    GridSet out(grid_);
    for (std::size_t k = 0; k < mask_.size(); ++k)
        out.mask_[k] = (mask_[k] && !o.mask_[k]) ? 1 : 0;
    return out;
}

bool GridSet::contains(const GridSet& o) const {
    for (std::size_t k = 0; k < mask_.size(); ++k)
        if (o.mask_[k] && !mask_[k]) return false;
    return true;
}

double hausdorff(const GridSet& a, const GridSet& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("hausdorff: empty set");
    auto da = a.edt_sq();
    auto db = b.edt_sq();
    std::int64_t worst = 0;
    const auto& ma = a.mask();
    const auto& mb = b.mask();
    for (std::size_t k = 0; k < ma.size(); ++k) {
        if (ma[k]) worst = std::max(worst, db[k]);
        if (mb[k]) worst = std::max(worst, da[k]);
    }
    return a.grid().spacing * std::sqrt(static_cast<double>(worst));
}

GridSet regularize_set(const GridSet& s, double interior_radius) {
    if (s.empty()) throw std::invalid_argument("regularize_set: empty set");
    return s.dilate(interior_radius + 1.0).erode(1.0);
}

} // namespace fmcf
