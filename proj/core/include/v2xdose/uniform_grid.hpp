#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "v2xdose/geometry.hpp"

namespace v2xdose {

// Uniform spatial subdivision over a set of bounding boxes. Each axis is cut
// into `cells_per_axis` cells of size extent/cells_per_axis; items are
// binned conservatively by bounding box.
class UniformGrid {
  public:
    UniformGrid() = default;
    UniformGrid(std::span<const Aabb> items, int cells_per_axis = 32);

    const Aabb& bounds() const { return bounds_; }
    bool empty() const { return items_.empty(); }

    // Walks the cells pierced by origin + t*dir for t in [t_min, t_max] in
    // front-to-back order. `visit(items, t_enter, t_exit)` returns false to stop.
    template <class Visitor>
    void traverse(const Vec3& origin, const Vec3& dir, double t_min, double t_max, Visitor&& visit) const;

  private:
    std::span<const std::uint32_t> cell(int ix, int iy, int iz) const {
        const std::size_t c = (static_cast<std::size_t>(iz) * dims_[1] + iy) * dims_[0] + ix;
        return {items_.data() + cell_start_[c], cell_start_[c + 1] - cell_start_[c]};
    }

    Aabb bounds_;
    int dims_[3] = {0, 0, 0};
    double cell_size_[3] = {1.0, 1.0, 1.0};
    std::vector<std::uint32_t> cell_start_;
    std::vector<std::uint32_t> items_;
};

template <class Visitor>
void UniformGrid::traverse(const Vec3& origin, const Vec3& dir, double t_min, double t_max, Visitor&& visit) const {
    if (items_.empty()) return;
    // Clip the ray against the grid bounds (slab method).
    double t0 = t_min;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        const double o = origin[a];
        const double d = dir[a];
        const double lo = bounds_.lo[a];
        const double hi = bounds_.hi[a];
        if (d == 0.0) {
            if (o < lo || o > hi) return;
            continue;
        }
        double ta = (lo - o) / d;
        double tb = (hi - o) / d;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
        if (t0 > t1) return;
    }

    int idx[3];
    int step[3];
    double t_next[3];
    double t_delta[3];
    const Vec3 entry = origin + dir * t0;
    for (int a = 0; a < 3; ++a) {
        const double rel = (entry[a] - bounds_.lo[a]) / cell_size_[a];
        int i = static_cast<int>(std::floor(rel));
        i = i < 0 ? 0 : (i >= dims_[a] ? dims_[a] - 1 : i);
        idx[a] = i;
        const double d = dir[a];
        if (d > 0.0) {
            step[a] = 1;
            t_next[a] = (bounds_.lo[a] + (i + 1) * cell_size_[a] - origin[a]) / d;
            t_delta[a] = cell_size_[a] / d;
        } else if (d < 0.0) {
            step[a] = -1;
            t_next[a] = (bounds_.lo[a] + i * cell_size_[a] - origin[a]) / d;
            t_delta[a] = -cell_size_[a] / d;
        } else {
            step[a] = 0;
            t_next[a] = 1e300;
            t_delta[a] = 1e300;
        }
    }

    double t_enter = t0;
    for (;;) {
        int axis = 0;
        if (t_next[1] < t_next[axis]) axis = 1;
        if (t_next[2] < t_next[axis]) axis = 2;
        const double t_exit = t_next[axis] < t1 ? t_next[axis] : t1;
        const auto items = cell(idx[0], idx[1], idx[2]);
        if (!items.empty() && !visit(items, t_enter, t_exit)) return;
        if (t_next[axis] > t1) return;
        idx[axis] += step[axis];
        if (idx[axis] < 0 || idx[axis] >= dims_[axis]) return;
        t_enter = t_next[axis];
        t_next[axis] += t_delta[axis];
    }
}

}  // namespace v2xdose
