#include "v2xdose/uniform_grid.hpp"

#include <algorithm>

namespace v2xdose {

UniformGrid::UniformGrid(std::span<const Aabb> items, int cells_per_axis) {
    if (items.empty()) return;
    for (const auto& b : items) bounds_.expand(b);

    const Vec3 extent = bounds_.hi - bounds_.lo;
    const double pad = 1e-6 + 1e-9 * std::max({extent.x, extent.y, extent.z});
    bounds_.lo -= Vec3{pad, pad, pad};
    bounds_.hi += Vec3{pad, pad, pad};
    for (int a = 0; a < 3; ++a) {
        dims_[a] = cells_per_axis;
        cell_size_[a] = (bounds_.hi[a] - bounds_.lo[a]) / cells_per_axis;
    }

    auto clamp_index = [&](double v, int a) {
        const int i = static_cast<int>(std::floor((v - bounds_.lo[a]) / cell_size_[a]));
        return std::clamp(i, 0, dims_[a] - 1);
    };

    const std::size_t n_cells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    std::vector<std::uint32_t> counts(n_cells + 1, 0);
    auto for_each_cell = [&](const Aabb& b, auto&& fn) {
        const int x0 = clamp_index(b.lo.x, 0), x1 = clamp_index(b.hi.x, 0);
        const int y0 = clamp_index(b.lo.y, 1), y1 = clamp_index(b.hi.y, 1);
        const int z0 = clamp_index(b.lo.z, 2), z1 = clamp_index(b.hi.z, 2);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    fn((static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x);
    };

    for (const auto& b : items) for_each_cell(b, [&](std::size_t c) { ++counts[c + 1]; });
    cell_start_.assign(n_cells + 1, 0);
    for (std::size_t c = 0; c < n_cells; ++c) cell_start_[c + 1] = cell_start_[c] + counts[c + 1];
    items_.resize(cell_start_.back());
    std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::uint32_t i = 0; i < items.size(); ++i) {
        for_each_cell(items[i], [&](std::size_t c) { items_[fill[c]++] = i; });
    }
}

}  // namespace v2xdose
