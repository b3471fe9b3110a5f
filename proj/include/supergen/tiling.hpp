#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"

namespace supergen {

enum class ShiftMode { Wrap, Clamp };

struct TileGrid {
    std::size_t canvas_h = 0, canvas_w = 0;
    std::size_t tile_h = 0, tile_w = 0;
    std::size_t grid_y = 0, grid_x = 0;
    std::size_t loop_step = 16;
    std::size_t shift_every = 1;  // 0 disables shifting
    ShiftMode shift_mode = ShiftMode::Wrap;

    std::size_t base_tiles() const noexcept { return grid_y * grid_x; }
    // Upper bound on tiles per step (clamp mode adds a remainder row/column).
    std::size_t max_tiles() const noexcept {
        return shift_mode == ShiftMode::Wrap ? base_tiles() : (grid_y + 1) * (grid_x + 1);
    }
};

inline TileGrid make_grid(std::size_t canvas_h, std::size_t canvas_w, std::size_t tile_h, std::size_t tile_w,
                          std::size_t loop_step = 16, ShiftMode mode = ShiftMode::Wrap, std::size_t shift_every = 1) {
    if (tile_h == 0 || tile_w == 0) throw ConfigError("tile dims must be >= 1");
    if (canvas_h % tile_h != 0 || canvas_w % tile_w != 0)
        throw ConfigError("tile " + std::to_string(tile_h) + "x" + std::to_string(tile_w) +
                          " does not exactly cover canvas " + std::to_string(canvas_h) + "x" +
                          std::to_string(canvas_w));
    if (loop_step < 1) throw ConfigError("loop_step must be >= 1");
    TileGrid g;
    g.canvas_h = canvas_h;
    g.canvas_w = canvas_w;
    g.tile_h = tile_h;
    g.tile_w = tile_w;
    g.grid_y = canvas_h / tile_h;
    g.grid_x = canvas_w / tile_w;
    g.loop_step = loop_step;
    g.shift_every = shift_every;
    g.shift_mode = mode;
    return g;
}

struct TileRef {
    std::size_t index = 0;
    long origin_y = 0;
    long origin_x = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t step = 0;

    bool operator==(const TileRef&) const = default;
};

struct ShiftOffset {
    std::size_t dy = 0;
    std::size_t dx = 0;
    bool operator==(const ShiftOffset&) const = default;
};

inline ShiftOffset shift_offset(std::size_t step, const TileGrid& grid) {
    if (grid.shift_every == 0) return {};
    const std::size_t phase = (step / grid.shift_every) % grid.loop_step;
    const std::size_t sy = grid.tile_h / grid.loop_step;
    const std::size_t sx = grid.tile_w / grid.loop_step;
    return {(phase * sy) % grid.tile_h, (phase * sx) % grid.tile_w};
}

namespace detail {

// Clamp-mode segments along one axis: [start, length) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> clamp_segments(std::size_t extent, std::size_t tile,
                                                                       std::size_t offset) {
    std::vector<std::pair<std::size_t, std::size_t>> segs;
    if (offset > 0) segs.emplace_back(0, offset);
    for (std::size_t start = offset; start < extent; start += tile)
        segs.emplace_back(start, std::min(tile, extent - start));
    return segs;
}

}  // namespace detail

inline std::vector<TileRef> tiles_at_step(const TileGrid& grid, std::size_t step) {
    const auto off = shift_offset(step, grid);
    std::vector<TileRef> refs;
    if (grid.shift_mode == ShiftMode::Wrap) {
        refs.reserve(grid.base_tiles());
        for (std::size_t r = 0; r < grid.grid_y; ++r)
            for (std::size_t c = 0; c < grid.grid_x; ++c) {
                TileRef ref;
                ref.index = refs.size();
                ref.origin_y = static_cast<long>((r * grid.tile_h + off.dy) % grid.canvas_h);
                ref.origin_x = static_cast<long>((c * grid.tile_w + off.dx) % grid.canvas_w);
                ref.height = grid.tile_h;
                ref.width = grid.tile_w;
                ref.step = step;
                refs.push_back(ref);
            }
        return refs;
    }
    const auto rows = detail::clamp_segments(grid.canvas_h, grid.tile_h, off.dy);
    const auto cols = detail::clamp_segments(grid.canvas_w, grid.tile_w, off.dx);
    for (const auto& [y0, h] : rows)
        for (const auto& [x0, w] : cols) {
            TileRef ref;
            ref.index = refs.size();
            ref.origin_y = static_cast<long>(y0);
            ref.origin_x = static_cast<long>(x0);
            ref.height = h;
            ref.width = w;
            ref.step = step;
            refs.push_back(ref);
        }
    return refs;
}

// Number of tiles covering each (y, x) element.
inline std::vector<int> coverage_mask(const TileGrid& grid, const std::vector<TileRef>& refs) {
    std::vector<int> mask(grid.canvas_h * grid.canvas_w, 0);
    for (const auto& r : refs)
        for (std::size_t y = 0; y < r.height; ++y)
            for (std::size_t x = 0; x < r.width; ++x) {
                const std::size_t cy = (static_cast<std::size_t>(r.origin_y) + y) % grid.canvas_h;
                const std::size_t cx = (static_cast<std::size_t>(r.origin_x) + x) % grid.canvas_w;
                ++mask[cy * grid.canvas_w + cx];
            }
    return mask;
}

inline Canvas extract_tile(const Canvas& canvas, const TileRef& ref) {
    return slice(canvas, ref.origin_y, ref.origin_x, ref.height, ref.width, /*wrap=*/true);
}

inline void place_tile(Canvas& canvas, const Canvas& tile, const TileRef& ref) {
    if (tile.shape().height != ref.height || tile.shape().width != ref.width)
        throw DimensionError("tile " + tile.shape().str() + " does not match ref " + std::to_string(ref.height) +
                             "x" + std::to_string(ref.width));
    place(canvas, tile, ref.origin_y, ref.origin_x, /*wrap=*/true);
}

// Assemble per-tile noise into a canvas. Every tile of the step must be
// present exactly once; placement runs in tile-index order.
inline Canvas fuse_noise(const std::vector<std::pair<TileRef, Canvas>>& tile_outputs, const TileGrid& grid) {
    if (tile_outputs.empty()) throw FusionError("no tile outputs to fuse");
    const std::size_t step = tile_outputs.front().first.step;
    const auto expected = tiles_at_step(grid, step);
    std::vector<const std::pair<TileRef, Canvas>*> by_index(expected.size(), nullptr);
    for (const auto& entry : tile_outputs) {
        const auto& ref = entry.first;
        if (ref.step != step) throw FusionError("tile outputs span multiple steps");
        if (ref.index >= expected.size() || !(ref == expected[ref.index]))
            throw FusionError("tile " + std::to_string(ref.index) + " does not belong to step " + std::to_string(step));
        if (by_index[ref.index]) throw FusionError("duplicate output for tile " + std::to_string(ref.index));
        by_index[ref.index] = &entry;
    }
    for (std::size_t i = 0; i < by_index.size(); ++i)
        if (!by_index[i]) throw FusionError("missing output for tile " + std::to_string(i));

    const auto& first = tile_outputs.front().second.shape();
    Canvas fused(Shape{first.frames, first.channels, grid.canvas_h, grid.canvas_w}, tile_outputs.front().second.space());
    for (const auto* entry : by_index) place_tile(fused, entry->second, entry->first);
    return fused;
}

}  // namespace supergen
