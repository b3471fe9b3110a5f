#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "supergen/tiling.hpp"

using namespace supergen;

namespace {

std::vector<oracle::Rect> rects(const std::vector<TileRef>& refs) {
    std::vector<oracle::Rect> out;
    for (const auto& r : refs) out.push_back({r.origin_y, r.origin_x, r.height, r.width});
    return out;
}

}  // namespace

TEST(Grid, Construction) {
    const auto g = make_grid(144, 256, 48, 64);
    EXPECT_EQ(g.grid_y, 3u);
    EXPECT_EQ(g.grid_x, 4u);
    EXPECT_EQ(g.base_tiles(), 12u);
    EXPECT_THROW(make_grid(144, 256, 50, 64), ConfigError);
    EXPECT_THROW(make_grid(144, 256, 0, 64), ConfigError);
    EXPECT_THROW(make_grid(144, 256, 48, 64, 0), ConfigError);
}

TEST(Shift, KnownOffsets) {
    EXPECT_EQ(shift_offset(3, make_grid(144, 256, 48, 64)), (ShiftOffset{9, 12}));
    EXPECT_EQ(shift_offset(5, make_grid(90, 160, 90, 160)), (ShiftOffset{25, 50}));
    EXPECT_EQ(shift_offset(0, make_grid(144, 256, 48, 64)), (ShiftOffset{0, 0}));
}

TEST(Shift, PeriodicInLoopStep) {
    const auto g = make_grid(144, 256, 48, 64, 8);
    for (std::size_t s = 0; s < 40; ++s) {
        EXPECT_EQ(shift_offset(s, g), shift_offset(s + 8, g));
        EXPECT_LT(shift_offset(s, g).dy, g.tile_h);
        EXPECT_LT(shift_offset(s, g).dx, g.tile_w);
    }
}

TEST(Shift, CadenceAndDisable) {
    auto g = make_grid(144, 256, 48, 64, 16, ShiftMode::Wrap, 2);
    EXPECT_EQ(shift_offset(2, g), shift_offset(3, g));
    EXPECT_EQ(shift_offset(2, g), (ShiftOffset{3, 4}));
    g.shift_every = 0;
    for (std::size_t s = 0; s < 20; ++s) EXPECT_EQ(shift_offset(s, g), (ShiftOffset{}));
}

TEST(Tiles, WrapModeCoversExactlyOnce) {
    const auto g = make_grid(144, 192, 48, 64);
    for (std::size_t step = 0; step < 20; ++step) {
        const auto refs = tiles_at_step(g, step);
        ASSERT_EQ(refs.size(), 9u);
        const auto mask = oracle::coverage(rects(refs), 144, 192, true);
        for (int m : mask) ASSERT_EQ(m, 1) << "step " << step;
        EXPECT_EQ(coverage_mask(g, refs), mask);
        for (std::size_t i = 0; i < refs.size(); ++i) EXPECT_EQ(refs[i].index, i);
    }
}

TEST(Tiles, ClampModeCoversExactlyOnceWithoutWrapping) {
    const auto g = make_grid(144, 192, 48, 64, 16, ShiftMode::Clamp);
    for (std::size_t step = 0; step < 20; ++step) {
        const auto refs = tiles_at_step(g, step);
        EXPECT_LE(refs.size(), g.max_tiles());
        for (const auto& r : refs) {
            EXPECT_GE(r.origin_y, 0);
            EXPECT_LE(std::size_t(r.origin_y) + r.height, 144u);
            EXPECT_LE(std::size_t(r.origin_x) + r.width, 192u);
        }
        for (int m : oracle::coverage(rects(refs), 144, 192, false)) ASSERT_EQ(m, 1);
    }
    EXPECT_EQ(tiles_at_step(g, 0).size(), 9u);
    EXPECT_EQ(tiles_at_step(g, 1).size(), 16u);
}

TEST(Tiles, BoundariesMoveBetweenSteps) {
    const auto g = make_grid(144, 256, 48, 64);
    std::set<long> seen;
    for (std::size_t s = 0; s < 16; ++s) seen.insert(tiles_at_step(g, s)[0].origin_x);
    EXPECT_EQ(seen.size(), 16u);
}

TEST(Fuse, RoundTripsTiles) {
    const auto g = make_grid(8, 12, 4, 6, 2);
    Canvas src(Shape{1, 2, 8, 12});
    for (std::size_t i = 0; i < src.size(); ++i) src.data()[i] = float(i) * 0.5f;
    for (std::size_t step = 0; step < 3; ++step) {
        std::vector<std::pair<TileRef, Canvas>> outs;
        for (const auto& r : tiles_at_step(g, step)) outs.emplace_back(r, extract_tile(src, r));
        std::reverse(outs.begin(), outs.end());
        EXPECT_TRUE(bit_equal(fuse_noise(outs, g), src));
    }
}

TEST(Fuse, RejectsIncompleteOrForeignSets) {
    const auto g = make_grid(8, 12, 4, 6, 2);
    const Canvas src(Shape{1, 1, 8, 12}, Space::Latent, 1.0f);
    std::vector<std::pair<TileRef, Canvas>> outs;
    for (const auto& r : tiles_at_step(g, 1)) outs.emplace_back(r, extract_tile(src, r));

    EXPECT_THROW(fuse_noise({}, g), FusionError);
    auto missing = outs;
    missing.pop_back();
    EXPECT_THROW(fuse_noise(missing, g), FusionError);
    auto dup = outs;
    dup.push_back(outs[0]);
    EXPECT_THROW(fuse_noise(dup, g), FusionError);
    auto mixed = outs;
    mixed[1].first = tiles_at_step(g, 0)[1];
    EXPECT_THROW(fuse_noise(mixed, g), FusionError);
    auto moved = outs;
    moved[2].first.origin_x += 1;
    EXPECT_THROW(fuse_noise(moved, g), FusionError);
    auto wrong = outs;
    wrong[0].second = Canvas(Shape{1, 1, 3, 6});
    EXPECT_THROW(fuse_noise(wrong, g), DimensionError);
}
