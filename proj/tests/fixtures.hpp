#pragma once

#include <filesystem>
#include <string>

#include "supergen/supergen.hpp"

namespace fixtures {

// 8 x 4 x 144 x 256 latent, 3 x 4 grid of 48 x 64 tiles, 50 steps, k = 45.
inline supergen::RunConfig reference_config() {
    supergen::RunConfig c;
    c.scene.id = "reference";
    c.scene.seed = 7;
    c.scene.frames = 8;
    c.scene.channels = 4;
    c.low_height = 72;
    c.low_width = 128;
    c.height = 144;
    c.width = 256;
    c.tile_height = 48;
    c.tile_width = 64;
    c.steps = 50;
    c.renoise_steps = 45;
    c.seed = 1;
    return c;
}

// 3 x 3 grid of 48 x 64 tiles on a 144 x 192 latent.
inline supergen::RunConfig nine_tile_config() {
    auto c = reference_config();
    c.scene.id = "nine";
    c.low_height = 72;
    c.low_width = 96;
    c.width = 192;
    return c;
}

// Drifting backend with foreground blobs confined to the bottom-right;
// the top row of tiles only ever sees background.
inline supergen::RunConfig contrast_config() {
    auto c = reference_config();
    c.scene.id = "contrast";
    c.predictor = supergen::PredictorKind::Drift;
    c.drift.ratio = 4.0;
    c.cache.enabled = true;
    c.cache.tau = 0.09;
    c.cache.scale_factor = 0.3;
    c.blobs = {
        supergen::Blob{0.80, 0.70, 0.0, 0.004, 0.08, 1.5},
        supergen::Blob{0.84, 0.86, -0.002, -0.004, 0.07, 1.2},
    };
    return c;
}

inline std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "supergen_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace fixtures
