#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"
#include "supergen/rng.hpp"

namespace supergen {

// A Gaussian bump moving linearly across frames. Coordinates are
// normalized to [0, 1] in both axes.
struct Blob {
    double center_y = 0.5;
    double center_x = 0.5;
    double velocity_y = 0.0;  // per frame
    double velocity_x = 0.0;
    double radius = 0.1;
    double amplitude = 1.0;

    double cy(std::size_t frame) const noexcept { return center_y + velocity_y * static_cast<double>(frame); }
    double cx(std::size_t frame) const noexcept { return center_x + velocity_x * static_cast<double>(frame); }
};

struct BackgroundWave {
    double freq_y = 1.0;
    double freq_x = 1.0;
    double phase = 0.0;
};

// Procedural target: a static low-frequency background plus moving
// foreground blobs. Resolution independent.
struct SceneSpec {
    std::string id = "scene";
    std::uint64_t seed = 0;
    double background_amplitude = 0.6;
    std::vector<std::vector<BackgroundWave>> background;  // per channel
    std::vector<double> channel_gain;                      // per channel blob gain
    std::vector<Blob> blobs;

    void validate(std::size_t frames) const {
        for (const auto& b : blobs) {
            if (b.radius <= 0.0) throw ConfigError("blob radius must be > 0");
            for (std::size_t f : {std::size_t{0}, frames == 0 ? std::size_t{0} : frames - 1}) {
                const double y = b.cy(f), x = b.cx(f);
                if (y < 0.0 || y > 1.0 || x < 0.0 || x > 1.0)
                    throw ConfigError("blob trajectory leaves the canvas in scene '" + id + "'");
            }
        }
    }

    double foreground_weight(std::size_t frame, double u, double v) const noexcept {
        double w = 0.0;
        for (const auto& b : blobs) {
            const double dy = u - b.cy(frame), dx = v - b.cx(frame);
            w = std::max(w, std::exp(-(dy * dy + dx * dx) / (2.0 * b.radius * b.radius)));
        }
        return w;
    }

    double value(std::size_t frame, std::size_t channel, double u, double v) const noexcept {
        double acc = 0.0;
        if (channel < background.size())
            for (const auto& w : background[channel])
                acc += background_amplitude * std::sin(2.0 * std::numbers::pi * (w.freq_y * u + w.freq_x * v) + w.phase);
        const double gain = channel < channel_gain.size() ? channel_gain[channel] : 1.0;
        for (const auto& b : blobs) {
            const double dy = u - b.cy(frame), dx = v - b.cx(frame);
            acc += gain * b.amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * b.radius * b.radius));
        }
        return acc;
    }
};

struct SceneParams {
    std::string id = "scene";
    std::uint64_t seed = 0;
    std::size_t channels = 4;
    std::size_t frames = 8;
    std::size_t blob_count = 2;
    double blob_radius = 0.08;
    double blob_amplitude = 1.5;
    double blob_speed = 0.01;  // normalized units per frame
    double background_amplitude = 0.6;
    std::size_t waves_per_channel = 3;
};

// Fills background waves and channel gains from the seed; blobs are kept
// if already present, otherwise drawn from the seed.
inline SceneSpec make_scene(const SceneParams& p, std::vector<Blob> blobs = {}, bool seeded_blobs = true) {
    SceneSpec s;
    s.id = p.id;
    s.seed = p.seed;
    s.background_amplitude = p.background_amplitude;
    auto rng = make_stream(p.seed, StreamKind::Scene);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    s.background.resize(p.channels);
    s.channel_gain.resize(p.channels);
    for (std::size_t c = 0; c < p.channels; ++c) {
        for (std::size_t k = 0; k < p.waves_per_channel; ++k) {
            BackgroundWave w;
            w.freq_y = 0.5 + 2.0 * unit(rng);
            w.freq_x = 0.5 + 2.0 * unit(rng);
            w.phase = 2.0 * std::numbers::pi * unit(rng);
            s.background[c].push_back(w);
        }
        s.channel_gain[c] = 0.5 + unit(rng);
    }
    if (!blobs.empty() || !seeded_blobs) {
        s.blobs = std::move(blobs);
    } else {
        const double r = p.blob_radius;
        const double span = p.frames > 1 ? static_cast<double>(p.frames - 1) : 1.0;
        for (std::size_t i = 0; i < p.blob_count; ++i) {
            Blob b;
            b.radius = r;
            b.amplitude = p.blob_amplitude;
            b.center_y = r + (1.0 - 2.0 * r) * unit(rng);
            b.center_x = r + (1.0 - 2.0 * r) * unit(rng);
            const double angle = 2.0 * std::numbers::pi * unit(rng);
            const double end_y = std::clamp(b.center_y + std::sin(angle) * p.blob_speed * span, r, 1.0 - r);
            const double end_x = std::clamp(b.center_x + std::cos(angle) * p.blob_speed * span, r, 1.0 - r);
            b.velocity_y = (end_y - b.center_y) / span;
            b.velocity_x = (end_x - b.center_x) / span;
            s.blobs.push_back(b);
        }
    }
    s.validate(p.frames);
    return s;
}

// Samples the scene at pixel centers.
inline Canvas render_scene(const SceneSpec& scene, Shape pixel_shape) {
    scene.validate(pixel_shape.frames);
    Canvas out(pixel_shape, Space::Pixel);
    const double H = static_cast<double>(pixel_shape.height), W = static_cast<double>(pixel_shape.width);
    for (std::size_t f = 0; f < pixel_shape.frames; ++f)
        for (std::size_t c = 0; c < pixel_shape.channels; ++c)
            for (std::size_t y = 0; y < pixel_shape.height; ++y)
                for (std::size_t x = 0; x < pixel_shape.width; ++x)
                    out.at(f, c, y, x) = static_cast<float>(scene.value(f, c, (y + 0.5) / H, (x + 0.5) / W));
    return out;
}

}  // namespace supergen
