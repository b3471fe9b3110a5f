#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"

namespace supergen {

// Norms are per-element means (mean |x| for L1, RMS for L2).
enum class NormKind { L1, L2 };

inline double mean_norm(std::span<const float> a, NormKind kind) {
    if (a.empty()) return 0.0;
    double acc = 0.0;
    if (kind == NormKind::L1) {
        for (float v : a) acc += std::abs(static_cast<double>(v));
        return acc / static_cast<double>(a.size());
    }
    for (float v : a) acc += static_cast<double>(v) * v;
    return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double mean_norm_diff(std::span<const float> a, std::span<const float> b, NormKind kind) {
    if (a.size() != b.size()) throw DimensionError("norm of difference: length mismatch");
    if (a.empty()) return 0.0;
    double acc = 0.0;
    if (kind == NormKind::L1) {
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
        return acc / static_cast<double>(a.size());
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

struct CacheConfig {
    bool enabled = false;
    double tau = 0.09;
    double scale_factor = 0.3;
    std::size_t warmup_skip = 3;
    std::size_t tail_skip = 2;
    NormKind norm = NormKind::L1;
    double tau_min_mult = 0.5;
    double tau_max_mult = 2.0;
    bool region_aware = true;

    void validate() const {
        if (!(tau >= 0.0)) throw ConfigError("cache.tau must be >= 0");
        if (!(scale_factor >= 0.0)) throw ConfigError("cache.scale must be >= 0");
        if (!(tau_min_mult >= 0.0 && tau_min_mult <= 1.0 && tau_max_mult >= 1.0))
            throw ConfigError("cache clip multipliers must satisfy 0 <= min <= 1 <= max");
    }
};

enum class Decision { Reuse, Recompute };

inline const char* to_string(Decision d) noexcept { return d == Decision::Reuse ? "reuse" : "recompute"; }

inline constexpr double kStationaryGuard = 1e-12;

struct TileCacheState {
    bool has_anchor = false;
    std::size_t anchor_step = 0;
    std::size_t anchor_height = 0;
    std::size_t anchor_width = 0;
    Canvas anchor_input;   // I_c
    Canvas anchor_output;  // O_c
    Canvas delta;          // O_c - I_c
    double rate = std::numeric_limits<double>::infinity();  // k_c; infinite until a prior step exists
    double path_len = 0.0;                                   // L_{c->t}
    Canvas prev_input;
    Canvas prev_output;
    bool has_sigma = false;
    double sigma = 0.0;
    double tau = 0.0;  // per-tile threshold in effect
};

inline Canvas residual(const Canvas& output, const Canvas& input) {
    require_same_shape(output, input, "residual");
    Canvas d(output.shape(), Space::Latent);
    auto o = output.data();
    auto i = input.data();
    auto r = d.data();
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = o[k] - i[k];
    return d;
}

// k = ||O_t - O_prev|| / ||I_t - I_prev||; keeps `previous` when the input
// is stationary.
inline double transformation_rate(std::span<const float> out_t, std::span<const float> out_prev,
                                  std::span<const float> in_t, std::span<const float> in_prev, NormKind norm,
                                  double previous = std::numeric_limits<double>::infinity()) {
    const double din = mean_norm_diff(in_t, in_prev, norm);
    if (din < kStationaryGuard) return previous;
    return mean_norm_diff(out_t, out_prev, norm) / din;
}

inline double transformation_rate(const Canvas& out_t, const Canvas& out_prev, const Canvas& in_t,
                                  const Canvas& in_prev, NormKind norm,
                                  double previous = std::numeric_limits<double>::infinity()) {
    require_same_shape(out_t, out_prev, "transformation_rate");
    require_same_shape(in_t, in_prev, "transformation_rate");
    return transformation_rate(out_t.data(), out_prev.data(), in_t.data(), in_prev.data(), norm, previous);
}

inline double accumulate_path(double path_len, std::span<const float> in_t, std::span<const float> in_prev,
                              NormKind norm) {
    return path_len + mean_norm_diff(in_t, in_prev, norm);
}

inline double accumulate_path(double path_len, const Canvas& in_t, const Canvas& in_prev, NormKind norm) {
    require_same_shape(in_t, in_prev, "accumulate_path");
    return accumulate_path(path_len, in_t.data(), in_prev.data(), norm);
}

inline bool in_protected_window(std::size_t step, std::size_t total_steps, const CacheConfig& cfg) noexcept {
    return step < cfg.warmup_skip || step + cfg.tail_skip >= total_steps;
}

// Reuse iff an anchor exists, the step lies outside the warmup/tail
// windows, and k_c * L_acc < tau_i.
inline Decision decide(const TileCacheState& s, std::size_t step, std::size_t total_steps, const CacheConfig& cfg) {
    if (!s.has_anchor || in_protected_window(step, total_steps, cfg)) return Decision::Recompute;
    if (!std::isfinite(s.rate)) return Decision::Recompute;
    return s.rate * s.path_len < s.tau ? Decision::Reuse : Decision::Recompute;
}

inline Canvas approximate_output(const Canvas& input, const Canvas& delta) {
    require_same_shape(input, delta, "approximate_output");
    Canvas out(input.shape(), Space::Latent);
    auto i = input.data();
    auto d = delta.data();
    auto o = out.data();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = i[k] + d[k];
    return out;
}

inline Canvas approximate_output(const Canvas& input, const TileCacheState& s) {
    if (!s.has_anchor) throw CacheStateError("approximate_output: tile has no cached residual");
    return approximate_output(input, s.delta);
}

// Population standard deviation over every element of the tile.
inline double tile_noise_std(std::span<const float> tile) {
    if (tile.empty()) throw DimensionError("tile_noise_std: empty tile");
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (float v : tile) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    return std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
}

inline double tile_noise_std(const Canvas& tile) { return tile_noise_std(tile.data()); }

// tau_i = clip(tau (1 + s (sigma_i - mean) / mean), min_mult tau, max_mult tau).
inline double adapt_threshold(double sigma_i, double sigma_mean, const CacheConfig& cfg) {
    if (!(sigma_mean > 0.0) || !std::isfinite(sigma_mean) || !std::isfinite(sigma_i)) return cfg.tau;
    const double raw = cfg.tau * (1.0 + cfg.scale_factor * (sigma_i - sigma_mean) / sigma_mean);
    return std::clamp(raw, cfg.tau * cfg.tau_min_mult, cfg.tau * cfg.tau_max_mult);
}

// Records a fresh prediction as the new anchor. The rate is measured
// against (in_prev, out_prev) when given, otherwise against the state's
// own previous tiles; without a usable prior pair it stays infinite.
inline void refresh(TileCacheState& s, std::size_t step, const Canvas& in_t, const Canvas& out_t, NormKind norm,
                    const Canvas* in_prev = nullptr, const Canvas* out_prev = nullptr) {
    require_same_shape(in_t, out_t, "refresh");
    if (in_prev == nullptr && out_prev == nullptr && !s.prev_input.empty()) {
        in_prev = &s.prev_input;
        out_prev = &s.prev_output;
    }
    if (in_prev && out_prev && in_prev->shape() == in_t.shape() && out_prev->shape() == out_t.shape())
        s.rate = transformation_rate(out_t, *out_prev, in_t, *in_prev, norm, s.rate);
    else
        s.rate = std::numeric_limits<double>::infinity();
    s.has_anchor = true;
    s.anchor_step = step;
    s.anchor_height = in_t.shape().height;
    s.anchor_width = in_t.shape().width;
    s.anchor_input = in_t;
    s.anchor_output = out_t;
    s.delta = residual(out_t, in_t);
    s.path_len = 0.0;
    s.prev_input = in_t;
    s.prev_output = out_t;
    s.sigma = tile_noise_std(out_t);
    s.has_sigma = true;
}

// Start-of-step bookkeeping: extend the path by ||I_t - I_prev|| before
// the decision is taken.
inline void observe_input(TileCacheState& s, const Canvas& in_t, NormKind norm) {
    if (s.has_anchor && !s.prev_input.empty() && s.prev_input.shape() == in_t.shape())
        s.path_len = accumulate_path(s.path_len, in_t, s.prev_input, norm);
}

// End-of-step bookkeeping for a reused tile.
inline void record_reused(TileCacheState& s, const Canvas& in_t, const Canvas& out_t) {
    s.prev_input = in_t;
    s.prev_output = out_t;
}

}  // namespace supergen
