#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "supergen/error.hpp"

namespace supergen {

enum class Space { Latent, Pixel };

struct Shape {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const noexcept { return frames * channels * height * width; }
    std::size_t plane() const noexcept { return height * width; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return std::to_string(frames) + "x" + std::to_string(channels) + "x" +
               std::to_string(height) + "x" + std::to_string(width);
    }
};

// Dense (frames, channels, height, width) float field. Holds latents,
// predicted noise, or pixels depending on `space()`.
class Canvas {
public:
    Canvas() = default;

    explicit Canvas(Shape shape, Space space = Space::Latent, float fill = 0.0f)
        : shape_(shape), space_(space), data_(shape.size(), fill) {}

    Canvas(Shape shape, std::vector<float> data, Space space = Space::Latent)
        : shape_(shape), space_(space), data_(std::move(data)) {
        if (data_.size() != shape_.size())
            throw DimensionError("canvas data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_.str());
    }

    const Shape& shape() const noexcept { return shape_; }
    Space space() const noexcept { return space_; }
    void set_space(Space s) noexcept { space_ = s; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    std::size_t index(std::size_t f, std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return ((f * shape_.channels + c) * shape_.height + y) * shape_.width + x;
    }

    float& at(std::size_t f, std::size_t c, std::size_t y, std::size_t x) noexcept {
        return data_[index(f, c, y, x)];
    }
    float at(std::size_t f, std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return data_[index(f, c, y, x)];
    }

    std::span<float> plane(std::size_t f, std::size_t c) noexcept {
        return std::span<float>(data_).subspan(index(f, c, 0, 0), shape_.plane());
    }
    std::span<const float> plane(std::size_t f, std::size_t c) const noexcept {
        return std::span<const float>(data_).subspan(index(f, c, 0, 0), shape_.plane());
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
    }

private:
    Shape shape_{};
    Space space_ = Space::Latent;
    std::vector<float> data_;
};

inline bool bit_equal(const Canvas& a, const Canvas& b) noexcept {
    return a.shape() == b.shape() &&
           std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

inline void require_same_shape(const Canvas& a, const Canvas& b, const char* what) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                             b.shape().str());
}

inline double max_abs_diff(const Canvas& a, const Canvas& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    return m;
}

inline Canvas gaussian_canvas(Shape shape, std::mt19937_64& rng, Space space = Space::Latent) {
    Canvas out(shape, space);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : out.data()) v = dist(rng);
    return out;
}

// ---------------------------------------------------------------------------
// Tile slicing. With wrap=true indices are taken modulo the canvas (torus).

inline Canvas slice(const Canvas& src, long origin_y, long origin_x, std::size_t h, std::size_t w,
                    bool wrap) {
    const auto& s = src.shape();
    if (h == 0 || w == 0 || h > s.height || w > s.width)
        throw BoundsError("slice " + std::to_string(h) + "x" + std::to_string(w) +
                          " does not fit canvas " + s.str());
    const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
    if (!wrap && (origin_y < 0 || origin_x < 0 || origin_y + static_cast<long>(h) > H ||
                  origin_x + static_cast<long>(w) > W))
        throw BoundsError("slice at (" + std::to_string(origin_y) + "," + std::to_string(origin_x) +
                          ") out of bounds for " + s.str());
    const long oy = ((origin_y % H) + H) % H;
    const long ox = ((origin_x % W) + W) % W;

    Canvas out(Shape{s.frames, s.channels, h, w}, src.space());
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t y = 0; y < h; ++y) {
                const std::size_t sy = static_cast<std::size_t>((oy + static_cast<long>(y)) % H);
                const float* row = &src.data()[src.index(f, c, sy, 0)];
                float* dst = &out.at(f, c, y, 0);
                const std::size_t first = std::min<std::size_t>(w, static_cast<std::size_t>(W - ox));
                std::copy_n(row + ox, first, dst);
                if (first < w) std::copy_n(row, w - first, dst + first);
            }
    return out;
}

inline void place(Canvas& dst, const Canvas& tile, long origin_y, long origin_x, bool wrap) {
    const auto& s = dst.shape();
    const auto& t = tile.shape();
    if (t.frames != s.frames || t.channels != s.channels)
        throw DimensionError("place: tile " + t.str() + " incompatible with canvas " + s.str());
    if (t.height > s.height || t.width > s.width)
        throw BoundsError("place: tile " + t.str() + " larger than canvas " + s.str());
    const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
    if (!wrap && (origin_y < 0 || origin_x < 0 || origin_y + static_cast<long>(t.height) > H ||
                  origin_x + static_cast<long>(t.width) > W))
        throw BoundsError("place at (" + std::to_string(origin_y) + "," + std::to_string(origin_x) +
                          ") out of bounds for " + s.str());
    const long oy = ((origin_y % H) + H) % H;
    const long ox = ((origin_x % W) + W) % W;
    const std::size_t w = t.width;
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t y = 0; y < t.height; ++y) {
                const std::size_t dy = static_cast<std::size_t>((oy + static_cast<long>(y)) % H);
                float* row = &dst.at(f, c, dy, 0);
                const float* src = &tile.data()[tile.index(f, c, y, 0)];
                const std::size_t first = std::min<std::size_t>(w, static_cast<std::size_t>(W - ox));
                std::copy_n(src, first, row + ox);
                if (first < w) std::copy_n(src + first, w - first, row);
            }
}

// ---------------------------------------------------------------------------
// Codec: stand-in for the VAE.

enum class CodecKind { Identity, AvgPool };

struct Codec {
    CodecKind kind = CodecKind::Identity;
    std::size_t factor = 1;

    void validate() const {
        if (factor < 1) throw ConfigError("codec factor must be >= 1");
        if (kind == CodecKind::Identity && factor != 1)
            throw ConfigError("identity codec requires factor 1");
    }
};

inline Canvas encode(const Canvas& pixels, const Codec& codec) {
    codec.validate();
    if (pixels.space() != Space::Pixel) throw DimensionError("encode expects a pixel-space canvas");
    if (codec.kind == CodecKind::Identity) {
        Canvas out = pixels;
        out.set_space(Space::Latent);
        return out;
    }
    const auto& s = pixels.shape();
    const std::size_t k = codec.factor;
    if (s.height % k != 0 || s.width % k != 0)
        throw DimensionError("encode: " + s.str() + " not divisible by factor " + std::to_string(k));
    Canvas out(Shape{s.frames, s.channels, s.height / k, s.width / k}, Space::Latent);
    const double inv = 1.0 / static_cast<double>(k * k);
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t y = 0; y < s.height / k; ++y)
                for (std::size_t x = 0; x < s.width / k; ++x) {
                    double acc = 0.0;
                    for (std::size_t dy = 0; dy < k; ++dy)
                        for (std::size_t dx = 0; dx < k; ++dx) acc += pixels.at(f, c, y * k + dy, x * k + dx);
                    out.at(f, c, y, x) = static_cast<float>(acc * inv);
                }
    return out;
}

inline Canvas decode(const Canvas& latents, const Codec& codec) {
    codec.validate();
    if (latents.space() != Space::Latent) throw DimensionError("decode expects a latent-space canvas");
    if (codec.kind == CodecKind::Identity) {
        Canvas out = latents;
        out.set_space(Space::Pixel);
        return out;
    }
    const auto& s = latents.shape();
    const std::size_t k = codec.factor;
    Canvas out(Shape{s.frames, s.channels, s.height * k, s.width * k}, Space::Pixel);
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t y = 0; y < s.height * k; ++y)
                for (std::size_t x = 0; x < s.width * k; ++x) out.at(f, c, y, x) = latents.at(f, c, y / k, x / k);
    return out;
}

// ---------------------------------------------------------------------------
// Bicubic resampling (Catmull-Rom, a = -0.5, clamp-to-edge, half-pixel centers).

inline double cubic_kernel(double x, double a = -0.5) noexcept {
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace detail {

struct CubicTap {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
};

inline std::vector<CubicTap> cubic_taps(std::size_t in, std::size_t out) {
    std::vector<CubicTap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const long last = static_cast<long>(in) - 1;
    for (std::size_t i = 0; i < out; ++i) {
        const double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double t = src - base;
        for (int k = 0; k < 4; ++k) {
            const long idx = std::clamp(static_cast<long>(base) - 1 + k, 0L, last);
            taps[i].index[k] = static_cast<std::size_t>(idx);
            taps[i].weight[k] = cubic_kernel(t - static_cast<double>(k - 1));
        }
    }
    return taps;
}

}  // namespace detail

inline Canvas bicubic_resize(const Canvas& src, std::size_t target_h, std::size_t target_w) {
    if (target_h == 0 || target_w == 0) throw DimensionError("bicubic_resize: target dims must be >= 1");
    if (src.space() != Space::Pixel) throw DimensionError("bicubic_resize expects a pixel-space canvas");
    const auto& s = src.shape();
    const auto ty = detail::cubic_taps(s.height, target_h);
    const auto tx = detail::cubic_taps(s.width, target_w);

    Canvas out(Shape{s.frames, s.channels, target_h, target_w}, Space::Pixel);
    std::vector<double> rows(s.height * target_w);
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c) {
            auto in = src.plane(f, c);
            for (std::size_t y = 0; y < s.height; ++y)
                for (std::size_t x = 0; x < target_w; ++x) {
                    double acc = 0.0;
                    for (int k = 0; k < 4; ++k) acc += tx[x].weight[k] * in[y * s.width + tx[x].index[k]];
                    rows[y * target_w + x] = acc;
                }
            auto dst = out.plane(f, c);
            for (std::size_t y = 0; y < target_h; ++y)
                for (std::size_t x = 0; x < target_w; ++x) {
                    double acc = 0.0;
                    for (int k = 0; k < 4; ++k) acc += ty[y].weight[k] * rows[ty[y].index[k] * target_w + x];
                    dst[y * target_w + x] = static_cast<float>(acc);
                }
        }
    return out;
}

}  // namespace supergen
