#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"
#include "supergen/report.hpp"
#include "supergen/trace.hpp"

namespace supergen {

inline constexpr double kPsnrCap = 99.0;

// ||a - b||_1 / ||b||_1
inline double rel_l1(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionError("rel_l1: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::abs(static_cast<double>(a[i]) - b[i]);
        den += std::abs(static_cast<double>(b[i]));
    }
    if (den == 0.0) throw MetricError("rel_l1: reference has zero L1 norm");
    return num / den;
}

inline double cos_sim(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionError("cos_sim: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw MetricError("cos_sim: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double psnr(std::span<const float> a, std::span<const float> b, double data_range) {
    if (a.size() != b.size()) throw DimensionError("psnr: length mismatch");
    if (!(data_range > 0.0)) throw MetricError("psnr: data range must be > 0");
    if (a.empty()) throw MetricError("psnr: empty input");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

inline double rel_l1(const Canvas& a, const Canvas& b) {
    require_same_shape(a, b, "rel_l1");
    return rel_l1(a.data(), b.data());
}
inline double cos_sim(const Canvas& a, const Canvas& b) {
    require_same_shape(a, b, "cos_sim");
    return cos_sim(a.data(), b.data());
}
inline double psnr(const Canvas& a, const Canvas& b, double data_range) {
    require_same_shape(a, b, "psnr");
    return psnr(a.data(), b.data(), data_range);
}

struct SsimOptions {
    std::size_t window = 8;
    double k1 = 0.01;
    double k2 = 0.03;
};

// Uniform-window SSIM over every window position of every (frame, channel)
// plane, averaged. Window statistics use population moments.
inline double ssim(const Canvas& a, const Canvas& b, double data_range, SsimOptions opt = {}) {
    require_same_shape(a, b, "ssim");
    const auto& s = a.shape();
    const std::size_t win = opt.window;
    if (win == 0 || s.height < win || s.width < win)
        throw DimensionError("ssim: canvas " + s.str() + " smaller than window " + std::to_string(win));
    if (!(data_range > 0.0)) throw MetricError("ssim: data range must be > 0");
    const double c1 = (opt.k1 * data_range) * (opt.k1 * data_range);
    const double c2 = (opt.k2 * data_range) * (opt.k2 * data_range);
    const double n = static_cast<double>(win * win);
    const std::size_t H = s.height, W = s.width, stride = W + 1;

    // Summed-area tables of a, b, a^2, b^2, ab.
    std::vector<double> ia((H + 1) * stride), ib(ia.size()), iaa(ia.size()), ibb(ia.size()), iab(ia.size());
    auto box = [&](const std::vector<double>& t, std::size_t y, std::size_t x) {
        return t[(y + win) * stride + x + win] - t[y * stride + x + win] - t[(y + win) * stride + x] + t[y * stride + x];
    };
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c) {
            auto pa = a.plane(f, c);
            auto pb = b.plane(f, c);
            for (std::size_t y = 0; y < H; ++y) {
                double ra = 0, rb = 0, raa = 0, rbb = 0, rab = 0;
                for (std::size_t x = 0; x < W; ++x) {
                    const double va = pa[y * W + x], vb = pb[y * W + x];
                    ra += va;
                    rb += vb;
                    raa += va * va;
                    rbb += vb * vb;
                    rab += va * vb;
                    const std::size_t k = (y + 1) * stride + x + 1, up = y * stride + x + 1;
                    ia[k] = ia[up] + ra;
                    ib[k] = ib[up] + rb;
                    iaa[k] = iaa[up] + raa;
                    ibb[k] = ibb[up] + rbb;
                    iab[k] = iab[up] + rab;
                }
            }
            for (std::size_t y = 0; y + win <= H; ++y)
                for (std::size_t x = 0; x + win <= W; ++x) {
                    const double mu_a = box(ia, y, x) / n, mu_b = box(ib, y, x) / n;
                    const double var_a = std::max(0.0, box(iaa, y, x) / n - mu_a * mu_a);
                    const double var_b = std::max(0.0, box(ibb, y, x) / n - mu_b * mu_b);
                    const double cov = box(iab, y, x) / n - mu_a * mu_b;
                    total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                             ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                    ++windows;
                }
        }
    return std::clamp(total / static_cast<double>(windows), -1.0, 1.0);
}

// Compares a candidate against a reference; the data range is taken from
// the reference.
inline Fidelity compare_canvases(const Canvas& candidate, const Canvas& reference) {
    require_same_shape(candidate, reference, "compare");
    Fidelity f;
    f.bit_exact = bit_equal(candidate, reference);
    const auto [lo, hi] = std::minmax_element(reference.data().begin(), reference.data().end());
    double range = static_cast<double>(*hi) - *lo;
    if (!(range > 0.0)) range = 1.0;
    f.psnr = psnr(candidate, reference, range);
    const auto& s = reference.shape();
    SsimOptions opt;
    opt.window = std::min<std::size_t>({opt.window, s.height, s.width});
    f.ssim = ssim(candidate, reference, range, opt);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        f.rel_l1 = rel_l1(candidate, reference);
    } catch (const MetricError&) {
        f.rel_l1 = f.bit_exact ? 0.0 : nan;
    }
    try {
        f.cos = cos_sim(candidate, reference);
    } catch (const MetricError&) {
        f.cos = nan;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Adjacent-step similarity profile of predicted noise O_t, residual
// delta_t = O_t - I_t, and transformation rate k_t.

struct ProfileStep {
    std::size_t step = 0;
    int timestep = 0;
    std::vector<float> input;   // I_t
    std::vector<float> output;  // O_t
};

struct ProfileRow {
    std::size_t step = 0;
    double rel_l1_o = 0.0;
    double cos_o = 0.0;
    double rel_l1_delta = 0.0;
    double cos_delta = 0.0;
    double k = 0.0;
};

inline std::vector<ProfileRow> similarity_profile(const std::vector<ProfileStep>& trace) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto guarded = [nan](auto&& fn) {
        try {
            return fn();
        } catch (const MetricError&) {
            return nan;
        }
    };
    std::vector<ProfileRow> rows;
    std::vector<float> delta_prev, delta;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& cur = trace[i];
        if (cur.input.size() != cur.output.size()) throw DimensionError("profile: input/output length mismatch");
        delta.resize(cur.output.size());
        for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = cur.output[k] - cur.input[k];
        if (i > 0 && trace[i - 1].output.size() == cur.output.size()) {
            const auto& prev = trace[i - 1];
            ProfileRow r;
            r.step = cur.step;
            r.rel_l1_o = guarded([&] { return rel_l1(cur.output, prev.output); });
            r.cos_o = guarded([&] { return cos_sim(cur.output, prev.output); });
            r.rel_l1_delta = guarded([&] { return rel_l1(delta, delta_prev); });
            r.cos_delta = guarded([&] { return cos_sim(delta, delta_prev); });
            const double din = mean_norm_diff(cur.input, prev.input, NormKind::L1);
            r.k = din < kStationaryGuard ? nan : mean_norm_diff(cur.output, prev.output, NormKind::L1) / din;
            rows.push_back(r);
        }
        std::swap(delta_prev, delta);
    }
    return rows;
}

// Groups trace records per step, concatenating tiles in index order.
// Steps must be contiguous and each step must hold tiles 0..n-1.
inline std::vector<ProfileStep> profile_steps_from_trace(const TraceFile& trace) {
    std::map<std::uint32_t, std::map<std::uint32_t, const TraceRecord*>> by_step;
    for (const auto& r : trace.records) {
        auto& tiles = by_step[r.step];
        if (!tiles.emplace(r.tile, &r).second) throw ReplayError("duplicate record", r.step, r.tile);
    }
    std::vector<ProfileStep> steps;
    std::optional<std::uint32_t> last;
    for (const auto& [step, tiles] : by_step) {
        if (last && step != *last + 1) throw ReplayError("gap in trace before step", step);
        last = step;
        std::uint32_t expect = 0;
        ProfileStep ps;
        ps.step = step;
        for (const auto& [tile, rec] : tiles) {
            if (tile != expect) throw ReplayError("gap in trace: missing tile", step, expect);
            ++expect;
            ps.timestep = static_cast<int>(rec->timestep);
            ps.input.insert(ps.input.end(), rec->input.data().begin(), rec->input.data().end());
            ps.output.insert(ps.output.end(), rec->output.data().begin(), rec->output.data().end());
        }
        steps.push_back(std::move(ps));
    }
    return steps;
}

inline void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows) {
    os << "step,relL1_O,cos_O,relL1_delta,cos_delta,k\n";
    os.precision(9);
    for (const auto& r : rows)
        os << r.step << "," << r.rel_l1_o << "," << r.cos_o << "," << r.rel_l1_delta << "," << r.cos_delta << "," << r.k
           << "\n";
}

}  // namespace supergen
