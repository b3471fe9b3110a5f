#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"

namespace supergen {

enum class ScheduleKind { Linear, Cosine };

// Per-timestep beta / alpha / alpha_bar. Stored in double; the sampler
// derives float coefficients from these at each step.
struct VarianceSchedule {
    ScheduleKind kind = ScheduleKind::Linear;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    int steps() const noexcept { return static_cast<int>(beta.size()); }

    // alpha_bar at index t; t == -1 denotes the clean endpoint (alpha_bar = 1).
    double alpha_bar_at(int t) const {
        if (t == -1) return 1.0;
        if (t < 0 || t >= steps())
            throw BoundsError("timestep " + std::to_string(t) + " outside schedule of " + std::to_string(steps()));
        return alpha_bar[static_cast<std::size_t>(t)];
    }
};

inline VarianceSchedule build_schedule(ScheduleKind kind, int T, double beta_start = 1e-4, double beta_end = 0.02) {
    if (T < 1) throw ConfigError("schedule needs T >= 1, got " + std::to_string(T));
    VarianceSchedule s;
    s.kind = kind;
    s.beta.resize(static_cast<std::size_t>(T));
    if (kind == ScheduleKind::Linear) {
        if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
            throw ConfigError("linear schedule needs 0 < beta_start <= beta_end < 1");
        for (int t = 0; t < T; ++t) {
            const double frac = T == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(T - 1);
            s.beta[static_cast<std::size_t>(t)] = beta_start + (beta_end - beta_start) * frac;
        }
    } else {
        // Squared-cosine alpha_bar profile with offset 0.008; betas clipped at 0.999.
        constexpr double offset = 0.008;
        auto f = [&](double t) {
            const double v = std::cos((t / T + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
            return v * v;
        };
        for (int t = 0; t < T; ++t) {
            const double b = 1.0 - f(t + 1.0) / f(static_cast<double>(t));
            s.beta[static_cast<std::size_t>(t)] = std::clamp(b, 1e-12, 0.999);
        }
    }
    s.alpha.resize(s.beta.size());
    s.alpha_bar.resize(s.beta.size());
    double prod = 1.0;
    for (std::size_t t = 0; t < s.beta.size(); ++t) {
        s.alpha[t] = 1.0 - s.beta[t];
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
    }
    return s;
}

// Sampling-step subset of the schedule: strictly decreasing, ends at 0.
struct TimestepPlan {
    std::vector<int> timesteps;
    double eta = 0.0;

    std::size_t size() const noexcept { return timesteps.size(); }
    // Timestep following sampling step i; -1 after the last step.
    int next(std::size_t i) const noexcept { return i + 1 < timesteps.size() ? timesteps[i + 1] : -1; }
};

inline TimestepPlan make_plan(const VarianceSchedule& sched, int sampling_steps, double eta = 0.0) {
    const int T = sched.steps();
    if (sampling_steps < 1 || sampling_steps > T)
        throw ConfigError("sampling steps must be in [1, " + std::to_string(T) + "], got " +
                          std::to_string(sampling_steps));
    if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must be in [0, 1]");
    TimestepPlan plan;
    plan.eta = eta;
    const int stride = T / sampling_steps;
    for (int i = 0; i < sampling_steps; ++i) plan.timesteps.push_back((sampling_steps - 1 - i) * stride);
    return plan;
}

// ---------------------------------------------------------------------------
// Element-wise sampler math with float coefficients.

inline Canvas forward_noise(const Canvas& z0, const Canvas& eps, double alpha_bar) {
    require_same_shape(z0, eps, "forward_noise");
    const float a = static_cast<float>(std::sqrt(alpha_bar));
    const float b = static_cast<float>(std::sqrt(1.0 - alpha_bar));
    Canvas out(z0.shape(), z0.space());
    auto o = out.data();
    auto x = z0.data();
    auto e = eps.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + b * e[i];
    return out;
}

inline Canvas forward_noise(const Canvas& z0, int t, const Canvas& eps, const VarianceSchedule& sched) {
    return forward_noise(z0, eps, sched.alpha_bar_at(t));
}

inline Canvas predict_z0(const Canvas& z_t, const Canvas& eps_hat, double alpha_bar) {
    require_same_shape(z_t, eps_hat, "predict_z0");
    if (!(alpha_bar > 0.0)) throw SingularityError("predict_z0: alpha_bar must be > 0");
    const float a = static_cast<float>(std::sqrt(alpha_bar));
    const float b = static_cast<float>(std::sqrt(1.0 - alpha_bar));
    Canvas out(z_t.shape(), z_t.space());
    auto o = out.data();
    auto z = z_t.data();
    auto e = eps_hat.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (z[i] - b * e[i]) / a;
    return out;
}

inline Canvas predict_z0(const Canvas& z_t, const Canvas& eps_hat, int t, const VarianceSchedule& sched) {
    return predict_z0(z_t, eps_hat, sched.alpha_bar_at(t));
}

struct ReverseCoefficients {
    float sqrt_ab = 1.0f;       // sqrt(alpha_bar_t)
    float sqrt_1m_ab = 0.0f;    // sqrt(1 - alpha_bar_t)
    float sqrt_ab_prev = 1.0f;  // sqrt(alpha_bar_prev)
    float dir = 0.0f;           // sqrt(1 - alpha_bar_prev - sigma^2)
    float sigma = 0.0f;
};

inline ReverseCoefficients reverse_coefficients(double ab_t, double ab_prev, double eta) {
    if (!(ab_t > 0.0)) throw SingularityError("reverse_step: alpha_bar_t must be > 0");
    if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must be in [0, 1]");
    double sigma = 0.0;
    if (eta > 0.0 && ab_t < 1.0)
        sigma = eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * std::sqrt(std::max(0.0, 1.0 - ab_t / ab_prev));
    ReverseCoefficients c;
    c.sqrt_ab = static_cast<float>(std::sqrt(ab_t));
    c.sqrt_1m_ab = static_cast<float>(std::sqrt(1.0 - ab_t));
    c.sqrt_ab_prev = static_cast<float>(std::sqrt(ab_prev));
    c.dir = static_cast<float>(std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma)));
    c.sigma = static_cast<float>(sigma);
    return c;
}

// out may alias z.
inline void apply_reverse(std::span<const float> z, std::span<const float> eps_hat, std::span<const float> noise,
                          const ReverseCoefficients& c, std::span<float> out) {
    const bool stochastic = c.sigma != 0.0f;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float x0 = (z[i] - c.sqrt_1m_ab * eps_hat[i]) / c.sqrt_ab;
        float v = c.sqrt_ab_prev * x0 + c.dir * eps_hat[i];
        if (stochastic) v += c.sigma * noise[i];
        out[i] = v;
    }
}

// Deterministic DDIM update (eta = 0) or its stochastic generalization.
// t_prev == -1 yields the clean estimate. `noise` is required when eta > 0.
inline Canvas reverse_step(const Canvas& z_t, const Canvas& eps_hat, int t, int t_prev, const VarianceSchedule& sched,
                           double eta = 0.0, const Canvas* noise = nullptr) {
    require_same_shape(z_t, eps_hat, "reverse_step");
    if (t_prev < -1 || t <= t_prev)
        throw OrderingError("reverse_step needs t > t_prev >= -1, got t=" + std::to_string(t) +
                            " t_prev=" + std::to_string(t_prev));
    const auto c = reverse_coefficients(sched.alpha_bar_at(t), sched.alpha_bar_at(t_prev), eta);
    if (c.sigma != 0.0f) {
        if (noise == nullptr) throw ConfigError("reverse_step: eta > 0 requires a noise field");
        require_same_shape(z_t, *noise, "reverse_step noise");
    }
    Canvas out(z_t.shape(), z_t.space());
    apply_reverse(z_t.data(), eps_hat.data(), noise ? noise->data() : std::span<const float>{}, c, out.data());
    return out;
}

}  // namespace supergen
