#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <thread>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"
#include "supergen/rng.hpp"
#include "supergen/scene.hpp"
#include "supergen/schedule.hpp"
#include "supergen/tiling.hpp"

namespace supergen {

enum class Stage : std::uint32_t { Sketch = 1, Refine = 2 };

struct PredictRequest {
    const Canvas* tile_latent = nullptr;
    int timestep = 0;
    TileRef tile;
    Shape canvas;                 // dims of the full canvas the tile was cut from
    Stage stage = Stage::Refine;
    std::uint32_t sequence = 0;   // global sampler step, stage 1 then stage 2
    std::string conditioning_id;  // opaque scene / prompt id

    const Canvas& latent() const {
        if (tile_latent == nullptr) throw Error("predict request without a tile latent");
        return *tile_latent;
    }
};

struct Prediction {
    Canvas noise;
    double cost_units = 0.0;
};

struct CostModel {
    double units_per_tile_call = 1.0;
    double stall_ms = 0.0;  // optional wall-clock stall per call

    void charge() const {
        if (stall_ms > 0.0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(stall_ms));
    }
};

// Noise prediction backend. Implementations must tolerate concurrent
// predict calls.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual Prediction predict(const PredictRequest& request) const = 0;
};

// Clean targets for both stages of a run.
struct SceneTargets {
    SceneSpec scene;
    Canvas low;   // stage-1 latent target
    Canvas high;  // stage-2 latent target

    const Canvas& for_stage(Stage s) const { return s == Stage::Sketch ? low : high; }
};

// Exact noise that maps z_t back to the target tile:
// eps = (z_t - sqrt(ab) z0*) / sqrt(1 - ab).
inline Canvas oracle_predict(const Canvas& tile_latent, int t, const TileRef& ref, const Canvas& target,
                             const VarianceSchedule& sched) {
    const double ab = sched.alpha_bar_at(t);
    if (!(ab < 1.0)) throw SingularityError("oracle_predict: alpha_bar_t = 1 has no noise component");
    const Canvas z0 = slice(target, ref.origin_y, ref.origin_x, ref.height, ref.width, true);
    require_same_shape(tile_latent, z0, "oracle_predict");
    const float a = static_cast<float>(std::sqrt(ab));
    const float b = static_cast<float>(std::sqrt(1.0 - ab));
    Canvas eps(tile_latent.shape(), Space::Latent);
    auto o = eps.data();
    auto z = tile_latent.data();
    auto x = z0.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (z[i] - a * x[i]) / b;
    return eps;
}

class OraclePredictor : public NoisePredictor {
public:
    OraclePredictor(VarianceSchedule sched, std::shared_ptr<const SceneTargets> targets, CostModel cost = {})
        : sched_(std::move(sched)), targets_(std::move(targets)), cost_(cost) {}

    Prediction predict(const PredictRequest& req) const override {
        cost_.charge();
        return {oracle_predict(req.latent(), req.timestep, req.tile, targets_->for_stage(req.stage), sched_),
                cost_.units_per_tile_call};
    }

private:
    VarianceSchedule sched_;
    std::shared_ptr<const SceneTargets> targets_;
    CostModel cost_;
};

struct DriftParams {
    double amplitude = 0.25;          // background perturbation amplitude
    double ratio = 4.0;               // foreground / background drift rate
    double cycles = 1.0;              // background oscillations over the full schedule
    double foreground_amplitude = 0.5;  // foreground amplitude relative to background
};

// Oracle noise plus a region-dependent, time-varying perturbation:
//   O = eps + a(p) sin(2 pi cycles f(p) t/T + phi(p))
// with m the foreground weight, r = 1 + (ratio - 1) m the drift rate,
// a = A (1 - (1 - g) m) and f = r A / a. The step-to-step change scales
// with r while foreground noise has lower spread.
class DriftPredictor : public NoisePredictor {
public:
    DriftPredictor(VarianceSchedule sched, std::shared_ptr<const SceneTargets> targets, DriftParams params,
                   std::uint64_t seed, CostModel cost = {})
        : sched_(std::move(sched)), targets_(std::move(targets)), params_(params), seed_(seed), cost_(cost) {
        if (params_.amplitude < 0.0 || params_.ratio < 1.0)
            throw ConfigError("drift needs amplitude >= 0 and ratio >= 1");
        if (!(params_.foreground_amplitude > 0.0) || params_.foreground_amplitude > 1.0)
            throw ConfigError("drift foreground amplitude must be in (0, 1]");
        fields_[0] = make_fields(targets_->low.shape());
        fields_[1] = make_fields(targets_->high.shape());
    }

    Prediction predict(const PredictRequest& req) const override {
        cost_.charge();
        Canvas out = oracle_predict(req.latent(), req.timestep, req.tile, targets_->for_stage(req.stage), sched_);
        if (params_.amplitude == 0.0) return {std::move(out), cost_.units_per_tile_call};

        const auto& fields = fields_[req.stage == Stage::Sketch ? 0 : 1];
        if (fields.shape != req.canvas)
            throw DimensionError("drift: request canvas " + req.canvas.str() + " does not match target " +
                                 fields.shape.str());
        const double T = static_cast<double>(sched_.steps());
        const double omega_t = 2.0 * std::numbers::pi * params_.cycles * static_cast<double>(req.timestep) / T;
        const double A = params_.amplitude;
        const double g = params_.foreground_amplitude;
        const auto& s = out.shape();
        const std::size_t H = req.canvas.height, W = req.canvas.width;
        for (std::size_t f = 0; f < s.frames; ++f)
            for (std::size_t c = 0; c < s.channels; ++c)
                for (std::size_t y = 0; y < s.height; ++y) {
                    const std::size_t cy = (static_cast<std::size_t>(req.tile.origin_y) + y) % H;
                    for (std::size_t x = 0; x < s.width; ++x) {
                        const std::size_t cx = (static_cast<std::size_t>(req.tile.origin_x) + x) % W;
                        const std::size_t gi = ((f * req.canvas.channels + c) * H + cy) * W + cx;
                        const double m = fields.weight[(f * H + cy) * W + cx];
                        const double rate = 1.0 + (params_.ratio - 1.0) * m;
                        const double amp = 1.0 - (1.0 - g) * m;
                        float& v = out.at(f, c, y, x);
                        v = static_cast<float>(v + A * amp * std::sin(omega_t * rate / amp + fields.phase[gi]));
                    }
                }
        return {std::move(out), cost_.units_per_tile_call};
    }

    const DriftParams& params() const noexcept { return params_; }

private:
    struct Fields {
        Shape shape;
        std::vector<float> phase;   // per element
        std::vector<float> weight;  // per (frame, y, x)
    };

    Fields make_fields(const Shape& shape) const {
        Fields fl;
        fl.shape = shape;
        fl.phase.resize(shape.size());
        fl.weight.resize(shape.frames * shape.plane());
        for (std::size_t i = 0; i < fl.phase.size(); ++i)
            fl.phase[i] = static_cast<float>(2.0 * std::numbers::pi *
                                             unit_from_hash(hash_keys({seed_, static_cast<std::uint64_t>(StreamKind::Drift),
                                                                       shape.height, shape.width, i})));
        const double H = static_cast<double>(shape.height), W = static_cast<double>(shape.width);
        for (std::size_t f = 0; f < shape.frames; ++f)
            for (std::size_t y = 0; y < shape.height; ++y)
                for (std::size_t x = 0; x < shape.width; ++x)
                    fl.weight[(f * shape.height + y) * shape.width + x] =
                        static_cast<float>(targets_->scene.foreground_weight(f, (y + 0.5) / H, (x + 0.5) / W));
        return fl;
    }

    VarianceSchedule sched_;
    std::shared_ptr<const SceneTargets> targets_;
    DriftParams params_;
    std::uint64_t seed_;
    CostModel cost_;
    Fields fields_[2];
};

}  // namespace supergen
