#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "supergen/cache.hpp"
#include "supergen/canvas.hpp"
#include "supergen/config.hpp"
#include "supergen/error.hpp"
#include "supergen/parallel.hpp"
#include "supergen/predictor.hpp"
#include "supergen/report.hpp"
#include "supergen/rng.hpp"
#include "supergen/scene.hpp"
#include "supergen/schedule.hpp"
#include "supergen/tensor_io.hpp"
#include "supergen/tiling.hpp"
#include "supergen/trace.hpp"

namespace supergen {

inline VarianceSchedule make_schedule(const RunConfig& c) {
    return build_schedule(c.schedule, c.train_steps, c.beta_start, c.beta_end);
}

inline SceneSpec make_scene(const RunConfig& c) { return make_scene(c.scene, c.blobs); }

// Clean latent targets for both resolutions.
inline std::shared_ptr<const SceneTargets> make_targets(const RunConfig& c) {
    auto t = std::make_shared<SceneTargets>();
    t->scene = make_scene(c);
    const std::size_t f = c.codec.factor;
    Shape low_px = c.low_shape(), high_px = c.high_shape();
    low_px.height *= f;
    low_px.width *= f;
    high_px.height *= f;
    high_px.width *= f;
    t->low = encode(render_scene(t->scene, low_px), c.codec);
    t->high = encode(render_scene(t->scene, high_px), c.codec);
    return t;
}

// Digest stored in traces: the result-defining config with the backend
// choice normalized.
inline std::uint64_t trace_digest(const RunConfig& c) {
    RunConfig copy = c;
    copy.predictor = PredictorKind::Oracle;
    return config_digest(copy);
}

inline std::unique_ptr<NoisePredictor> make_backend(const RunConfig& c, const VarianceSchedule& sched,
                                                    std::shared_ptr<const SceneTargets> targets) {
    switch (c.predictor) {
        case PredictorKind::Oracle:
            return std::make_unique<OraclePredictor>(sched, std::move(targets), c.cost);
        case PredictorKind::Drift:
            return std::make_unique<DriftPredictor>(sched, std::move(targets), c.drift, c.seed, c.cost);
        case PredictorKind::Replay:
            return std::make_unique<TraceReplayer>(c.trace_replay, trace_digest(c));
    }
    throw ConfigError("unknown predictor kind");
}

struct Renoised {
    Canvas latent;
    int t_start = 0;
    std::size_t plan_index = 0;  // index of t_start in the plan
};

// Called after every stage-2 step with (step, timestep, z_t, fused noise).
using StepObserver = std::function<void(std::size_t, int, const Canvas&, const Canvas&)>;

struct GenerateResult {
    Canvas stage1;
    Canvas latent;
    Canvas pixels;
    RunReport report;
};

class Pipeline {
public:
    explicit Pipeline(RunConfig config)
        : cfg_(std::move(config)), sched_((cfg_.validate(), make_schedule(cfg_))), plan_(make_plan(sched_, cfg_.steps, cfg_.eta)),
          grid_(cfg_.grid()) {}

    const RunConfig& config() const noexcept { return cfg_; }
    const VarianceSchedule& schedule() const noexcept { return sched_; }
    const TimestepPlan& plan() const noexcept { return plan_; }
    const TileGrid& grid() const noexcept { return grid_; }

    // Full sampling loop at low resolution with a single full-canvas tile.
    Canvas generate_stage1(const NoisePredictor& predictor, RunReport* report = nullptr) const {
        auto rng = make_stream(cfg_.seed, StreamKind::Stage1Init);
        Canvas z = gaussian_canvas(cfg_.low_shape(), rng);
        const TileRef whole{0, 0, 0, z.shape().height, z.shape().width, 0};
        for (std::size_t i = 0; i < plan_.size(); ++i) {
            PredictRequest req;
            req.tile_latent = &z;
            req.timestep = plan_.timesteps[i];
            req.tile = whole;
            req.tile.step = i;
            req.canvas = z.shape();
            req.stage = Stage::Sketch;
            req.sequence = static_cast<std::uint32_t>(i);
            req.conditioning_id = cfg_.scene.id;
            Prediction p = predictor.predict(req);
            if (report) {
                ++report->stage1_calls;
                report->stage1_cost += p.cost_units;
            }
            z = advance(z, p.noise, i, i);
        }
        if (report) report->stage1_steps = plan_.size();
        return z;
    }

    // Decode, upscale in pixel space, re-encode, and noise to the timestep
    // with renoise_steps sampling steps remaining.
    Renoised upscale_and_renoise(const Canvas& low) const {
        if (low.shape() != cfg_.low_shape())
            throw ConfigError("stage-1 latent " + low.shape().str() + " does not match " + cfg_.low_shape().str());
        const Canvas px = decode(low, cfg_.codec);
        const std::size_t f = cfg_.codec.factor;
        const Canvas up = bicubic_resize(px, cfg_.height * f, cfg_.width * f);
        const Canvas z0 = encode(up, cfg_.codec);
        if (z0.shape() != cfg_.high_shape()) throw ConfigError("upscaled latent does not match target dims");
        Renoised r;
        r.plan_index = plan_.size() - static_cast<std::size_t>(cfg_.renoise_steps);
        r.t_start = plan_.timesteps[r.plan_index];
        auto rng = make_stream(cfg_.seed, StreamKind::Stage2Renoise);
        const Canvas eps = gaussian_canvas(z0.shape(), rng);
        r.latent = forward_noise(z0, r.t_start, eps, sched_);
        return r;
    }

    // Tile-aware denoising of the remaining plan steps.
    Canvas run_stage2(const Renoised& start, TileExecutor& executor, RunReport& report,
                      const StepObserver& observer = {}) const {
        Canvas z = start.latent;
        const std::size_t k = plan_.size() - start.plan_index;
        report.n_tiles = grid_.max_tiles();
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t pi = start.plan_index + i;
            StepInput in;
            in.latent = &z;
            in.step = i;
            in.total_steps = k;
            in.timestep = plan_.timesteps[pi];
            in.tiles = tiles_at_step(grid_, i);
            in.sequence = static_cast<std::uint32_t>(plan_.size() + i);
            StepOutput out = executor.execute_step(in);
            out.report.shift = shift_offset(i, grid_);
            if (observer) observer(i, in.timestep, z, out.noise);
            z = advance(z, out.noise, pi, in.sequence);
            report.add_step(std::move(out.report));
        }
        if (grid_.shift_mode == ShiftMode::Wrap) report.n_tiles = grid_.base_tiles();
        return z;
    }

    // Plain full-canvas sampling from the renoised start, for comparison.
    Canvas sample_untiled(const Renoised& start, const NoisePredictor& predictor) const {
        Canvas z = start.latent;
        for (std::size_t pi = start.plan_index; pi < plan_.size(); ++pi) {
            PredictRequest req;
            req.tile_latent = &z;
            req.timestep = plan_.timesteps[pi];
            req.tile = TileRef{0, 0, 0, z.shape().height, z.shape().width, pi - start.plan_index};
            req.canvas = z.shape();
            req.stage = Stage::Refine;
            req.sequence = static_cast<std::uint32_t>(plan_.size() + pi - start.plan_index);
            req.conditioning_id = cfg_.scene.id;
            z = advance(z, predictor.predict(req).noise, pi, req.sequence);
        }
        return z;
    }

    GenerateResult generate(const NoisePredictor& predictor, const StepObserver& observer = {}) const {
        const auto t0 = std::chrono::steady_clock::now();
        GenerateResult res;
        res.report.config_digest = digest_hex(config_digest(cfg_));
        res.stage1 = generate_stage1(predictor, &res.report);
        const Renoised start = upscale_and_renoise(res.stage1);
        TileExecutor executor(cfg_.executor, cfg_.cache, predictor, cfg_.scene.id);
        res.latent = run_stage2(start, executor, res.report, observer);
        res.pixels = decode(res.latent, cfg_.codec);
        res.report.output_digest = digest_hex(canvas_digest(res.latent));
        res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    }

private:
    // One scheduler update of the whole canvas at plan index i.
    Canvas advance(const Canvas& z, const Canvas& eps, std::size_t i, std::uint64_t sequence) const {
        std::optional<Canvas> noise;
        if (plan_.eta > 0.0) {
            auto rng = make_stream(cfg_.seed, StreamKind::SamplerNoise, sequence);
            noise = gaussian_canvas(z.shape(), rng);
        }
        return reverse_step(z, eps, plan_.timesteps[i], plan_.next(i), sched_, plan_.eta, noise ? &*noise : nullptr);
    }

    RunConfig cfg_;
    VarianceSchedule sched_;
    TimestepPlan plan_;
    TileGrid grid_;
};

// Builds the backend from the config, optionally records a trace, and runs
// the whole pipeline.
inline GenerateResult generate(const RunConfig& config, const StepObserver& observer = {}) {
    Pipeline p(config);
    auto targets = make_targets(config);
    auto backend = make_backend(config, p.schedule(), targets);
    if (config.trace_record.empty()) return p.generate(*backend, observer);
    TraceRecorder recorder(*backend, config.trace_record, trace_digest(config));
    auto res = p.generate(recorder, observer);
    recorder.finish();
    return res;
}

}  // namespace supergen
