#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "supergen/supergen.hpp"

using namespace supergen;

namespace {

RunConfig small_config() {
    RunConfig c;
    c.scene.id = "small";
    c.scene.seed = 3;
    c.scene.frames = 2;
    c.scene.channels = 2;
    c.low_height = 16;
    c.low_width = 24;
    c.height = 32;
    c.width = 48;
    c.tile_height = 16;
    c.tile_width = 16;
    c.steps = 20;
    c.renoise_steps = 15;
    c.seed = 5;
    return c;
}

}  // namespace

TEST(Pipeline, StageOneRecoversLowTargetWithOracle) {
    const RunConfig c = small_config();
    const Pipeline p(c);
    const auto targets = make_targets(c);
    const OraclePredictor oracle(p.schedule(), targets);
    RunReport report;
    const Canvas low = p.generate_stage1(oracle, &report);
    EXPECT_LT(max_abs_diff(low, targets->low), 1e-4);
    EXPECT_EQ(report.stage1_calls, 20u);
    EXPECT_EQ(report.stage1_steps, 20u);
}

TEST(Pipeline, RenoiseComposesCodecUpscaleAndForwardNoise) {
    for (std::size_t factor : {1u, 2u}) {
        RunConfig c = small_config();
        if (factor > 1) c.codec = Codec{CodecKind::AvgPool, factor};
        const Pipeline p(c);
        std::mt19937_64 rng(8);
        const Canvas low = gaussian_canvas(c.low_shape(), rng);
        const Renoised r = p.upscale_and_renoise(low);
        EXPECT_EQ(r.plan_index, 5u);
        EXPECT_EQ(r.t_start, p.plan().timesteps[5]);
        const Canvas up = encode(bicubic_resize(decode(low, c.codec), 32 * factor, 48 * factor), c.codec);
        auto stream = make_stream(c.seed, StreamKind::Stage2Renoise);
        const Canvas eps = gaussian_canvas(c.high_shape(), stream);
        EXPECT_TRUE(bit_equal(r.latent, forward_noise(up, r.t_start, eps, p.schedule()))) << factor;
        EXPECT_THROW(p.upscale_and_renoise(Canvas(c.high_shape())), ConfigError);
    }
}

TEST(Pipeline, RenoiseDepthBoundaries) {
    RunConfig c = small_config();
    c.renoise_steps = 20;
    EXPECT_EQ(Pipeline(c).upscale_and_renoise(Canvas(c.low_shape())).t_start, Pipeline(c).plan().timesteps.front());
    c.renoise_steps = 1;
    const Pipeline p(c);
    EXPECT_EQ(p.upscale_and_renoise(Canvas(c.low_shape())).t_start, 0);
    const auto targets = make_targets(c);
    const auto res = p.generate(OraclePredictor(p.schedule(), targets));
    EXPECT_EQ(res.report.steps.size(), 1u);
    c.renoise_steps = 0;
    EXPECT_THROW(Pipeline{c}, ConfigError);
}

TEST(Pipeline, TiledStageTwoMatchesUntiledForOracle) {
    const RunConfig c = small_config();
    const Pipeline p(c);
    const auto targets = make_targets(c);
    const OraclePredictor oracle(p.schedule(), targets);
    const Renoised start = p.upscale_and_renoise(p.generate_stage1(oracle));
    TileExecutor ex(c.executor, c.cache, oracle);
    RunReport report;
    const Canvas tiled = p.run_stage2(start, ex, report);
    EXPECT_TRUE(bit_equal(tiled, p.sample_untiled(start, oracle)));
    EXPECT_LT(max_abs_diff(tiled, targets->high), 1e-4);
    EXPECT_EQ(report.steps.size(), 15u);
    EXPECT_EQ(report.n_tiles, 6u);
    EXPECT_EQ(report.totals.predictor_calls, 15u * 6u);
    EXPECT_EQ(report.totals.gathers, 15u);
}

TEST(Pipeline, DeterministicAcrossRunsAndWorkers) {
    RunConfig c = small_config();
    c.predictor = PredictorKind::Drift;
    c.cache.enabled = true;
    const auto a = generate(c);
    const auto b = generate(c);
    EXPECT_EQ(a.report.output_digest, b.report.output_digest);
    c.executor.workers = 4;
    c.executor.rebalance = true;
    c.executor.mode = ExecutorMode::Threaded;
    const auto d = generate(c);
    EXPECT_EQ(d.report.output_digest, a.report.output_digest);
    EXPECT_EQ(d.report.config_digest, a.report.config_digest);
    EXPECT_EQ(a.report.totals.predictor_calls + a.report.totals.skipped_tiles, 15u * 6u);
    EXPECT_GT(a.report.totals.skipped_tiles, 0u);
}

TEST(Pipeline, StochasticSamplingIsSeeded) {
    RunConfig c = small_config();
    c.eta = 0.5;
    const auto a = generate(c), b = generate(c);
    EXPECT_EQ(a.report.output_digest, b.report.output_digest);
    c.eta = 0.0;
    EXPECT_NE(generate(c).report.output_digest, a.report.output_digest);
    c.eta = 0.5;
    c.seed = 6;
    EXPECT_NE(generate(c).report.output_digest, a.report.output_digest);
}

TEST(Pipeline, ObserverSeesEveryStep) {
    const RunConfig c = small_config();
    std::vector<int> timesteps;
    generate(c, [&](std::size_t step, int t, const Canvas& z, const Canvas& noise) {
        EXPECT_EQ(step, timesteps.size());
        EXPECT_EQ(z.shape(), c.high_shape());
        EXPECT_EQ(noise.shape(), c.high_shape());
        timesteps.push_back(t);
    });
    ASSERT_EQ(timesteps.size(), 15u);
    EXPECT_EQ(timesteps.back(), 0);
    EXPECT_TRUE(std::is_sorted(timesteps.rbegin(), timesteps.rend()));
}

TEST(Pipeline, TraceRecordAndReplayReproduce) {
    RunConfig c = small_config();
    c.predictor = PredictorKind::Drift;
    c.cache.enabled = true;
    c.trace_record = fixtures::temp_path("pipeline.sgtr").string();
    const auto rec = generate(c);
    RunConfig r = c;
    r.trace_record.clear();
    r.predictor = PredictorKind::Replay;
    r.trace_replay = c.trace_record;
    const auto rep = generate(r);
    EXPECT_EQ(rep.report.output_digest, rec.report.output_digest);
    r.steps = 25;
    r.renoise_steps = 15;
    EXPECT_THROW(generate(r), ReplayError);
}

TEST(Pipeline, DriftProfileResidualsMoreSimilarMidRun) {
    RunConfig c = small_config();
    c.predictor = PredictorKind::Drift;
    c.steps = 50;
    c.renoise_steps = 45;
    std::vector<ProfileStep> steps;
    generate(c, [&](std::size_t step, int t, const Canvas& z, const Canvas& noise) {
        steps.push_back({step, t, z.values(), noise.values()});
    });
    const auto rows = similarity_profile(steps);
    ASSERT_EQ(rows.size(), 44u);
    double early = 0.0, mid = 0.0;
    for (std::size_t i = 0; i < 3; ++i) early += rows[i].cos_delta / 3.0;
    for (std::size_t i = 15; i < 30; ++i) mid += rows[i].cos_delta / 15.0;
    EXPECT_GT(mid, early);
}
