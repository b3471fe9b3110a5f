#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "supergen/cache.hpp"
#include "supergen/predictor.hpp"
#include "supergen/trace.hpp"

using namespace supergen;

namespace {

const Shape kCanvas{1, 4, 64, 64};

std::shared_ptr<const SceneTargets> targets_with(std::vector<Blob> blobs, std::uint64_t seed = 11) {
    auto t = std::make_shared<SceneTargets>();
    t->scene.blobs = std::move(blobs);
    std::mt19937_64 rng(seed);
    t->low = gaussian_canvas(Shape{1, 4, 32, 32}, rng);
    t->high = gaussian_canvas(kCanvas, rng);
    return t;
}

TileRef full_tile() { return TileRef{0, 0, 0, kCanvas.height, kCanvas.width, 0}; }

PredictRequest request(const Canvas& z, int t, const TileRef& ref = full_tile()) {
    PredictRequest r;
    r.tile_latent = &z;
    r.timestep = t;
    r.tile = ref;
    r.canvas = kCanvas;
    return r;
}

// Mean |O_t - O_prev| over an exact trajectory with a fixed noise draw.
double mean_drift(const NoisePredictor& p, const SceneTargets& tg, const VarianceSchedule& s, const Canvas& eps) {
    double total = 0.0;
    int n = 0;
    Canvas prev;
    for (int t = 980; t >= 0; t -= 20) {
        const Canvas z = forward_noise(tg.high, t, eps, s);
        Canvas o = p.predict(request(z, t)).noise;
        if (!prev.empty()) {
            total += mean_norm_diff(o.data(), prev.data(), NormKind::L1);
            ++n;
        }
        prev = std::move(o);
    }
    return total / n;
}

}  // namespace

TEST(Oracle, RecoversInjectedNoise) {
    const auto s = build_schedule(ScheduleKind::Linear, 1000);
    const auto tg = targets_with({});
    std::mt19937_64 rng(1);
    const Canvas eps = gaussian_canvas(kCanvas, rng);
    const OraclePredictor p(s, tg);
    for (int t : {0, 480, 999}) {
        const Canvas z = forward_noise(tg->high, t, eps, s);
        EXPECT_LT(max_abs_diff(p.predict(request(z, t)).noise, eps), t == 0 ? 1e-3 : 2e-5) << t;
    }
}

TEST(Oracle, TileRequestsMatchCanvasRegion) {
    const auto s = build_schedule(ScheduleKind::Linear, 1000);
    const auto tg = targets_with({});
    std::mt19937_64 rng(2);
    const Canvas z = gaussian_canvas(kCanvas, rng);
    const OraclePredictor p(s, tg);
    const Canvas whole = p.predict(request(z, 300)).noise;
    const TileRef ref{3, 48, 40, 32, 32, 0};
    const Canvas part = extract_tile(z, ref);
    EXPECT_TRUE(bit_equal(p.predict(request(part, 300, ref)).noise, extract_tile(whole, ref)));
}

TEST(Oracle, CostLedger) {
    const auto s = build_schedule(ScheduleKind::Linear, 100);
    const auto tg = targets_with({});
    const Canvas z(kCanvas);
    EXPECT_EQ(OraclePredictor(s, tg).predict(request(z, 5)).cost_units, 1.0);
    EXPECT_EQ(OraclePredictor(s, tg, CostModel{2.5, 0.0}).predict(request(z, 5)).cost_units, 2.5);
    PredictRequest empty;
    EXPECT_THROW(OraclePredictor(s, tg).predict(empty), Error);
}

TEST(Drift, ZeroAmplitudeIsOracle) {
    const auto s = build_schedule(ScheduleKind::Linear, 1000);
    const auto tg = targets_with({Blob{0.5, 0.5, 0, 0, 0.2, 1.0}});
    std::mt19937_64 rng(3);
    const Canvas z = gaussian_canvas(kCanvas, rng);
    DriftParams dp;
    dp.amplitude = 0.0;
    const DriftPredictor drift(s, tg, dp, 1);
    const OraclePredictor oracle(s, tg);
    EXPECT_TRUE(bit_equal(drift.predict(request(z, 640)).noise, oracle.predict(request(z, 640)).noise));
}

TEST(Drift, ForegroundDriftsFasterByRatio) {
    const auto s = build_schedule(ScheduleKind::Linear, 1000);
    const auto fg = targets_with({Blob{0.5, 0.5, 0, 0, 100.0, 1.0}});
    const auto bg = targets_with({});
    std::mt19937_64 rng(4);
    const Canvas eps = gaussian_canvas(kCanvas, rng);
    const DriftParams dp;
    const double dfg = mean_drift(DriftPredictor(s, fg, dp, 5), *fg, s, eps);
    const double dbg = mean_drift(DriftPredictor(s, bg, dp, 5), *bg, s, eps);
    EXPECT_NEAR(dfg / dbg, dp.ratio, 0.2 * dp.ratio);
}

TEST(Drift, ForegroundSpreadIsLower) {
    const auto s = build_schedule(ScheduleKind::Linear, 1000);
    const auto fg = targets_with({Blob{0.5, 0.5, 0, 0, 100.0, 1.0}});
    const auto bg = targets_with({});
    std::mt19937_64 rng(5);
    const Canvas eps = gaussian_canvas(kCanvas, rng);
    const DriftParams dp;
    const DriftPredictor pf(s, fg, dp, 6), pb(s, bg, dp, 6);
    for (int t : {900, 500, 100}) {
        const double sf = tile_noise_std(pf.predict(request(forward_noise(fg->high, t, eps, s), t)).noise);
        const double sb = tile_noise_std(pb.predict(request(forward_noise(bg->high, t, eps, s), t)).noise);
        EXPECT_LT(sf, sb) << t;
    }
}

TEST(Drift, ValidatesParameters) {
    const auto s = build_schedule(ScheduleKind::Linear, 100);
    const auto tg = targets_with({});
    DriftParams dp;
    dp.ratio = 0.5;
    EXPECT_THROW(DriftPredictor(s, tg, dp, 0), ConfigError);
    dp = DriftParams{};
    dp.foreground_amplitude = 0.0;
    EXPECT_THROW(DriftPredictor(s, tg, dp, 0), ConfigError);
    const Canvas z(Shape{1, 4, 16, 16});
    PredictRequest r = request(z, 10, TileRef{0, 0, 0, 16, 16, 0});
    r.canvas = Shape{1, 4, 16, 16};
    EXPECT_THROW(DriftPredictor(s, tg, DriftParams{}, 0).predict(r), DimensionError);
}

TEST(Trace, RecordThenReplay) {
    const auto s = build_schedule(ScheduleKind::Linear, 100);
    const auto tg = targets_with({Blob{0.5, 0.5, 0, 0, 0.2, 1.0}});
    const DriftPredictor backend(s, tg, DriftParams{}, 3);
    const auto path = fixtures::temp_path("predictor.sgtr");
    std::mt19937_64 rng(7);
    std::vector<Canvas> inputs;
    std::vector<Canvas> outputs;
    const TileRef a{0, 0, 0, 32, 64, 0}, b{1, 32, 0, 32, 64, 0};
    {
        TraceRecorder rec(backend, path, 42);
        for (std::uint32_t seq = 0; seq < 3; ++seq)
            for (const auto& ref : {b, a}) {
                inputs.push_back(gaussian_canvas(Shape{1, 4, 32, 64}, rng));
                auto r = request(inputs.back(), 90 - int(seq) * 10, ref);
                r.sequence = seq;
                outputs.push_back(rec.predict(r).noise);
            }
        rec.finish();
        EXPECT_EQ(rec.records(), 6u);
    }
    const TraceFile tf = read_trace(path);
    EXPECT_EQ(tf.digest, 42u);
    ASSERT_EQ(tf.records.size(), 6u);
    EXPECT_EQ(tf.records[0].tile, 0u);
    EXPECT_EQ(tf.records[1].tile, 1u);

    const TraceReplayer replay(path, 42);
    EXPECT_EQ(replay.size(), 6u);
    for (std::uint32_t seq = 0; seq < 3; ++seq)
        for (std::size_t k = 0; k < 2; ++k) {
            const std::size_t i = seq * 2 + k;
            auto r = request(inputs[i], 90 - int(seq) * 10, k == 0 ? b : a);
            r.sequence = seq;
            EXPECT_TRUE(bit_equal(replay.predict(r).noise, outputs[i]));
        }

    EXPECT_THROW(TraceReplayer(path, 43), ReplayError);
    auto r = request(inputs[0], 90, b);
    r.sequence = 7;
    EXPECT_THROW(replay.predict(r), ReplayError);
    r.sequence = 0;
    r.timestep = 91;
    EXPECT_THROW(replay.predict(r), ReplayError);
    r.timestep = 90;
    Canvas altered = inputs[0];
    altered.data()[0] += 1.0f;
    r.tile_latent = &altered;
    EXPECT_THROW(replay.predict(r), ReplayError);
}

TEST(Trace, TruncationAndBadFiles) {
    const auto path = fixtures::temp_path("broken.sgtr");
    {
        std::ofstream os(path, std::ios::binary);
        write_trace_header(os, 1);
        TraceRecord rec;
        rec.input = Canvas(Shape{1, 1, 2, 2});
        rec.output = Canvas(Shape{1, 1, 2, 2});
        write_trace_record(os, rec);
        os.write("\x01\x00", 2);
    }
    EXPECT_THROW(read_trace(path), ReplayError);
    EXPECT_THROW(TraceReplayer{path}, ReplayError);
    {
        std::ofstream os(path, std::ios::binary);
        os << "nope";
    }
    EXPECT_THROW(read_trace(path), ReplayError);
    EXPECT_THROW(TraceReplayer(fixtures::temp_path("absent.sgtr")), ReplayError);
}
