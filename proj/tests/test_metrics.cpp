#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "supergen/metrics.hpp"

using namespace supergen;

namespace {

Canvas random_canvas(Shape s, std::uint64_t seed, float scale = 1.0f) {
    std::mt19937_64 rng(seed);
    Canvas c = gaussian_canvas(s, rng);
    for (auto& v : c.data()) v *= scale;
    return c;
}

Canvas perturbed(const Canvas& c, std::uint64_t seed, float amount) {
    Canvas out = c;
    const Canvas n = random_canvas(c.shape(), seed, amount);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += n.data()[i];
    return out;
}

ProfileStep step_of(std::size_t step, std::vector<float> in, std::vector<float> out) {
    ProfileStep p;
    p.step = step;
    p.input = std::move(in);
    p.output = std::move(out);
    return p;
}

}  // namespace

TEST(Metrics, IdenticalInputs) {
    const Canvas a = random_canvas(Shape{1, 2, 16, 16}, 1);
    EXPECT_EQ(rel_l1(a, a), 0.0);
    EXPECT_NEAR(cos_sim(a, a), 1.0, 1e-15);
    EXPECT_EQ(psnr(a, a, 1.0), kPsnrCap);
    EXPECT_NEAR(ssim(a, a, 4.0), 1.0, 1e-12);
    const Fidelity f = compare_canvases(a, a);
    EXPECT_TRUE(f.bit_exact);
    EXPECT_EQ(f.psnr, kPsnrCap);
}

TEST(Metrics, KnownValues) {
    const Canvas a(Shape{1, 1, 1, 4}, std::vector<float>{1, 2, 3, 4});
    const Canvas b(Shape{1, 1, 1, 4}, std::vector<float>{1, 2, 3, 6});
    EXPECT_DOUBLE_EQ(rel_l1(a, b), 2.0 / 12.0);
    EXPECT_DOUBLE_EQ(psnr(a, b, 10.0), 10.0 * std::log10(100.0));
    const Canvas x(Shape{1, 1, 1, 2}, std::vector<float>{1, 0});
    const Canvas y(Shape{1, 1, 1, 2}, std::vector<float>{0, 1});
    EXPECT_EQ(cos_sim(x, y), 0.0);
    const Canvas neg(Shape{1, 1, 1, 2}, std::vector<float>{-1, 0});
    EXPECT_EQ(cos_sim(x, neg), -1.0);
}

TEST(Metrics, MatchReferenceImplementations) {
    const Canvas ref = random_canvas(Shape{2, 2, 12, 10}, 2);
    const Canvas cand = perturbed(ref, 3, 0.3f);
    EXPECT_NEAR(rel_l1(cand, ref), oracle::rel_l1(cand.values(), ref.values()), 1e-12);
    EXPECT_NEAR(cos_sim(cand, ref), oracle::cos_sim(cand.values(), ref.values()), 1e-12);
    EXPECT_NEAR(psnr(cand, ref, 5.0), oracle::psnr(cand.values(), ref.values(), 5.0), 1e-9);
    EXPECT_NEAR(ssim(cand, ref, 5.0), oracle::ssim(cand.values(), ref.values(), 4, 12, 10, 5.0), 1e-9);
    SsimOptions o;
    o.window = 3;
    EXPECT_NEAR(ssim(cand, ref, 5.0, o), oracle::ssim(cand.values(), ref.values(), 4, 12, 10, 5.0, 3), 1e-9);
}

TEST(Metrics, SsimSingleWindowClosedForm) {
    const Canvas a(Shape{1, 1, 8, 8}, Space::Latent, 0.2f);
    const Canvas b(Shape{1, 1, 8, 8}, Space::Latent, 0.6f);
    const double c1 = 0.01 * 0.01;
    const double expected = (2 * 0.2 * 0.6 + c1) / (0.2 * 0.2 + 0.6 * 0.6 + c1);
    EXPECT_NEAR(ssim(a, b, 1.0), expected, 1e-7);
}

TEST(Metrics, SymmetryAndMonotonicity) {
    const Canvas ref = random_canvas(Shape{1, 1, 16, 16}, 4);
    const Canvas small = perturbed(ref, 5, 0.05f), large = perturbed(ref, 5, 0.5f);
    EXPECT_DOUBLE_EQ(ssim(small, ref, 6.0), ssim(ref, small, 6.0));
    EXPECT_DOUBLE_EQ(psnr(small, ref, 6.0), psnr(ref, small, 6.0));
    EXPECT_DOUBLE_EQ(cos_sim(small, ref), cos_sim(ref, small));
    EXPECT_GT(psnr(small, ref, 6.0), psnr(large, ref, 6.0));
    EXPECT_GT(ssim(small, ref, 6.0), ssim(large, ref, 6.0));
    EXPECT_LT(rel_l1(small, ref), rel_l1(large, ref));
}

TEST(Metrics, Errors) {
    const Canvas z(Shape{1, 1, 4, 4});
    const Canvas a = random_canvas(Shape{1, 1, 4, 4}, 6);
    EXPECT_THROW(rel_l1(a, z), MetricError);
    EXPECT_THROW(cos_sim(a, z), MetricError);
    EXPECT_THROW(psnr(a, a, 0.0), MetricError);
    EXPECT_THROW(ssim(a, a, 1.0), DimensionError);
    EXPECT_THROW(rel_l1(a, Canvas(Shape{1, 1, 2, 8})), DimensionError);
    const Fidelity f = compare_canvases(a, z);
    EXPECT_TRUE(std::isnan(f.rel_l1));
    EXPECT_TRUE(std::isnan(f.cos));
    EXPECT_FALSE(f.bit_exact);
}

TEST(Profile, ConstantResidualGivesZeroDistance) {
    std::vector<ProfileStep> steps;
    for (std::size_t s = 0; s < 4; ++s) {
        const float shift = float(s);
        steps.push_back(step_of(s, {1 + shift, 2 + shift, -1 + shift}, {3 + shift, 1 + shift, 0 + shift}));
    }
    const auto rows = similarity_profile(steps);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.rel_l1_delta, 0.0);
        EXPECT_NEAR(r.cos_delta, 1.0, 1e-15);
        EXPECT_DOUBLE_EQ(r.k, 1.0);
    }
    EXPECT_EQ(rows[0].step, 1u);
}

TEST(Profile, StationaryInputAndZeroVectors) {
    std::vector<ProfileStep> steps{step_of(0, {1, 1}, {1, 1}), step_of(1, {1, 1}, {2, 2})};
    const auto rows = similarity_profile(steps);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_TRUE(std::isnan(rows[0].k));
    EXPECT_TRUE(std::isnan(rows[0].rel_l1_delta));
    EXPECT_TRUE(std::isnan(rows[0].cos_delta));
    EXPECT_DOUBLE_EQ(rows[0].rel_l1_o, 1.0);
    EXPECT_THROW(similarity_profile({step_of(0, {1}, {1, 2})}), DimensionError);
}

TEST(Profile, CsvLayout) {
    std::ostringstream os;
    write_profile_csv(os, {ProfileRow{3, 0.5, 1, 0.25, 0.75, 2}});
    EXPECT_EQ(os.str(), "step,relL1_O,cos_O,relL1_delta,cos_delta,k\n3,0.5,1,0.25,0.75,2\n");
}

TEST(Profile, FromTraceRecords) {
    auto rec = [](std::uint32_t step, std::uint32_t tile, float v) {
        TraceRecord r;
        r.step = step;
        r.tile = tile;
        r.timestep = 100 - step;
        r.input = Canvas(Shape{1, 1, 1, 2}, Space::Latent, v);
        r.output = Canvas(Shape{1, 1, 1, 2}, Space::Latent, 2 * v);
        return r;
    };
    TraceFile tf;
    tf.records = {rec(5, 1, 2), rec(5, 0, 1), rec(6, 0, 3), rec(6, 1, 4)};
    const auto steps = profile_steps_from_trace(tf);
    ASSERT_EQ(steps.size(), 2u);
    EXPECT_EQ(steps[0].input, (std::vector<float>{1, 1, 2, 2}));
    EXPECT_EQ(steps[1].output, (std::vector<float>{6, 6, 8, 8}));
    EXPECT_EQ(steps[1].timestep, 94);

    TraceFile gap;
    gap.records = {rec(5, 0, 1), rec(7, 0, 1)};
    EXPECT_THROW(profile_steps_from_trace(gap), ReplayError);
    TraceFile hole;
    hole.records = {rec(5, 1, 1)};
    EXPECT_THROW(profile_steps_from_trace(hole), ReplayError);
    TraceFile dup;
    dup.records = {rec(5, 0, 1), rec(5, 0, 1)};
    EXPECT_THROW(profile_steps_from_trace(dup), ReplayError);
}
