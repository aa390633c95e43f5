#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mggan/metrics.hpp"

using namespace mggan;

namespace {

MatrixF noise_image(Index side, double lo, double hi, Rng& rng)
{
    MatrixF m(side, side);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(lo, hi));
    return m;
}

// Smooth structured image in [-0.5, 0.5].
MatrixF pattern_image(Index side)
{
    MatrixF m(side, side);
    for (Index r = 0; r < side; ++r)
        for (Index c = 0; c < side; ++c)
            m(r, c) = static_cast<float>(0.3 * std::sin(r * 0.15) * std::cos(c * 0.11) + 0.2 * std::sin((r + c) * 0.05));
    return m;
}

} // namespace

TEST(ModeCoverage, ExactSamplesMatchRadialCdf)
{
    const auto spec = ring_mixture(8, 2.0, 0.01);
    Rng rng(1);
    const auto r = mode_coverage(sample_mixture(spec, 100000, rng), spec);
    EXPECT_EQ(r.modes_captured(), 8);
    EXPECT_NEAR(r.high_quality_ratio, 1.0 - std::exp(-4.5), 0.003);
    EXPECT_NEAR(r.balance_entropy, std::log(8.0), 1e-3);
    EXPECT_EQ(r.sample_count, 100000);
}

TEST(ModeCoverage, CollapsedToOneCenter)
{
    const auto spec = ring_mixture(8, 2.0, 0.01);
    MatrixF x(500, 2);
    x.col(0).setConstant(static_cast<float>(spec.centers[3][0]));
    x.col(1).setConstant(static_cast<float>(spec.centers[3][1]));
    const auto r = mode_coverage(x, spec);
    EXPECT_EQ(r.modes_captured(), 1);
    EXPECT_EQ(r.captured[0], 3);
    EXPECT_EQ(r.balance_entropy, 0.0);
    EXPECT_EQ(r.high_quality_ratio, 1.0);
}

TEST(ModeCoverage, FarAwayBoxCapturesNothing)
{
    const auto spec = ring_mixture(8, 2.0, 0.01);
    Rng rng(2);
    MatrixF x(1000, 2);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.uniform(50.0, 60.0));
    const auto r = mode_coverage(x, spec);
    EXPECT_EQ(r.modes_captured(), 0);
    EXPECT_EQ(r.high_quality_ratio, 0.0);
    EXPECT_EQ(r.assigned(), 0);
}

TEST(ModeCoverage, CaptureFloorIsOnePercent)
{
    const auto spec = ring_mixture(2, 1.0, 0.01);
    MatrixF x(200, 2);
    for (Index i = 0; i < 200; ++i) {
        const auto& c = spec.centers[i < 198 ? 0 : 1];
        x(i, 0) = static_cast<float>(c[0]);
        x(i, 1) = static_cast<float>(c[1]);
    }
    // 2 of 200 samples = 1% reaches the floor.
    EXPECT_EQ(mode_coverage(x, spec).modes_captured(), 2);
    x.row(199) << 40.0f, 40.0f;
    const auto r = mode_coverage(x, spec);
    EXPECT_EQ(r.modes_captured(), 1);
    // Entropy covers captured modes only.
    EXPECT_EQ(r.balance_entropy, 0.0);
    EXPECT_LE(r.assigned(), r.sample_count);
}

TEST(ModeCoverage, PermutationInvariance)
{
    const auto spec = ring_mixture(8, 2.0, 0.35);
    Rng rng(3);
    MatrixF x = sample_mixture(spec, 3000, rng);
    for (Index i = 0; i < 300; ++i) x.row(i) *= 1.6f;
    const auto base = mode_coverage(x, spec);

    MatrixF shuffled = x;
    for (Index i = shuffled.rows() - 1; i > 0; --i)
        shuffled.row(i).swap(shuffled.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)))));
    const auto rs = mode_coverage(shuffled, spec, 3.0 * spec.stddev);
    EXPECT_EQ(rs.counts, base.counts);
    EXPECT_EQ(rs.high_quality_ratio, base.high_quality_ratio);
    EXPECT_NEAR(rs.balance_entropy, base.balance_entropy, 1e-12);

    MixtureSpec reversed = spec;
    std::reverse(reversed.centers.begin(), reversed.centers.end());
    const auto rr = mode_coverage(x, reversed);
    std::vector<Index> counts = rr.counts;
    std::reverse(counts.begin(), counts.end());
    EXPECT_EQ(counts, base.counts);
    EXPECT_EQ(rr.modes_captured(), base.modes_captured());
    EXPECT_NEAR(rr.balance_entropy, base.balance_entropy, 1e-12);
}

TEST(ModeCoverage, NearestModeClassifier)
{
    const auto spec = ring_mixture(4, 1.0, 0.1);
    MatrixF x(4, 2);
    x << 0.9f, 0.1f, 0.1f, 0.8f, -3.0f, 0.0f, 0.0f, -0.2f;
    EXPECT_EQ(nearest_mode(x, spec), (std::vector<int>{0, 1, 2, 3}));
}

TEST(MsSsim, SelfSimilarityIsOne)
{
    Rng rng(4);
    const MatrixF a = noise_image(176, -1, 1, rng);
    EXPECT_NEAR(ms_ssim(a, a), 1.0, 1e-6);
    const MatrixF p = pattern_image(200);
    EXPECT_NEAR(ms_ssim(p, p), 1.0, 1e-6);
}

TEST(MsSsim, Symmetric)
{
    Rng rng(5);
    const MatrixF a = pattern_image(176);
    const MatrixF b = MatrixF(a + noise_image(176, -0.2, 0.2, rng));
    EXPECT_NEAR(ms_ssim(a, b), ms_ssim(b, a), 1e-6);
}

TEST(MsSsim, ConstantImagesMatchClosedForm)
{
    // Raw -0.5 and 0.5 map to 0.25 and 0.75. Zero variances make every
    // contrast-structure term C2 / C2 = 1, leaving the coarsest luminance term.
    const MatrixF a = MatrixF::Constant(176, 176, -0.5f);
    const MatrixF b = MatrixF::Constant(176, 176, 0.5f);
    const MsSsimParams p;
    const double mx = 0.25, my = 0.75;
    const double lum = (2 * mx * my + p.c1()) / (mx * mx + my * my + p.c1());
    const double oracle = std::pow(lum, p.weights.back());
    EXPECT_NEAR(ms_ssim(a, b, p), oracle, 1e-6);
}

TEST(MsSsim, TooSmallOrMismatchedIsArgumentError)
{
    const MatrixF a = MatrixF::Zero(175, 176);
    try {
        ms_ssim(a, a);
        FAIL() << "expected ArgumentError";
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("176"), std::string::npos);
    }
    EXPECT_THROW(ms_ssim(MatrixF(MatrixF::Zero(176, 176)), MatrixF(MatrixF::Zero(180, 176))), ArgumentError);
    // Fewer scales accept smaller images.
    EXPECT_NO_THROW(ms_ssim(MatrixF(MatrixF::Zero(44, 44)), MatrixF(MatrixF::Zero(44, 44)), MsSsimParams::with_scales(3)));
}

TEST(MsSsim, WithScalesRenormalizes)
{
    const auto p = MsSsimParams::with_scales(3);
    EXPECT_EQ(p.scales(), 3);
    EXPECT_NEAR(p.weights[0] + p.weights[1] + p.weights[2], 1.0, 1e-12);
    EXPECT_EQ(p.min_side(), 44);
    EXPECT_THROW(MsSsimParams::with_scales(0), ArgumentError);
    EXPECT_THROW(MsSsimParams::with_scales(6), ArgumentError);
}

TEST(MsSsim, ShiftInvarianceOnMatchedImages)
{
    Rng rng(6);
    const MatrixF a = pattern_image(176);
    const MatrixF b = MatrixF(a + noise_image(176, -0.05, 0.05, rng));
    const MatrixF shift = MatrixF::Constant(176, 176, 0.2f);
    EXPECT_NEAR(ms_ssim(a, b), ms_ssim(MatrixF(a + shift), MatrixF(b + shift)), 1e-4);
}

TEST(MsSsim, MonotoneInNoiseOnAverage)
{
    const MatrixF b = pattern_image(176);
    const double stds[] = {0.0, 0.05, 0.1, 0.2, 0.4};
    double prev = INFINITY;
    for (double s : stds) {
        double mean = 0.0;
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            Rng rng(100 + seed);
            MatrixF a = b;
            for (Index i = 0; i < a.size(); ++i) a.data()[i] += static_cast<float>(s * rng.normal());
            mean += ms_ssim(a, b) / 4.0;
        }
        EXPECT_LE(mean, prev + 1e-12) << "noise std " << s;
        prev = mean;
    }
}

TEST(PairwiseMsSsim, IdenticalSetIsOne)
{
    Rng rng(7);
    const MatrixF a = noise_image(176, -1, 1, rng);
    const std::vector<MatrixF> set(5, a);
    EXPECT_NEAR(pairwise_ms_ssim(set, {}, rng), 1.0, 1e-6);
}

TEST(PairwiseMsSsim, TwoImagesEqualSinglePair)
{
    Rng rng(8);
    const MatrixF a = pattern_image(176);
    const MatrixF b = noise_image(176, -1, 1, rng);
    EXPECT_DOUBLE_EQ(pairwise_ms_ssim({a, b}, {}, rng), ms_ssim(a, b));
    EXPECT_THROW(pairwise_ms_ssim({a}, {}, rng), ArgumentError);
}

TEST(PairwiseMsSsim, IndependentNoiseIsDiverse)
{
    Rng rng(9);
    std::vector<MatrixF> set;
    for (int i = 0; i < 100; ++i) set.push_back(noise_image(176, -1, 1, rng));
    const double mean = pairwise_ms_ssim(set, {}, rng);
    EXPECT_LT(mean, 0.2);
    RecordProperty("mean_ms_ssim", std::to_string(mean));
    std::cout << "pairwise MS-SSIM of 100 noise images: " << mean << "\n";
}
