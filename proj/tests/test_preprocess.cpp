#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pvdefect/color.hpp"
#include "pvdefect/preprocess.hpp"
#include "test_util.hpp"

using namespace pvdefect;

namespace {

int max_abs_diff(const ImageU8& a, const ImageU8& b) {
    int m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(int(a.data()[i]) - int(b.data()[i])));
    return m;
}

double variance(const ImageU8& img) {
    double s = 0, s2 = 0;
    for (auto v : img.data()) {
        s += v;
        s2 += double(v) * v;
    }
    const double n = static_cast<double>(img.size());
    return s2 / n - (s / n) * (s / n);
}

}  // namespace

TEST(Config, Validation) {
    PreprocessConfig c;
    EXPECT_NO_THROW(c.validate());
    c.bilateral_d = 8;
    EXPECT_ERRC(c.validate(), Errc::InvalidDiameter);
    c = {};
    c.nlm_template = 21;
    EXPECT_ERRC(c.validate(), Errc::WindowShapeError);
    c = {};
    c.gamma = 0;
    EXPECT_ERRC(c.validate(), Errc::NonPositiveGamma);
    c = {};
    c.clahe_clip = 0.5;
    EXPECT_ERRC(c.validate(), Errc::InvalidConfig);
}

TEST(Bilateral, MatchesOracleOnRandomImages) {
    std::mt19937_64 rng(101);
    for (int t = 0; t < 10; ++t) {
        const int ch = t % 2 ? 3 : 1;
        const auto img = oracle::random_image(rng, 8 + rng() % 25, 8 + rng() % 25, ch);
        EXPECT_LE(max_abs_diff(bilateral_filter(img, 9, 75, 75), oracle::bilateral(img, 9, 75, 75)), 1);
        EXPECT_LE(max_abs_diff(bilateral_filter(img, 5, 20, 3), oracle::bilateral(img, 5, 20, 3)), 1);
    }
}

TEST(Bilateral, ImpulseAndConstant) {
    ImageU8 imp(9, 9, 1, 0);
    imp.at(4, 4) = 255;
    EXPECT_LE(std::abs(int(bilateral_filter(imp, 9, 75, 75).at(4, 4)) - int(oracle::bilateral(imp, 9, 75, 75).at(4, 4))), 1);
    ImageU8 c(12, 7, 3, 77);
    EXPECT_EQ(bilateral_filter(c, 9, 75, 75), c);
    EXPECT_ERRC(bilateral_filter(c, 4, 75, 75), Errc::InvalidDiameter);
}

TEST(Bilateral, PreservesStepEdge) {
    ImageU8 step(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) step.at(x, y) = x < 8 ? 0 : 255;
    const auto out = bilateral_filter(step, 9, 75, 75);
    for (int y = 0; y < 16; ++y) {
        EXPECT_LE(out.at(7, y), 51);
        EXPECT_GE(out.at(8, y), 204);
    }
}

TEST(Nlm, MatchesOracleOnRandomImages) {
    std::mt19937_64 rng(202);
    for (int t = 0; t < 6; ++t) {
        const int ch = t % 2 ? 3 : 1;
        const auto img = oracle::random_image(rng, 6 + rng() % 11, 6 + rng() % 11, ch);
        EXPECT_LE(max_abs_diff(nlm_denoise(img, 10, 10, 7, 21), oracle::nlm(img, 10, 10, 7, 21)), 1);
        EXPECT_LE(max_abs_diff(nlm_denoise(img, 30, 15, 3, 7), oracle::nlm(img, 30, 15, 3, 7)), 1);
    }
}

TEST(Nlm, ConstantCheckerboardAndNoise) {
    ImageU8 c(10, 10, 3, 140);
    EXPECT_EQ(nlm_denoise(c, 10, 10, 7, 21), c);

    ImageU8 cb(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) cb.at(x, y) = (x + y) % 2 ? 200 : 40;
    const auto out = nlm_denoise(cb, 10, 10, 3, 7);
    EXPECT_EQ(out.at(6, 6), out.at(8, 8));
    EXPECT_EQ(out.at(7, 6), out.at(9, 8));

    std::mt19937_64 rng(7);
    ImageU8 noisy(32, 32, 1);
    for (auto& v : noisy.data()) v = static_cast<std::uint8_t>(64 + static_cast<int>(rng() % 41) - 20);
    const auto den = nlm_denoise(noisy, 10, 10, 7, 21);
    EXPECT_LT(variance(den), 0.5 * variance(noisy));
    EXPECT_LE(max_abs_diff(den, oracle::nlm(noisy, 10, 10, 7, 21)), 1);
    EXPECT_ERRC(nlm_denoise(c, 10, 10, 7, 7), Errc::WindowShapeError);
}

TEST(Clahe, PlaneMatchesOracle) {
    std::mt19937_64 rng(303);
    for (int t = 0; t < 10; ++t) {
        const int w = 8 + rng() % 25, h = 8 + rng() % 25;
        auto img = oracle::random_image(rng, w, h, 1);
        const std::vector<std::uint8_t> plane(img.data().begin(), img.data().end());
        for (auto [clip, tiles] : {std::pair{2.0, 8}, {1.0, 3}, {4.0, 2}}) {
            oracle::ClaheTrace trace;
            const auto ref = oracle::clahe(plane, w, h, clip, tiles, tiles, &trace);
            const auto got = clahe_plane(plane, w, h, clip, tiles, tiles);
            for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_LE(std::abs(int(got[i]) - int(ref[i])), 1);
            EXPECT_LE(trace.max_bin_after_clip, trace.limit + trace.share + 1);
        }
    }
}

TEST(Clahe, ClipHistogramConservesMass) {
    std::array<long, 256> hist{};
    hist[10] = 900;
    hist[20] = 100;
    const long before = 1000;
    const long excess = clip_histogram(hist, 40);
    EXPECT_EQ(excess, 900 - 40 + 100 - 40);
    long after = 0;
    for (auto v : hist) after += v;
    EXPECT_EQ(after, before);
    for (auto v : hist) EXPECT_LE(v, 40 + (excess + 255) / 256);
}

TEST(Clahe, RampSpanGrowsAndConstantStays) {
    ImageU8 ramp(64, 64, 3);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c) ramp.at(x, y, c) = static_cast<std::uint8_t>(100 + x * 40 / 63);
    const auto out = clahe_luminance(ramp, 2.0, 8, 8);
    const auto gin = to_gray(ramp), gout = to_gray(out);
    auto span = [](const ImageU8& g) {
        auto [lo, hi] = std::minmax_element(g.data().begin(), g.data().end());
        return int(*hi) - int(*lo);
    };
    EXPECT_GT(span(gout), span(gin));

    ImageU8 c(40, 30, 3);
    for (int i = 0; i < 40 * 30; ++i) {
        c.data()[3 * i] = 30;
        c.data()[3 * i + 1] = 120;
        c.data()[3 * i + 2] = 200;
    }
    const auto cc = clahe_luminance(c, 2.0, 8, 8);
    for (int i = 1; i < 40 * 30; ++i)
        for (int k = 0; k < 3; ++k) ASSERT_EQ(cc.data()[3 * i + k], cc.data()[k]);
    EXPECT_ERRC(clahe_luminance(ImageU8(4, 4, 1), 2.0, 8, 8), Errc::ChannelMismatch);
}

TEST(Clahe, LabChromaUntouched) {
    std::mt19937_64 rng(9);
    const auto img = oracle::random_image(rng, 32, 24, 3);
    const auto lab = rgb_to_lab(img);
    const auto eq = clahe_lab(lab, 2.0, 8, 8);
    for (std::size_t i = 0; i < lab.size(); i += 3) {
        ASSERT_EQ(eq.data()[i + 1], lab.data()[i + 1]);
        ASSERT_EQ(eq.data()[i + 2], lab.data()[i + 2]);
    }
}

TEST(Gamma, LutProperties) {
    const auto lut = gamma_lut(1.5);
    EXPECT_EQ(lut[0], 0);
    EXPECT_EQ(lut[255], 255);
    EXPECT_EQ(lut[128], 161);
    EXPECT_EQ(lut[128], static_cast<int>(std::lround(255.0 * std::pow(128.0 / 255.0, 2.0 / 3.0))));
    const auto id = gamma_lut(1.0);
    for (int i = 0; i < 256; ++i) EXPECT_EQ(id[i], i);
    for (double g : {0.2, 0.5, 1.5, 2.2, 7.0}) {
        const auto l = gamma_lut(g);
        EXPECT_EQ(l[0], 0);
        EXPECT_EQ(l[255], 255);
        for (int i = 1; i < 256; ++i) EXPECT_GE(l[i], l[i - 1]);
    }
    EXPECT_ERRC(gamma_lut(0.0), Errc::NonPositiveGamma);
    EXPECT_ERRC(gamma_lut(-1.0), Errc::NonPositiveGamma);
}

TEST(Pipeline, ConstantInShapeAndDeterminism) {
    PreprocessConfig cfg;
    cfg.target_width = 48;
    cfg.target_height = 40;
    ImageU8 c(20, 10, 3);
    for (int i = 0; i < 200; ++i) {
        c.data()[3 * i] = 200;
        c.data()[3 * i + 1] = 90;
        c.data()[3 * i + 2] = 15;
    }
    const auto out = preprocess_pipeline(c, cfg);
    EXPECT_EQ(out.width(), 48);
    EXPECT_EQ(out.height(), 40);
    for (int i = 1; i < 48 * 40; ++i)
        for (int k = 0; k < 3; ++k) ASSERT_EQ(out.data()[3 * i + k], out.data()[k]);

    std::mt19937_64 rng(4);
    const auto img = oracle::random_image(rng, 30, 20, 3);
    EXPECT_EQ(preprocess_pipeline(img, cfg), preprocess_pipeline(img, cfg));
    ImageU8 gray(30, 20, 1, 50);
    const auto gout = preprocess_pipeline(gray, cfg);
    EXPECT_EQ(gout.channels(), 1);
    for (auto v : gout.data()) ASSERT_EQ(v, gout.data()[0]);
}

TEST(Pipeline, DefaultOutputIs640) {
    std::mt19937_64 rng(8);
    const auto img = oracle::random_image(rng, 50, 40, 3);
    PreprocessConfig cfg;
    cfg.nlm_search = 3;
    cfg.nlm_template = 1;
    const auto out = preprocess_pipeline(img, cfg);
    EXPECT_EQ(out.width(), 640);
    EXPECT_EQ(out.height(), 640);
    EXPECT_EQ(out.channels(), 3);
}
