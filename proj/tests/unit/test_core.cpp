#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "remove_eval/core.hpp"
#include "remove_eval/error.hpp"

using namespace remove_eval;

namespace {

PatchEmbeddingGrid grid_from(int rows, int cols, int dim, std::mt19937_64& rng) {
    PatchEmbeddingGrid g{rows, cols, dim, 16, "test", {}};
    std::normal_distribution<double> n(0.0, 1.0);
    g.features.resize(static_cast<std::size_t>(rows) * cols * dim);
    for (auto& v : g.features) v = n(rng);
    return g;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::Validation;
}

}  // namespace

TEST(Segregate, TwoByTwoSingleMaskedCell) {
    PatchEmbeddingGrid g{2, 2, 1, 16, "t", {0.0, 1.0, 2.0, 3.0}};
    PatchMask m(2, 2);
    m.at(0, 0) = 1;
    const auto p = segregate_features(g, m);
    ASSERT_EQ(p.masked.size(), 1u);
    ASSERT_EQ(p.unmasked.size(), 3u);
    EXPECT_EQ(p.masked[0][0], 0.0);
    EXPECT_EQ(p.unmasked[0][0], 1.0);
    EXPECT_EQ(p.unmasked[1][0], 2.0);
    EXPECT_EQ(p.unmasked[2][0], 3.0);
}

TEST(Segregate, AllOnesIsDegenerate) {
    PatchEmbeddingGrid g{2, 2, 1, 16, "t", {0, 1, 2, 3}};
    PatchMask m(2, 2, 1);
    try {
        segregate_features(g, m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateMask);
        EXPECT_EQ(e.detail(), "mask covers entire image at patch resolution");
    }
}

TEST(Segregate, AllZerosIsDegenerate) {
    PatchEmbeddingGrid g{2, 2, 1, 16, "t", {0, 1, 2, 3}};
    PatchMask m(2, 2, 0);
    try {
        segregate_features(g, m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateMask);
        EXPECT_EQ(e.detail(), "mask covers no patch at patch resolution");
    }
}

TEST(Segregate, ShapeMismatchIsConfiguration) {
    PatchEmbeddingGrid g{2, 2, 1, 16, "t", {0, 1, 2, 3}};
    PatchMask m(3, 2, 0);
    m.at(0, 0) = 1;
    EXPECT_EQ(code_of([&] { segregate_features(g, m); }), ErrorCode::Configuration);
}

TEST(Segregate, ThirteenOf4096CountsMatchBruteForce) {
    std::mt19937_64 rng(7);
    const auto g = grid_from(64, 64, 3, rng);
    PatchMask m(64, 64);
    std::vector<int> cells(4096);
    for (int i = 0; i < 4096; ++i) cells[i] = i;
    std::shuffle(cells.begin(), cells.end(), rng);
    for (int i = 0; i < 13; ++i) m.bits[cells[i]] = 1;
    std::size_t ones = 0;
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) ones += m.at(c, r);
    const auto p = segregate_features(g, m);
    EXPECT_EQ(p.masked.size(), 13u);
    EXPECT_EQ(p.masked.size(), ones);
    EXPECT_EQ(p.unmasked.size(), 4083u);
    EXPECT_EQ(p.masked.size() + p.unmasked.size(), g.cell_count());
}

TEST(MeanFeatures, ArithmeticMean) {
    FeaturePartition p;
    p.masked.push({1.0, 0.0});
    p.masked.push({0.0, 1.0});
    p.unmasked.push({2.0, 4.0});
    const auto [m, u] = mean_features(p);
    EXPECT_EQ(m, (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(u, (std::vector<double>{2.0, 4.0}));
}

TEST(MeanFeatures, RandomVectorsMatchSummedOracle) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5, 5);
    FeatureSet s(3);
    double sum[3] = {0, 0, 0};
    for (int i = 0; i < 5; ++i) {
        const double v[3] = {u(rng), u(rng), u(rng)};
        s.push(std::span<const double>(v, 3));
        for (int k = 0; k < 3; ++k) sum[k] += v[k];
    }
    const auto m = mean_vector(s);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(m[k], sum[k] / 5.0, 1e-12);
}

TEST(MeanFeatures, EmptySetIsDegenerate) {
    FeatureSet empty(2);
    EXPECT_EQ(code_of([&] { mean_vector(empty); }), ErrorCode::DegenerateMask);
}

TEST(FeatureSet, RejectsDimensionChange) {
    FeatureSet s;
    s.push({1.0, 2.0});
    EXPECT_THROW(s.push({1.0}), Error);
}

TEST(Cosine, Examples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
    EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{1, 0}), 0.7071067811865475, 1e-15);
}

TEST(Cosine, ZeroVectorRaises) {
    EXPECT_EQ(code_of([] { cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}); }),
              ErrorCode::ZeroVector);
}

TEST(Cosine, StaysInRange) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(8), b(8);
        for (auto& v : a) v = n(rng);
        for (auto& v : b) v = n(rng);
        const double c = cosine_similarity(a, b);
        EXPECT_GE(c, -1.0);
        EXPECT_LE(c, 1.0);
        EXPECT_EQ(cosine_similarity(a, a), 1.0);
    }
}

TEST(CoreProperties, PermutationInvariance) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto g = grid_from(8, 8, 4, rng);
        PatchMask m(8, 8);
        for (auto& b : m.bits) b = static_cast<std::uint8_t>(rng() % 3 == 0);
        m.bits[0] = 1;
        m.bits[1] = 0;
        const auto p = segregate_features(g, m);
        const auto [mm, mu] = mean_features(p);
        const double base = cosine_similarity(mm, mu);

        // Same cells, shuffled order.
        std::vector<int> order(64);
        for (int i = 0; i < 64; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        FeaturePartition q{FeatureSet(4), FeatureSet(4)};
        for (int i : order) (m.bits[i] ? q.masked : q.unmasked).push(g.at(i / 8, i % 8));
        const auto [qm, qu] = mean_features(q);
        EXPECT_NEAR(cosine_similarity(qm, qu), base, 1e-12);
    }
}

TEST(CoreProperties, ComplementSymmetry) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 20; ++t) {
        const auto g = grid_from(6, 6, 5, rng);
        PatchMask m(6, 6);
        for (auto& b : m.bits) b = static_cast<std::uint8_t>(rng() & 1);
        m.bits[0] = 1;
        m.bits[1] = 0;
        PatchMask inv = m;
        for (auto& b : inv.bits) b = static_cast<std::uint8_t>(1 - b);
        const auto [a1, b1] = mean_features(segregate_features(g, m));
        const auto [a2, b2] = mean_features(segregate_features(g, inv));
        EXPECT_NEAR(cosine_similarity(a1, b1), cosine_similarity(a2, b2), 1e-12);
    }
}

TEST(MetricConfig, ValidatesRanges) {
    MetricConfig c;
    EXPECT_NO_THROW(c.validate());
    auto bad = [](auto mutate) {
        MetricConfig c;
        mutate(c);
        try {
            c.validate();
        } catch (const Error& e) {
            return e.code() == ErrorCode::Configuration;
        }
        return false;
    };
    EXPECT_TRUE(bad([](MetricConfig& c) { c.target_mask_fraction = 0.0; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.target_mask_fraction = 1.0; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.target_mask_fraction = 0.6; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.fraction_lower = 0.6; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.patch_mask_threshold = 0.0; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.patch_mask_threshold = 1.5; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.input_side = 1000; }));
    EXPECT_TRUE(bad([](MetricConfig& c) { c.patch_size = 0; }));
}

TEST(ConfigDigest, StableAndSensitive) {
    MetricConfig c;
    const auto d = config_digest(c, "mock-pooling");
    EXPECT_EQ(d.size(), 16u);
    EXPECT_EQ(d, config_digest(c, "mock-pooling"));
    EXPECT_NE(d, config_digest(c, "sam-vit-h"));
    EXPECT_NE(d, config_digest(c, "mock-pooling", "dot"));
    MetricConfig c2 = c;
    c2.use_crop = false;
    EXPECT_NE(d, config_digest(c2, "mock-pooling"));
    c2 = c;
    c2.patch_mask_threshold = 0.25;
    EXPECT_NE(d, config_digest(c2, "mock-pooling"));
}
