#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "remove_eval/baselines.hpp"
#include "remove_eval/error.hpp"

using namespace remove_eval;
using testing_support::TempDir;

namespace {

RgbImage with_inverted_region(RgbImage im, int x0, int y0, int side) {
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x)
            for (int c = 0; c < 3; ++c) im.at(x, y, c) = 1.0f - im.at(x, y, c);
    return im;
}

RgbImage quantized_random(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RgbImage im(w, h);
    for (auto& v : im.data) v = static_cast<float>(rng() % 256) / 255.0f;
    return im;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::Validation;
}

class CountingCaptioner final : public Captioner {
public:
    std::string caption(const RgbImage& im) const override {
        ++calls;
        return "caption\twith tab " + std::to_string(im.width);
    }
    mutable std::atomic<int> calls{0};
};

std::vector<std::unique_ptr<LpipsBackend>> lpips_backends() {
    std::vector<std::unique_ptr<LpipsBackend>> v;
    v.push_back(std::make_unique<OnnxLpips>(testing_support::data_dir() + "/tiny_lpips.onnx"));
    v.push_back(std::make_unique<CommandLpips>(testing_support::fake_backend(), "fake"));
    return v;
}

}  // namespace

TEST(Orientation, PerMetricId) {
    EXPECT_EQ(orientation_of("LPIPS"), Orientation::LowerBetter);
    EXPECT_EQ(orientation_of("LPIPS-alex"), Orientation::LowerBetter);
    EXPECT_EQ(orientation_of("MSE"), Orientation::LowerBetter);
    EXPECT_EQ(orientation_of("CS-NR"), Orientation::HigherBetter);
    EXPECT_EQ(orientation_of("CS-FR"), Orientation::HigherBetter);
    EXPECT_EQ(orientation_of("ReMOVE"), Orientation::HigherBetter);
    EXPECT_EQ(orientation_of("ReMOVE-nocrop"), Orientation::HigherBetter);
    EXPECT_EQ(code_of([] { orientation_of("FID"); }), ErrorCode::Configuration);
}

TEST(Mse, IdenticalIsZeroAndReferenceRequired) {
    EditedImage s;
    s.pixels = quantized_random(8, 8, 1);
    EXPECT_EQ(code_of([&] { mse_score(s); }), ErrorCode::ReferenceRequired);
    s.ground_truth = s.pixels;
    const auto r = mse_score(s);
    EXPECT_EQ(r.metric_id, "MSE");
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.orientation, Orientation::LowerBetter);
    s.ground_truth = with_inverted_region(s.pixels, 0, 0, 4);
    EXPECT_GT(mse_score(s).value, 0.0);
}

TEST(Lpips, ConformanceAcrossBackends) {
    const auto a = quantized_random(96, 96, 2);
    const auto b = with_inverted_region(a, 16, 16, 64);
    for (const auto& backend : lpips_backends()) {
        const auto same = lpips_score(*backend, a, a);
        EXPECT_LE(std::abs(same.value), 1e-6) << backend->variant();
        const auto diff = lpips_score(*backend, b, a);
        EXPECT_GT(diff.value, 0.0);
        EXPECT_TRUE(std::isfinite(diff.value));
        EXPECT_NEAR(lpips_score(*backend, b, a).value, diff.value, 1e-8);
        EXPECT_EQ(diff.orientation, Orientation::LowerBetter);
        EXPECT_EQ(diff.metric_id, "LPIPS-" + backend->variant());
        EXPECT_THROW(backend->distance(a, RgbImage(10, 10)), Error);
    }
}

TEST(Lpips, SampleNeedsReference) {
    OnnxLpips backend(testing_support::data_dir() + "/tiny_lpips.onnx");
    EditedImage s;
    s.pixels = quantized_random(32, 32, 3);
    EXPECT_EQ(code_of([&] { lpips_score(backend, s); }), ErrorCode::ReferenceRequired);
    s.ground_truth = s.pixels;
    EXPECT_LE(lpips_score(backend, s).value, 1e-6);
}

TEST(Lpips, MissingWeightsIsLoad) {
    EXPECT_EQ(code_of([] { OnnxLpips("/nonexistent/lpips.onnx"); }), ErrorCode::Load);
}

TEST(Captioning, CommandCaptionerIsDeterministicAndNonEmpty) {
    CommandCaptioner cap(testing_support::fake_backend());
    const auto im = quantized_random(24, 24, 4);
    const auto first = cap.caption(im);
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(cap.caption(im), first);
}

TEST(Captioning, CacheServesSecondCallAndPersists) {
    TempDir dir;
    const auto path = dir.str("captions.tsv");
    CountingCaptioner inner;
    const auto im = quantized_random(10, 10, 5);
    std::string first;
    {
        CaptionCache cache(path);
        CachingCaptioner cap(inner, cache);
        first = cap.caption(im);
        EXPECT_EQ(cap.caption(im), first);
        EXPECT_EQ(inner.calls, 1);
        EXPECT_EQ(cache.size(), 1u);
    }
    CaptionCache reloaded(path);
    CachingCaptioner cap(inner, reloaded);
    EXPECT_EQ(cap.caption(im), first);
    EXPECT_EQ(inner.calls, 1);
    EXPECT_EQ(first.find('\t') != std::string::npos, true);
}

TEST(ClipScore, SelfCaptionBeatsShuffledWords) {
    CommandCaptioner cap(testing_support::fake_backend());
    CommandClipEmbedder clip(testing_support::fake_backend());
    const auto im = quantized_random(32, 32, 6);
    const std::string caption = cap.caption(im);
    std::vector<std::string> words;
    std::string w;
    for (char ch : caption + " ") {
        if (ch == ' ') {
            if (!w.empty()) words.push_back(w);
            w.clear();
        } else {
            w += ch;
        }
    }
    std::reverse(words.begin(), words.end());
    std::string shuffled;
    for (const auto& x : words) shuffled += (shuffled.empty() ? "" : " ") + x;
    ASSERT_NE(shuffled, caption);
    const auto good = clip_score(clip, im, caption, ClipMode::NoReference);
    const auto bad = clip_score(clip, im, shuffled, ClipMode::NoReference);
    EXPECT_GT(good.value, bad.value);
    EXPECT_EQ(good.metric_id, "CS-NR");
    EXPECT_EQ(good.orientation, Orientation::HigherBetter);
    EXPECT_EQ(*good.prompt, caption);
    EXPECT_NEAR(clip_score(clip, im, caption, ClipMode::NoReference).value, good.value, 1e-6);
    EXPECT_LE(good.value, kClipScoreWeight);
}

TEST(ClipScore, FullReferenceUsesGroundTruthCaption) {
    CommandCaptioner cap(testing_support::fake_backend());
    CommandClipEmbedder clip(testing_support::fake_backend());
    EditedImage s;
    s.pixels = testing_support::constant_image(16, 16, 1, 0, 0);
    EXPECT_EQ(code_of([&] { clip_score_full_reference(cap, clip, s); }), ErrorCode::ReferenceRequired);
    s.ground_truth = testing_support::constant_image(16, 16, 0, 0, 1);
    const auto fr = clip_score_full_reference(cap, clip, s);
    EXPECT_EQ(fr.metric_id, "CS-FR");
    EXPECT_EQ(*fr.prompt, cap.caption(*s.ground_truth));
    const auto nr = clip_score_no_reference(cap, clip, s);
    EXPECT_EQ(*nr.prompt, cap.caption(s.pixels));
    EXPECT_GE(nr.value, fr.value);
}

TEST(ClipScore, EmptyPromptIsValidation) {
    CommandClipEmbedder clip(testing_support::fake_backend());
    EXPECT_EQ(code_of([&] { clip_score(clip, RgbImage(4, 4, 0.5f), "", ClipMode::NoReference); }),
              ErrorCode::Validation);
}

TEST(CommandBackend, MissingExecutableIsLoad) {
    EXPECT_EQ(code_of([] { CommandBackend("/nonexistent/backend"); }), ErrorCode::Load);
    CommandCaptioner cap("remove-eval-no-such-program");
    EXPECT_EQ(code_of([&] { cap.caption(RgbImage(2, 2)); }), ErrorCode::Load);
}

TEST(CommandBackend, FailureCarriesDiagnostics) {
    ::setenv("FAKE_BACKEND_FAIL", "1", 1);
    CommandCaptioner cap(testing_support::fake_backend());
    try {
        cap.caption(RgbImage(2, 2));
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EncoderFailure);
        EXPECT_NE(e.detail().find("forced failure"), std::string::npos);
    }
    ::unsetenv("FAKE_BACKEND_FAIL");
}
