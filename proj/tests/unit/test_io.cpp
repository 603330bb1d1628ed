#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "helpers.hpp"
#include "remove_eval/digest.hpp"
#include "remove_eval/error.hpp"
#include "remove_eval/image_io.hpp"

using namespace remove_eval;
using testing_support::TempDir;

TEST(ErrorType, MessageNamesStageAndCode) {
    const Error e(ErrorCode::DegenerateMask, "mask covers entire image at patch resolution", "segregate");
    EXPECT_EQ(std::string(e.what()), "[segregate] degenerate mask: mask covers entire image at patch resolution");
    const Error plain(ErrorCode::Io, "x");
    EXPECT_EQ(plain.stage(), "");
    EXPECT_EQ(plain.with_stage("load").stage(), "load");
    EXPECT_EQ(e.with_stage("other").stage(), "segregate");
}

TEST(Digest, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, ImageContentDigest) {
    RgbImage a(3, 2, 0.5f), b(3, 2, 0.5f), c(2, 3, 0.5f);
    EXPECT_EQ(image_content_digest(a), image_content_digest(b));
    EXPECT_NE(image_content_digest(a), image_content_digest(c));
    b.at(1, 1, 1) = 0.9f;
    EXPECT_NE(image_content_digest(a), image_content_digest(b));
}

TEST(ImageIo, PngRoundTripOfEightBitLevels) {
    TempDir dir;
    std::mt19937_64 rng(1);
    RgbImage im(17, 9);
    for (auto& v : im.data) v = static_cast<float>(rng() % 256) / 255.0f;
    save_rgb_png(dir.str("a.png"), im);
    const auto back = load_rgb(dir.str("a.png"));
    ASSERT_EQ(back.width, 17);
    ASSERT_EQ(back.height, 9);
    for (std::size_t i = 0; i < im.data.size(); ++i) EXPECT_EQ(back.data[i], im.data[i]);
}

TEST(ImageIo, ChannelOrderIsRgb) {
    TempDir dir;
    save_rgb_png(dir.str("red.png"), testing_support::constant_image(2, 2, 1, 0, 0));
    const auto back = load_rgb(dir.str("red.png"));
    EXPECT_EQ(back.at(0, 0, 0), 1.0f);
    EXPECT_EQ(back.at(0, 0, 2), 0.0f);
}

TEST(ImageIo, MissingFileIsIo) {
    try {
        load_rgb("/nonexistent/x.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}

TEST(MaskIo, RoundTrip) {
    TempDir dir;
    EraseMask m(5, 4);
    m.at(1, 2) = 1;
    m.at(4, 3) = 1;
    save_mask_png(dir.str("m.png"), m);
    EXPECT_EQ(load_mask(dir.str("m.png")), m);
}

TEST(MaskIo, IntermediateValuesNeedThreshold) {
    TempDir dir;
    RgbImage grey(4, 1, 0.0f);
    for (int c = 0; c < 3; ++c) {
        grey.at(1, 0, c) = 100.0f / 255.0f;
        grey.at(2, 0, c) = 200.0f / 255.0f;
        grey.at(3, 0, c) = 1.0f;
    }
    save_rgb_png(dir.str("g.png"), grey);
    try {
        load_mask(dir.str("g.png"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Validation);
    }
    const auto m = load_mask(dir.str("g.png"), 128);
    EXPECT_EQ(m.bits, (std::vector<std::uint8_t>{0, 0, 1, 1}));
}
