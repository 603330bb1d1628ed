#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "oracles.hpp"
#include "remove_eval/image.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline std::string data_dir() { return REMOVE_EVAL_TEST_DATA_DIR; }
inline std::string fake_backend() { return data_dir() + "/fake_backend.py"; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "remove_eval") {
        std::random_device rd;
        path_ = fs::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    std::string str(const std::string& leaf = {}) const { return leaf.empty() ? path_.string() : (path_ / leaf).string(); }

private:
    fs::path path_;
};

inline remove_eval::RgbImage random_image(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    remove_eval::RgbImage im(w, h);
    for (auto& v : im.data) v = u(rng);
    return im;
}

inline remove_eval::RgbImage constant_image(int w, int h, float r, float g, float b) {
    remove_eval::RgbImage im(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            im.at(x, y, 0) = r;
            im.at(x, y, 1) = g;
            im.at(x, y, 2) = b;
        }
    return im;
}

inline remove_eval::EraseMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
    remove_eval::EraseMask m(w, h);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.at(x, y) = 1;
    return m;
}

inline oracle::Rgb to_oracle(const remove_eval::RgbImage& im) { return {im.width, im.height, im.data}; }
inline oracle::Bits to_oracle(const remove_eval::EraseMask& m) { return {m.width, m.height, m.bits}; }

inline remove_eval::EditedImage sample_of(remove_eval::RgbImage im, std::string id = "s") {
    remove_eval::EditedImage s;
    s.id = std::move(id);
    s.pixels = std::move(im);
    return s;
}

}  // namespace testing_support
