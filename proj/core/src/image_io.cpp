#include "remove_eval/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "remove_eval/error.hpp"

namespace remove_eval {

namespace {

const std::vector<int> kPngParams = {cv::IMWRITE_PNG_COMPRESSION, 6};

cv::Mat read_or_throw(const std::string& path, int flags) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::Io, "file not found: '" + path + "'", "load");
    cv::Mat m;
    try {
        m = cv::imread(path, flags);
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::Io, "cannot decode '" + path + "': " + e.what(), "load");
    }
    if (m.empty()) throw Error(ErrorCode::Io, "cannot decode '" + path + "'", "load");
    return m;
}

void write_or_throw(const std::string& path, const cv::Mat& m) {
    bool ok = false;
    try {
        ok = cv::imwrite(path, m, kPngParams);
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::Io, "cannot write '" + path + "': " + e.what(), "write");
    }
    if (!ok) throw Error(ErrorCode::Io, "cannot write '" + path + "'", "write");
}

}  // namespace

RgbImage load_rgb(const std::string& path) {
    const cv::Mat bgr = read_or_throw(path, cv::IMREAD_COLOR);
    RgbImage out(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(row[x][2 - c]) / 255.0f;
        }
    }
    return out;
}

void save_rgb_png(const std::string& path, const RgbImage& image) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(image.at(x, y, c), 0.0f, 1.0f);
                row[x][2 - c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
    write_or_throw(path, bgr);
}

EraseMask load_mask(const std::string& path, std::optional<int> binarize_threshold) {
    const cv::Mat gray = read_or_throw(path, cv::IMREAD_GRAYSCALE);
    EraseMask out(gray.cols, gray.rows);
    for (int y = 0; y < gray.rows; ++y) {
        const auto* row = gray.ptr<std::uint8_t>(y);
        for (int x = 0; x < gray.cols; ++x) {
            const int v = row[x];
            if (binarize_threshold) {
                out.at(x, y) = v >= *binarize_threshold ? 1 : 0;
            } else if (v == 0 || v == 255) {
                out.at(x, y) = v == 255 ? 1 : 0;
            } else {
                throw Error(ErrorCode::Validation,
                            "mask '" + path + "' has value " + std::to_string(v) + " at (" + std::to_string(x) + "," +
                                std::to_string(y) + "); expected 0 or 255 (pass a binarization threshold to accept it)",
                            "load");
            }
        }
    }
    return out;
}

void save_mask_png(const std::string& path, const EraseMask& mask) {
    cv::Mat gray(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y) {
        auto* row = gray.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.width; ++x) row[x] = mask.at(x, y) ? 255 : 0;
    }
    write_or_throw(path, gray);
}

}  // namespace remove_eval
