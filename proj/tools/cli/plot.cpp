#include "plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "remove_eval/error.hpp"

namespace remove_eval::cli {

namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 500;
constexpr int kLeft = 80, kRight = 30, kTop = 50, kBottom = 60;

const cv::Scalar kPalette[] = {
    {180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214}, {189, 103, 148}, {75, 86, 140},
};

void text(cv::Mat& img, const std::string& s, cv::Point at, double scale = 0.5) {
    cv::putText(img, s, at, cv::FONT_HERSHEY_SIMPLEX, scale, {0, 0, 0}, 1, cv::LINE_AA);
}

}  // namespace

void plot_series(const std::string& path, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<Series>& series) {
    std::size_t n = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) {
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (n == 0 || !std::isfinite(lo)) throw Error(ErrorCode::Validation, "nothing to plot", "plot");
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    cv::Mat img(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
    const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](std::size_t i) {
        const double t = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
        return kLeft + static_cast<int>(std::lround(t * pw));
    };
    auto py = [&](double v) { return kTop + static_cast<int>(std::lround((hi - v) / (hi - lo) * ph)); };

    cv::rectangle(img, {kLeft, kTop}, {kLeft + pw, kTop + ph}, {0, 0, 0}, 1);
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        const int y = py(v);
        cv::line(img, {kLeft - 4, y}, {kLeft, y}, {0, 0, 0}, 1);
        cv::line(img, {kLeft + 1, y}, {kLeft + pw - 1, y}, {225, 225, 225}, 1);
        text(img, fmt::format("{:.3f}", v), {8, y + 5}, 0.45);
    }
    const std::size_t step = std::max<std::size_t>(1, n / 10);
    for (std::size_t i = 0; i < n; i += step) {
        text(img, std::to_string(i + 1), {px(i) - 6, kTop + ph + 20}, 0.45);
    }
    text(img, title, {kLeft, 30}, 0.6);
    text(img, x_label, {kLeft + pw / 2 - 60, kHeight - 15});
    text(img, y_label, {8, kTop - 10}, 0.45);

    for (std::size_t s = 0; s < series.size(); ++s) {
        const cv::Scalar color = kPalette[s % std::size(kPalette)];
        std::optional<cv::Point> prev;
        for (std::size_t i = 0; i < series[s].values.size(); ++i) {
            const double v = series[s].values[i];
            if (std::isnan(v)) {
                prev.reset();
                continue;
            }
            const cv::Point p{px(i), py(v)};
            if (prev) cv::line(img, *prev, p, color, 2, cv::LINE_AA);
            cv::circle(img, p, 3, color, cv::FILLED, cv::LINE_AA);
            prev = p;
        }
        const int ly = kTop + 18 + 18 * static_cast<int>(s);
        cv::line(img, {kLeft + pw - 190, ly - 5}, {kLeft + pw - 165, ly - 5}, color, 2);
        text(img, series[s].label, {kLeft + pw - 158, ly}, 0.45);
    }

    if (!cv::imwrite(path, img)) throw Error(ErrorCode::Io, "cannot write plot '" + path + "'", "plot");
}

}  // namespace remove_eval::cli
