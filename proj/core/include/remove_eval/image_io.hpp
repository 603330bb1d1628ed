#pragma once

#include <optional>
#include <string>

#include "remove_eval/image.hpp"

namespace remove_eval {

/// 8-bit RGB(A) image -> [0, 1] floats. Throws Io on unreadable files.
RgbImage load_rgb(const std::string& path);

/// Writes an 8-bit PNG (values rounded and clamped). Throws Io on failure.
void save_rgb_png(const std::string& path, const RgbImage& image);

/// Single-channel mask: 0 = keep, 255 = inpainted. Intermediate values are
/// rejected with Validation unless `binarize_threshold` is given, in which case
/// values >= threshold map to 1.
EraseMask load_mask(const std::string& path, std::optional<int> binarize_threshold = std::nullopt);

void save_mask_png(const std::string& path, const EraseMask& mask);

}  // namespace remove_eval
