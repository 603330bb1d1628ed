#pragma once

#include <span>
#include <string>
#include <string_view>

#include "remove_eval/image.hpp"

namespace remove_eval {

std::string sha256_hex(std::string_view bytes);

/// Digest over dimensions and quantized 8-bit pixel values.
std::string image_content_digest(const RgbImage& image);

}  // namespace remove_eval
