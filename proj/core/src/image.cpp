#include "remove_eval/image.hpp"

#include "remove_eval/error.hpp"

namespace remove_eval {

RgbImage::RgbImage(int w, int h, float fill)
    : width(w), height(h),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

void EditedImage::validate() const {
    if (pixels.empty()) {
        throw Error(ErrorCode::Validation, "image '" + id + "' is empty");
    }
    if (pixels.data.size() != static_cast<std::size_t>(pixels.width) * pixels.height * 3) {
        throw Error(ErrorCode::Validation, "image '" + id + "' has inconsistent buffer size");
    }
    if (ground_truth && (ground_truth->width != pixels.width || ground_truth->height != pixels.height)) {
        throw Error(ErrorCode::Validation,
                    "ground truth of '" + id + "' is " + std::to_string(ground_truth->width) + "x" +
                        std::to_string(ground_truth->height) + ", image is " +
                        std::to_string(pixels.width) + "x" + std::to_string(pixels.height));
    }
}

void validate_pairing(const EditedImage& image, const EraseMask& mask) {
    image.validate();
    if (mask.width != image.width() || mask.height != image.height()) {
        throw Error(ErrorCode::Validation,
                    "mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                        " but image '" + image.id + "' is " + std::to_string(image.width()) + "x" +
                        std::to_string(image.height()));
    }
    for (auto b : mask.bits) {
        if (b > 1) throw Error(ErrorCode::Validation, "mask values must be 0 or 1");
    }
}

double mask_area_fraction(const EraseMask& mask) {
    if (mask.bits.empty()) return 0.0;
    return static_cast<double>(mask.count()) / static_cast<double>(mask.bits.size());
}

}  // namespace remove_eval
