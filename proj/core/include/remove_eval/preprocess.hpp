#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "remove_eval/core.hpp"
#include "remove_eval/image.hpp"

namespace remove_eval {

struct CropResult {
    CropBox box;
    /// Mask pixels inside the box divided by box area.
    double mask_fraction = 0.0;
    bool fraction_in_bounds = true;
};

/// Square crop around the mask bounding box such that the mask covers roughly
/// `target_mask_fraction` of the box.
///
/// The side starts at ceil(sqrt(area / target)), is raised to cover the mask
/// bounding box and clamped to min(w, h). When that side misses the
/// [fraction_lower, fraction_upper] band but another admissible side hits it,
/// the admissible side closest to sqrt(area / target) is used instead. The box
/// is centered on the bounding-box center and translated into the image.
/// Throws DegenerateMask for an empty mask.
CropResult compute_crop(const EraseMask& mask, const MetricConfig& config);

/// Crops image, optional ground truth and mask identically.
std::pair<EditedImage, EraseMask> apply_crop(const EditedImage& image, const EraseMask& mask, const CropBox& box);

/// Encoder-ready raster: planar CHW float, side x side.
struct PreprocessedImage {
    int side = 0;
    std::vector<float> chw;
    std::optional<CropBox> source_crop;
    std::string normalization_id;

    float at(int c, int y, int x) const {
        return chw[(static_cast<std::size_t>(c) * side + y) * side + x];
    }

    friend bool operator==(const PreprocessedImage&, const PreprocessedImage&) = default;
};

/// Bilinear resampling with half-pixel centers and edge clamping.
RgbImage resize_bilinear(const RgbImage& image, int out_width, int out_height);

/// Nearest-neighbour resampling with half-pixel centers.
EraseMask resize_nearest(const EraseMask& mask, int out_width, int out_height);

/// Known channel normalizations: "identity", "imagenet", "clip".
/// Throws Configuration for an empty or unknown id.
void normalize_in_place(std::vector<float>& chw, int side, const std::string& normalization_id);

/// Anisotropic bilinear resize to config.input_side, then channelwise normalization.
PreprocessedImage resize_normalize(const RgbImage& image, const MetricConfig& config,
                                   const std::string& normalization_id);

/// Cell (r, c) is 1 iff the masked fraction of its patch_size^2 pixels is
/// >= threshold. `mask` must already be square with side divisible by patch_size.
PatchMask downsample_mask(const EraseMask& mask, int patch_size, double threshold);

/// Nearest resize to config.input_side followed by downsample_mask.
PatchMask prepare_patch_mask(const EraseMask& mask, const MetricConfig& config);

}  // namespace remove_eval
