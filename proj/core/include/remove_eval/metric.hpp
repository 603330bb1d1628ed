#pragma once

#include <string>

#include "remove_eval/core.hpp"
#include "remove_eval/encoders.hpp"
#include "remove_eval/image.hpp"

namespace remove_eval {

/// Full ReMOVE pipeline: optional crop, resize + normalize, encode, mask
/// downsampling, segregation, means, similarity. Higher is better.
///
/// Errors carry the stage that raised them ("crop", "preprocess", "encode",
/// "mask", "segregate", "mean", "similarity").
MetricResult remove_score(const EditedImage& image, const EraseMask& mask, const PatchEncoder& encoder,
                          const MetricConfig& config);

/// Same pipeline with a caller-supplied similarity; `similarity_id` feeds the config digest.
MetricResult remove_score(const EditedImage& image, const EraseMask& mask, const PatchEncoder& encoder,
                          const MetricConfig& config, const Similarity& similarity,
                          const std::string& similarity_id);

}  // namespace remove_eval
