#include "remove_eval/metric.hpp"

#include <cmath>
#include <utility>

#include "remove_eval/error.hpp"
#include "remove_eval/preprocess.hpp"

namespace remove_eval {

namespace {

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw e.with_stage(stage);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::EncoderFailure, e.what(), stage);
    }
}

}  // namespace

MetricResult remove_score(const EditedImage& image, const EraseMask& mask, const PatchEncoder& encoder,
                          const MetricConfig& config) {
    return remove_score(image, mask, encoder, config, cosine_similarity, "cosine");
}

MetricResult remove_score(const EditedImage& image, const EraseMask& mask, const PatchEncoder& encoder,
                          const MetricConfig& config, const Similarity& similarity,
                          const std::string& similarity_id) {
    const EncoderInfo& info = encoder.info();
    run_stage("input", [&] {
        config.validate();
        validate_pairing(image, mask);
        if (config.input_side != info.input_side || config.patch_size != info.patch_size) {
            throw Error(ErrorCode::Configuration,
                        "metric geometry " + std::to_string(config.input_side) + "/" +
                            std::to_string(config.patch_size) + " does not match encoder '" + info.encoder_id +
                            "' geometry " + std::to_string(info.input_side) + "/" + std::to_string(info.patch_size));
        }
    });

    MetricResult result;
    result.encoder_id = info.encoder_id;
    result.config_digest = config_digest(config, info.encoder_id, similarity_id);

    const EditedImage* work_image = &image;
    const EraseMask* work_mask = &mask;
    std::pair<EditedImage, EraseMask> cropped;
    if (config.use_crop) {
        const CropResult crop = run_stage("crop", [&] { return compute_crop(mask, config); });
        cropped = run_stage("crop", [&] { return apply_crop(image, mask, crop.box); });
        work_image = &cropped.first;
        work_mask = &cropped.second;
        result.crop_box = crop.box;
        result.crop_mask_fraction = crop.mask_fraction;
        result.crop_fraction_in_bounds = crop.fraction_in_bounds;
    }

    PreprocessedImage pre = run_stage("preprocess", [&] {
        return resize_normalize(work_image->pixels, config, info.normalization_id);
    });
    pre.source_crop = result.crop_box;

    const PatchEmbeddingGrid grid = run_stage("encode", [&] { return encoder.encode(pre); });
    const PatchMask pmask = run_stage("mask", [&] { return prepare_patch_mask(*work_mask, config); });
    const FeaturePartition partition = run_stage("segregate", [&] { return segregate_features(grid, pmask); });
    const auto means = run_stage("mean", [&] { return mean_features(partition); });

    result.masked_patch_count = static_cast<int>(partition.masked.size());
    result.unmasked_patch_count = static_cast<int>(partition.unmasked.size());
    result.score = run_stage("similarity", [&] { return similarity(means.first, means.second); });
    if (!std::isfinite(result.score)) {
        throw Error(ErrorCode::EncoderFailure, "similarity is not finite", "similarity");
    }
    return result;
}

}  // namespace remove_eval
