#pragma once

// Domain types and the pure math that turns a patch-embedding grid plus a
// patch mask into the ReMOVE score: segregate -> mean -> similarity.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "remove_eval/image.hpp"

namespace remove_eval {

/// rows x cols grid of `dim`-dimensional patch features, row-major.
struct PatchEmbeddingGrid {
    int rows = 0;
    int cols = 0;
    int dim = 0;
    int patch_size = 0;
    std::string encoder_id;
    /// Double storage; backends with float output are widened on copy.
    std::vector<double> features;

    std::size_t cell_count() const noexcept {
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }

    std::span<const double> at(int row, int col) const {
        const auto offset = (static_cast<std::size_t>(row) * cols + col) * static_cast<std::size_t>(dim);
        return {features.data() + offset, static_cast<std::size_t>(dim)};
    }

    friend bool operator==(const PatchEmbeddingGrid&, const PatchEmbeddingGrid&) = default;
};

/// A bag of feature vectors of equal dimension, held in double precision.
class FeatureSet {
public:
    explicit FeatureSet(std::size_t dim = 0) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
    bool empty() const noexcept { return size() == 0; }

    template <class T>
    void push(std::span<const T> v) {
        if (dim_ == 0) dim_ = v.size();
        check_dim(v.size());
        values_.insert(values_.end(), v.begin(), v.end());
    }
    void push(std::initializer_list<double> v) { push(std::span<const double>(v.begin(), v.size())); }

    std::span<const double> operator[](std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

private:
    void check_dim(std::size_t n) const;

    std::size_t dim_;
    std::vector<double> values_;
};

struct FeaturePartition {
    FeatureSet masked;
    FeatureSet unmasked;
};

struct MetricConfig {
    bool use_crop = true;
    double target_mask_fraction = 0.4;
    double fraction_lower = 0.30;
    double fraction_upper = 0.50;
    /// A patch cell is masked iff its masked-pixel fraction is >= this value.
    double patch_mask_threshold = 0.5;
    int input_side = 1024;
    int patch_size = 16;

    /// Throws Configuration on out-of-range or inconsistent values.
    void validate() const;
};

/// Square crop, top-left corner plus side length, in source pixels.
struct CropBox {
    int x0 = 0;
    int y0 = 0;
    int side = 0;

    friend bool operator==(const CropBox&, const CropBox&) = default;
};

struct MetricResult {
    double score = 0.0;
    int masked_patch_count = 0;
    int unmasked_patch_count = 0;
    std::optional<CropBox> crop_box;
    /// Mask fraction inside the crop; only meaningful when crop_box is set.
    double crop_mask_fraction = 0.0;
    /// False when no crop inside the image could reach the configured band.
    bool crop_fraction_in_bounds = true;
    std::string encoder_id;
    std::string config_digest;
};

using Similarity = std::function<double(std::span<const double>, std::span<const double>)>;

/// Splits grid cells by the patch-mask bit. Throws Configuration on shape
/// mismatch and DegenerateMask when either side ends up empty.
FeaturePartition segregate_features(const PatchEmbeddingGrid& grid, const PatchMask& pmask);

/// Elementwise means of the masked and unmasked sets.
std::pair<std::vector<double>, std::vector<double>> mean_features(const FeaturePartition& partition);

/// Mean of a single set; throws DegenerateMask when empty.
std::vector<double> mean_vector(const FeatureSet& set);

/// a.b / (|a||b|), clamped into [-1, 1]. Throws ZeroVector on a zero-norm input.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Stable short digest of everything that changes the score for a given encoder.
std::string config_digest(const MetricConfig& config, const std::string& encoder_id,
                          const std::string& similarity_id = "cosine");

}  // namespace remove_eval
