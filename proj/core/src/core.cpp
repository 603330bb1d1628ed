#include "remove_eval/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "remove_eval/digest.hpp"
#include "remove_eval/error.hpp"

namespace remove_eval {

void FeatureSet::check_dim(std::size_t n) const {
    if (n != dim_ || n == 0) {
        throw Error(ErrorCode::Configuration,
                    "feature dimension " + std::to_string(n) + " does not match set dimension " +
                        std::to_string(dim_));
    }
}

void MetricConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::Configuration, what); };
    if (!(target_mask_fraction > 0.0 && target_mask_fraction < 1.0)) {
        fail("target mask fraction must lie in (0, 1)");
    }
    if (!(fraction_lower <= target_mask_fraction && target_mask_fraction <= fraction_upper)) {
        fail("mask fraction bounds must be ordered and contain the target");
    }
    if (!(patch_mask_threshold > 0.0 && patch_mask_threshold <= 1.0)) {
        fail("patch mask threshold must lie in (0, 1]");
    }
    if (patch_size < 1 || input_side < patch_size || input_side % patch_size != 0) {
        fail("input side " + std::to_string(input_side) + " must be a positive multiple of patch size " +
             std::to_string(patch_size));
    }
}

FeaturePartition segregate_features(const PatchEmbeddingGrid& grid, const PatchMask& pmask) {
    if (grid.rows != pmask.height || grid.cols != pmask.width) {
        throw Error(ErrorCode::Configuration,
                    "feature grid is " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                        " but patch mask is " + std::to_string(pmask.height) + "x" +
                        std::to_string(pmask.width),
                    "segregate");
    }
    const auto dim = static_cast<std::size_t>(grid.dim);
    FeaturePartition out{FeatureSet(dim), FeatureSet(dim)};
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            auto& target = pmask.at(c, r) != 0 ? out.masked : out.unmasked;
            target.push(grid.at(r, c));
        }
    }
    if (out.masked.empty()) {
        throw Error(ErrorCode::DegenerateMask, "mask covers no patch at patch resolution", "segregate");
    }
    if (out.unmasked.empty()) {
        throw Error(ErrorCode::DegenerateMask, "mask covers entire image at patch resolution", "segregate");
    }
    return out;
}

std::vector<double> mean_vector(const FeatureSet& set) {
    if (set.empty()) throw Error(ErrorCode::DegenerateMask, "cannot average an empty feature set", "mean");
    std::vector<double> sum(set.dim(), 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto v = set[i];
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
    }
    const double n = static_cast<double>(set.size());
    for (auto& s : sum) s /= n;
    return sum;
}

std::pair<std::vector<double>, std::vector<double>> mean_features(const FeaturePartition& partition) {
    return {mean_vector(partition.masked), mean_vector(partition.unmasked)};
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error(ErrorCode::Configuration, "cosine similarity needs two vectors of equal nonzero dimension",
                    "similarity");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::ZeroVector, "mean feature vector has zero norm", "similarity");
    }
    const double s = dot / std::sqrt(na * nb);
    return std::clamp(s, -1.0, 1.0);
}

std::string config_digest(const MetricConfig& config, const std::string& encoder_id,
                          const std::string& similarity_id) {
    std::ostringstream os;
    os.precision(17);
    os << "encoder=" << encoder_id << ";crop=" << (config.use_crop ? 1 : 0)
       << ";target=" << config.target_mask_fraction << ";bounds=" << config.fraction_lower << ","
       << config.fraction_upper << ";threshold=" << config.patch_mask_threshold
       << ";side=" << config.input_side << ";patch=" << config.patch_size
       << ";similarity=" << similarity_id;
    return sha256_hex(os.str()).substr(0, 16);
}

}  // namespace remove_eval
