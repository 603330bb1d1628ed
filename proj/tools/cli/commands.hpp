#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "remove_eval/analysis.hpp"
#include "remove_eval/baselines.hpp"
#include "remove_eval/core.hpp"
#include "remove_eval/encoders.hpp"

namespace remove_eval::cli {

inline constexpr const char* kWeightsEnv = "REMOVE_EVAL_WEIGHTS_DIR";

struct EncoderOptions {
    std::string encoder = MockPoolingEncoder::kId;
    std::string weights;
    std::string normalization;
    std::string layout = "nchw";

    EncoderSpec spec(const MetricConfig& config) const;
};

struct MetricOptions {
    bool no_crop = false;
    double target_fraction = 0.4;
    double patch_threshold = 0.5;
    int input_side = 1024;
    int patch_size = 16;

    MetricConfig config() const;
};

struct BaselineOptions {
    /// "none" or a comma list of mse, lpips, cs-nr, cs-fr
    std::string baselines = "none";
    std::string lpips_weights;
    std::string lpips_cmd;
    std::string lpips_variant = "alex";
    std::string caption_cmd;
    std::string clip_cmd;
    std::string caption_cache;
};

/// Backends selected by BaselineOptions.
class BaselineSet {
public:
    BaselineSet(const BaselineOptions& options, const std::string& default_cache_path);
    ~BaselineSet();

    /// Metric ids this set produces, in output order.
    const std::vector<std::string>& metric_ids() const noexcept { return ids_; }
    bool empty() const noexcept { return ids_.empty(); }
    std::vector<BaselineScore> score(const EditedImage& sample) const;

private:
    bool mse_ = false;
    bool cs_nr_ = false;
    bool cs_fr_ = false;
    std::unique_ptr<LpipsBackend> lpips_;
    std::unique_ptr<Captioner> raw_captioner_;
    std::unique_ptr<CaptionCache> cache_;
    std::unique_ptr<Captioner> captioner_;
    std::unique_ptr<ClipEmbedder> clip_;
    std::vector<std::string> ids_;
};

struct EvaluateOptions {
    std::string manifest;
    std::string out;
    EncoderOptions encoder;
    MetricOptions metric;
    BaselineOptions baselines;
    std::optional<int> binarize_threshold;
    int workers = 1;
    int n_bins = 20;
    std::string partition = "none";
    std::string size_bounds;
    std::string reference;
    std::string binning = "equal-count";
    std::string correlation = "per-record";
    std::string estimator = "pearson";
    std::string corpus_label;
    std::size_t stop_after = 0;
};

int cmd_evaluate(const EvaluateOptions& options);

std::vector<std::string> split_list(const std::string& text);
std::vector<double> parse_doubles(const std::string& text, const char* what);
std::optional<SizeBoundaries> parse_size_bounds(const std::string& text);
BinningMode parse_binning(const std::string& text);
CorrelationMode parse_correlation_mode(const std::string& text);
CorrelationEstimator parse_estimator(const std::string& text);

/// Picks a reference metric present on every record: an LPIPS id, else MSE.
/// Returns an empty string when none qualifies.
std::string auto_reference(const std::vector<EvaluationRecord>& records);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace remove_eval::cli
