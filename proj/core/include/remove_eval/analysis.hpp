#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "remove_eval/baselines.hpp"
#include "remove_eval/core.hpp"
#include "remove_eval/datasets.hpp"

namespace remove_eval {

/// One scored sample. "ReMOVE" is always the crop variant and
/// "ReMOVE-nocrop" the uncropped one; either may be absent.
struct EvaluationRecord {
    std::string id;
    std::optional<double> remove_score;
    std::optional<double> remove_score_nocrop;
    std::map<std::string, double> baselines;
    std::map<std::string, std::string> prompts;
    double mask_area_fraction = 0.0;
    std::optional<MaskSizeClass> mask_size_class;

    std::string encoder_id;
    std::string config_digest;
    int masked_patch_count = 0;
    int unmasked_patch_count = 0;
    std::optional<CropBox> crop_box;
    bool crop_fraction_in_bounds = true;
    std::map<std::string, std::string> tags;

    friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

/// Value of `metric` ("ReMOVE", "ReMOVE-nocrop" or a baseline id) if present.
std::optional<double> metric_value(const EvaluationRecord& record, std::string_view metric);

/// Serializes to a single JSON line (no trailing newline). Key order is fixed.
std::string to_json_line(const EvaluationRecord& record);
/// Throws Parse on malformed input.
EvaluationRecord record_from_json_line(const std::string& line);

/// Reads a records file. A trailing line without newline (interrupted write) is
/// ignored. Throws Validation when records come from more than one config
/// digest, unless `allow_mixed_configs`.
std::vector<EvaluationRecord> read_records(const std::string& path, bool allow_mixed_configs = false);

struct MetricRef {
    std::string id;
    Orientation orientation = Orientation::LowerBetter;
};

/// MetricRef with the orientation registered for `id`.
MetricRef metric_ref(std::string_view id);

/// True when `a` is strictly better than `b`. Both must carry the same metric id.
bool better(const BaselineScore& a, const BaselineScore& b);
/// Stable best-first sort of scores of one metric. Throws Validation on mixed ids.
void sort_best_first(std::vector<BaselineScore>& scores);

enum class BinningMode {
    EqualCount,  ///< contiguous near-equal groups after sorting
    EqualWidth,  ///< equal intervals of the sort metric's range
};

struct BinCurve {
    int n_bins = 0;
    std::string sort_metric;
    Orientation sort_orientation = Orientation::LowerBetter;
    std::string target_metric;
    BinningMode mode = BinningMode::EqualCount;
    /// Per-bin mean of the target metric, best bin first. NaN for empty bins.
    std::vector<double> means;
    /// Per-bin mean of the sort metric.
    std::vector<double> sort_means;
    std::vector<std::size_t> counts;
    /// Record indices per bin.
    std::vector<std::vector<std::size_t>> members;
};

/// Sorts records best-first under `sort_metric` (stable for ties), groups them
/// into `n_bins` bins and averages `target_metric` per bin. In EqualCount mode
/// the first (count mod n_bins) bins hold one extra record.
/// Throws Validation listing ids that lack either metric, or when n_bins is
/// outside [1, record count].
BinCurve bin_by_reference(std::span<const EvaluationRecord> records, const MetricRef& sort_metric,
                          const std::string& target_metric, int n_bins = 20,
                          BinningMode mode = BinningMode::EqualCount);

/// Sample Pearson coefficient. Throws Validation for fewer than two pairs or
/// mismatched lengths, UndefinedCorrelation when either side has zero variance.
double pearson_correlation(std::span<const double> a, std::span<const double> b);
double pearson_correlation(std::span<const EvaluationRecord> records, const std::string& metric_a,
                           const std::string& metric_b);

/// Pearson over average ranks (ties share their mean rank).
double spearman_correlation(std::span<const double> a, std::span<const double> b);

struct SummaryStats {
    double mean = 0.0;
    /// Population convention: divisor n.
    double stddev = 0.0;
    std::size_t count = 0;
};

SummaryStats summary_stats(std::span<const double> values);
SummaryStats summary_stats(std::span<const EvaluationRecord> records, const std::string& metric);

enum class CorrelationMode { PerRecord, PerBin };
enum class CorrelationEstimator { Pearson, Spearman };

struct AblationRow {
    std::string corpus;
    std::string method;
    std::string metric;
    SummaryStats stats;
    double rho = 0.0;
};

struct AblationTable {
    std::string reference_metric;
    CorrelationMode mode = CorrelationMode::PerRecord;
    CorrelationEstimator estimator = CorrelationEstimator::Pearson;
    std::vector<AblationRow> rows;

    std::string to_text() const;
    std::string to_json() const;
};

struct AblationOptions {
    std::string reference_metric = std::string(metric_id::kLpips);
    CorrelationMode mode = CorrelationMode::PerRecord;
    CorrelationEstimator estimator = CorrelationEstimator::Pearson;
    int n_bins = 20;
};

/// Rows "ReMOVE (w/o crop)" and "ReMOVE" for whichever variants every record
/// carries, each with mean, population sd and correlation against the
/// reference metric. Rows for several corpora can be concatenated. An empty
/// reference metric leaves rho as NaN.
AblationTable ablation_table(std::span<const EvaluationRecord> records, const std::string& corpus_label,
                             const AblationOptions& options = {});

enum class Choice { A, B };

struct PreferencePair {
    std::string rater;
    std::string image_a;
    std::string image_b;
    Choice human_choice = Choice::A;
};

/// CSV with header `rater,image_a,image_b,choice`, choice in {A, B}.
std::vector<PreferencePair> parse_preference_pairs(std::istream& in, const std::string& source = "<pairs>");
std::vector<PreferencePair> load_preference_pairs(const std::string& path);

/// Fraction of pairs where the metric prefers the human's choice; exact score
/// ties earn 0.5. Throws Validation listing every unscored id.
double agreement_rate(std::span<const PreferencePair> pairs, const std::map<std::string, double>& scores,
                      Orientation orientation);

}  // namespace remove_eval
