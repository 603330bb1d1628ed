#include "remove_eval/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "remove_eval/error.hpp"

namespace remove_eval {

using json = nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
    return out;
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// Values of `metric` for every record, in order; Validation lists offenders.
std::vector<double> collect(std::span<const EvaluationRecord> records, const std::string& metric) {
    std::vector<double> out;
    std::vector<std::string> missing;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (auto v = metric_value(r, metric)) {
            out.push_back(*v);
        } else {
            missing.push_back(r.id);
        }
    }
    if (!missing.empty()) {
        throw Error(ErrorCode::Validation,
                    std::to_string(missing.size()) + " record(s) lack metric '" + metric + "': " + join_ids(missing),
                    "analysis");
    }
    return out;
}

std::string_view to_string(CorrelationMode m) { return m == CorrelationMode::PerRecord ? "per-record" : "per-bin"; }
std::string_view to_string(CorrelationEstimator e) {
    return e == CorrelationEstimator::Pearson ? "pearson" : "spearman";
}

}  // namespace

std::optional<double> metric_value(const EvaluationRecord& record, std::string_view metric) {
    if (metric == metric_id::kRemove) return record.remove_score;
    if (metric == metric_id::kRemoveNoCrop) return record.remove_score_nocrop;
    auto it = record.baselines.find(std::string(metric));
    if (it == record.baselines.end()) return std::nullopt;
    return it->second;
}

std::string to_json_line(const EvaluationRecord& r) {
    json j = json::object();
    j["id"] = r.id;
    j["encoder_id"] = r.encoder_id;
    j["config_digest"] = r.config_digest;
    j["remove_score"] = optional_number(r.remove_score);
    j["remove_score_nocrop"] = optional_number(r.remove_score_nocrop);
    j["baselines"] = r.baselines;
    j["prompts"] = r.prompts;
    j["mask_area_fraction"] = r.mask_area_fraction;
    j["mask_size_class"] = r.mask_size_class ? json(std::string(to_string(*r.mask_size_class))) : json(nullptr);
    j["masked_patch_count"] = r.masked_patch_count;
    j["unmasked_patch_count"] = r.unmasked_patch_count;
    j["crop_box"] = r.crop_box ? json::array({r.crop_box->x0, r.crop_box->y0, r.crop_box->side}) : json(nullptr);
    j["crop_fraction_in_bounds"] = r.crop_fraction_in_bounds;
    j["tags"] = r.tags;
    return j.dump();
}

EvaluationRecord record_from_json_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        EvaluationRecord r;
        r.id = j.at("id").get<std::string>();
        r.encoder_id = j.value("encoder_id", std::string());
        r.config_digest = j.value("config_digest", std::string());
        if (j.contains("remove_score") && !j["remove_score"].is_null()) r.remove_score = j["remove_score"].get<double>();
        if (j.contains("remove_score_nocrop") && !j["remove_score_nocrop"].is_null()) {
            r.remove_score_nocrop = j["remove_score_nocrop"].get<double>();
        }
        if (j.contains("baselines")) r.baselines = j["baselines"].get<std::map<std::string, double>>();
        if (j.contains("prompts")) r.prompts = j["prompts"].get<std::map<std::string, std::string>>();
        r.mask_area_fraction = j.value("mask_area_fraction", 0.0);
        if (j.contains("mask_size_class") && !j["mask_size_class"].is_null()) {
            const auto s = j["mask_size_class"].get<std::string>();
            for (auto c : {MaskSizeClass::Small, MaskSizeClass::Medium, MaskSizeClass::Large}) {
                if (s == to_string(c)) r.mask_size_class = c;
            }
            if (!r.mask_size_class) throw Error(ErrorCode::Parse, "unknown mask size class '" + s + "'");
        }
        r.masked_patch_count = j.value("masked_patch_count", 0);
        r.unmasked_patch_count = j.value("unmasked_patch_count", 0);
        if (j.contains("crop_box") && !j["crop_box"].is_null()) {
            const auto& b = j["crop_box"];
            r.crop_box = CropBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>()};
        }
        r.crop_fraction_in_bounds = j.value("crop_fraction_in_bounds", true);
        if (j.contains("tags")) r.tags = j["tags"].get<std::map<std::string, std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed record: ") + e.what());
    }
}

std::vector<EvaluationRecord> read_records(const std::string& path, bool allow_mixed_configs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open records file '" + path + "'", "load");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<EvaluationRecord> out;
    std::set<std::string> digests;
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string::npos) break;
        ++line_no;
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json_line(line));
        } catch (const Error& e) {
            throw Error(ErrorCode::Parse, path + " line " + std::to_string(line_no) + ": " + e.detail());
        }
        digests.insert(out.back().config_digest);
    }
    if (!allow_mixed_configs && digests.size() > 1) {
        throw Error(ErrorCode::Validation,
                    "records file '" + path + "' mixes " + std::to_string(digests.size()) +
                        " configurations; rescore or split it",
                    "analysis");
    }
    return out;
}

MetricRef metric_ref(std::string_view id) { return {std::string(id), orientation_of(id)}; }

bool better(const BaselineScore& a, const BaselineScore& b) {
    if (a.metric_id != b.metric_id) {
        throw Error(ErrorCode::Validation, "cannot rank " + a.metric_id + " against " + b.metric_id);
    }
    return a.orientation == Orientation::LowerBetter ? a.value < b.value : a.value > b.value;
}

void sort_best_first(std::vector<BaselineScore>& scores) {
    for (const auto& s : scores) {
        if (s.metric_id != scores.front().metric_id) {
            throw Error(ErrorCode::Validation, "best-first sort needs scores of a single metric");
        }
    }
    std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return better(a, b); });
}

BinCurve bin_by_reference(std::span<const EvaluationRecord> records, const MetricRef& sort_metric,
                          const std::string& target_metric, int n_bins, BinningMode mode) {
    std::vector<std::string> missing;
    for (const auto& r : records) {
        if (!metric_value(r, sort_metric.id) || !metric_value(r, target_metric)) missing.push_back(r.id);
    }
    if (!missing.empty()) {
        throw Error(ErrorCode::Validation,
                    std::to_string(missing.size()) + " record(s) lack '" + sort_metric.id + "' or '" + target_metric +
                        "': " + join_ids(missing),
                    "analysis");
    }
    if (n_bins < 1 || static_cast<std::size_t>(n_bins) > records.size()) {
        throw Error(ErrorCode::Validation,
                    "cannot split " + std::to_string(records.size()) + " record(s) into " + std::to_string(n_bins) +
                        " bins",
                    "analysis");
    }

    const std::vector<double> key = collect(records, sort_metric.id);
    const std::vector<double> target = collect(records, target_metric);
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    const bool ascending = sort_metric.orientation == Orientation::LowerBetter;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ascending ? key[a] < key[b] : key[a] > key[b];
    });

    BinCurve curve;
    curve.n_bins = n_bins;
    curve.sort_metric = sort_metric.id;
    curve.sort_orientation = sort_metric.orientation;
    curve.target_metric = target_metric;
    curve.mode = mode;
    curve.members.resize(static_cast<std::size_t>(n_bins));

    const std::size_t n = order.size();
    const auto k = static_cast<std::size_t>(n_bins);
    if (mode == BinningMode::EqualCount) {
        const std::size_t base = n / k, extra = n % k;
        std::size_t pos = 0;
        for (std::size_t b = 0; b < k; ++b) {
            const std::size_t size = base + (b < extra ? 1 : 0);
            curve.members[b].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
            pos += size;
        }
    } else {
        const double best = key[order.front()];
        const double worst = key[order.back()];
        const double span = worst - best;
        for (std::size_t idx : order) {
            std::size_t b = 0;
            if (span != 0.0) {
                b = static_cast<std::size_t>(std::floor((key[idx] - best) / span * static_cast<double>(k)));
                b = std::min(b, k - 1);
            }
            curve.members[b].push_back(idx);
        }
    }

    for (const auto& bin : curve.members) {
        curve.counts.push_back(bin.size());
        if (bin.empty()) {
            curve.means.push_back(std::numeric_limits<double>::quiet_NaN());
            curve.sort_means.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double t = 0.0, s = 0.0;
        for (std::size_t idx : bin) {
            t += target[idx];
            s += key[idx];
        }
        curve.means.push_back(t / static_cast<double>(bin.size()));
        curve.sort_means.push_back(s / static_cast<double>(bin.size()));
    }
    return curve;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::Validation, "correlation inputs differ in length", "analysis");
    if (a.size() < 2) throw Error(ErrorCode::Validation, "correlation needs at least two pairs", "analysis");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw Error(ErrorCode::UndefinedCorrelation, "a metric has zero variance", "analysis");
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double pearson_correlation(std::span<const EvaluationRecord> records, const std::string& metric_a,
                           const std::string& metric_b) {
    const auto a = collect(records, metric_a);
    const auto b = collect(records, metric_b);
    return pearson_correlation(a, b);
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::Validation, "correlation inputs differ in length", "analysis");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson_correlation(ra, rb);
}

SummaryStats summary_stats(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::Validation, "summary statistics need at least one value", "analysis");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n), values.size()};
}

SummaryStats summary_stats(std::span<const EvaluationRecord> records, const std::string& metric) {
    const auto v = collect(records, metric);
    return summary_stats(v);
}

AblationTable ablation_table(std::span<const EvaluationRecord> records, const std::string& corpus_label,
                             const AblationOptions& options) {
    AblationTable table;
    table.reference_metric = options.reference_metric;
    table.mode = options.mode;
    table.estimator = options.estimator;

    auto all_have = [&](std::string_view metric) {
        return !records.empty() &&
               std::all_of(records.begin(), records.end(), [&](const auto& r) { return metric_value(r, metric); });
    };
    auto correlate = [&](std::span<const double> x, std::span<const double> y) {
        return options.estimator == CorrelationEstimator::Pearson ? pearson_correlation(x, y)
                                                                  : spearman_correlation(x, y);
    };

    const std::pair<std::string_view, const char*> variants[] = {
        {metric_id::kRemoveNoCrop, "ReMOVE (w/o crop)"},
        {metric_id::kRemove, "ReMOVE"},
    };
    for (const auto& [metric, label] : variants) {
        if (!all_have(metric)) continue;
        AblationRow row;
        row.corpus = corpus_label;
        row.method = label;
        row.metric = std::string(metric);
        row.stats = summary_stats(records, row.metric);
        if (options.reference_metric.empty()) {
            row.rho = std::numeric_limits<double>::quiet_NaN();
        } else if (options.mode == CorrelationMode::PerRecord) {
            const auto x = collect(records, row.metric);
            const auto y = collect(records, options.reference_metric);
            row.rho = correlate(x, y);
        } else {
            const BinCurve curve = bin_by_reference(records, metric_ref(options.reference_metric), row.metric,
                                                    std::min<int>(options.n_bins, static_cast<int>(records.size())));
            row.rho = correlate(curve.means, curve.sort_means);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) {
        throw Error(ErrorCode::Validation, "no ReMOVE variant is present on every record", "analysis");
    }
    return table;
}

std::string AblationTable::to_text() const {
    const bool has_rho = !reference_metric.empty();
    std::string out = fmt::format("{:<16} {:<20} {:>8} {:>8}", "corpus", "method", "mu", "sigma");
    if (has_rho) out += fmt::format(" {:>16}", fmt::format("rho({})", reference_metric));
    out += fmt::format(" {:>7}\n", "n");
    for (const auto& r : rows) {
        out += fmt::format("{:<16} {:<20} {:>8.3f} {:>8.3f}", r.corpus, r.method, r.stats.mean, r.stats.stddev);
        if (has_rho) out += fmt::format(" {:>16.3f}", r.rho);
        out += fmt::format(" {:>7}\n", r.stats.count);
    }
    out += "sigma: population (divisor n)";
    if (has_rho) out += fmt::format("; rho: {} {} against {}", to_string(estimator), to_string(mode), reference_metric);
    return out + "\n";
}

std::string AblationTable::to_json() const {
    json j = json::object();
    j["reference_metric"] = reference_metric.empty() ? json(nullptr) : json(reference_metric);
    j["correlation_mode"] = std::string(to_string(mode));
    j["estimator"] = std::string(to_string(estimator));
    j["sigma_convention"] = "population";
    j["rows"] = json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"corpus", r.corpus},
                             {"method", r.method},
                             {"metric", r.metric},
                             {"mean", r.stats.mean},
                             {"stddev", r.stats.stddev},
                             {"count", r.stats.count},
                             {"rho", std::isnan(r.rho) ? json(nullptr) : json(r.rho)}});
    }
    return j.dump(2);
}

std::vector<PreferencePair> parse_preference_pairs(std::istream& in, const std::string& source) {
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::vector<PreferencePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
        auto where = [&] { return source + " line " + std::to_string(line_no); };
        if (header) {
            header = false;
            if (fields != std::vector<std::string>{"rater", "image_a", "image_b", "choice"}) {
                throw Error(ErrorCode::Parse, where() + ": expected header 'rater,image_a,image_b,choice'");
            }
            continue;
        }
        if (fields.size() != 4) throw Error(ErrorCode::Parse, where() + ": expected 4 fields");
        if (fields[3] != "A" && fields[3] != "B") throw Error(ErrorCode::Parse, where() + ": choice must be A or B");
        if (fields[1] == fields[2]) throw Error(ErrorCode::Validation, where() + ": pair compares an image with itself");
        pairs.push_back({fields[0], fields[1], fields[2], fields[3] == "A" ? Choice::A : Choice::B});
    }
    return pairs;
}

std::vector<PreferencePair> load_preference_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open pairs file '" + path + "'", "load");
    return parse_preference_pairs(in, path);
}

double agreement_rate(std::span<const PreferencePair> pairs, const std::map<std::string, double>& scores,
                      Orientation orientation) {
    std::set<std::string> missing;
    for (const auto& p : pairs) {
        for (const auto* id : {&p.image_a, &p.image_b}) {
            if (!scores.count(*id)) missing.insert(*id);
        }
    }
    if (!missing.empty()) {
        throw Error(ErrorCode::Validation,
                    std::to_string(missing.size()) + " image id(s) have no score: " +
                        join_ids(std::vector<std::string>(missing.begin(), missing.end())),
                    "analysis");
    }
    if (pairs.empty()) throw Error(ErrorCode::Validation, "no preference pairs", "analysis");
    double credit = 0.0;
    for (const auto& p : pairs) {
        const double a = scores.at(p.image_a);
        const double b = scores.at(p.image_b);
        if (a == b) {
            credit += 0.5;
            continue;
        }
        const bool prefers_a = orientation == Orientation::HigherBetter ? a > b : a < b;
        credit += (prefers_a == (p.human_choice == Choice::A)) ? 1.0 : 0.0;
    }
    return credit / static_cast<double>(pairs.size());
}

}  // namespace remove_eval
