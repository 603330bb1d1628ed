#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>

#include "cli.hpp"
#include "commands.hpp"
#include "plot.hpp"
#include "remove_eval/datasets.hpp"
#include "remove_eval/digest.hpp"
#include "remove_eval/metric.hpp"
#include "remove_eval/parallel.hpp"

namespace remove_eval::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kRecordsFile = "records.jsonl";

struct Failure {
    std::string id;
    std::string stage;
    std::string code;
    std::string reason;
};

/// Writes finished rows in manifest order; a row is written once every earlier
/// pending row has finished. Failed rows leave no line.
class OrderedAppender {
public:
    OrderedAppender(const std::string& path, std::size_t n, std::size_t limit)
        : out_(path, std::ios::binary | std::ios::app), slots_(n), finished_(n, false), limit_(limit) {
        if (!out_) throw Error(ErrorCode::Io, "cannot open '" + path + "' for appending", "output");
    }

    void finish(std::size_t k, std::optional<std::string> line) {
        std::lock_guard lock(mutex_);
        slots_[k] = std::move(line);
        finished_[k] = true;
        while (next_ < slots_.size() && finished_[next_] && !limit_reached()) {
            if (slots_[next_]) {
                out_ << *slots_[next_] << '\n';
                out_.flush();
                if (!out_) throw Error(ErrorCode::Io, "write to records file failed", "output");
                ++written_;
            }
            slots_[next_].reset();
            ++next_;
        }
    }

    bool limit_reached() const { return limit_ != 0 && written_ >= limit_; }
    bool stopped() const {
        std::lock_guard lock(mutex_);
        return limit_reached();
    }
    std::size_t written() const {
        std::lock_guard lock(mutex_);
        return written_;
    }
    /// Rows whose outcome was committed (written or failed) in order.
    std::size_t committed() const {
        std::lock_guard lock(mutex_);
        return next_;
    }

private:
    std::ofstream out_;
    std::vector<std::optional<std::string>> slots_;
    std::vector<bool> finished_;
    std::size_t next_ = 0;
    std::size_t written_ = 0;
    std::size_t limit_;
    mutable std::mutex mutex_;
};

/// Loads ids already present in an existing records file, dropping a partial
/// trailing line left by an interrupted write.
std::set<std::string> resume_state(const std::string& path, const std::string& digest) {
    std::set<std::string> done;
    if (!fs::exists(path)) return done;
    std::string text;
    {
        std::ifstream in(path, std::ios::binary);
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    const auto last_newline = text.rfind('\n');
    const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (keep != text.size()) {
        fmt::print(stderr, "note: dropping incomplete trailing record in {}\n", path);
        fs::resize_file(path, keep);
        text.resize(keep);
    }
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        ++line_no;
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        EvaluationRecord r;
        try {
            r = record_from_json_line(line);
        } catch (const Error& e) {
            throw Error(ErrorCode::Parse, fmt::format("{} line {}: {}", path, line_no, e.detail()), "resume");
        }
        if (r.config_digest != digest) {
            throw Error(ErrorCode::Validation,
                        fmt::format("{} holds records with config digest {} but this run has {}; use a fresh --out",
                                    path, r.config_digest, digest),
                        "resume");
        }
        done.insert(r.id);
    }
    return done;
}

std::optional<MaskSizeClass> classify(double f, const std::optional<SizeBoundaries>& b) {
    if (!b) return std::nullopt;
    if (f < b->small_upper) return MaskSizeClass::Small;
    if (f < b->medium_upper) return MaskSizeClass::Medium;
    return MaskSizeClass::Large;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json curve_json(const std::string& label, const BinCurve& c) {
    json means = json::array(), sort_means = json::array();
    for (double v : c.means) means.push_back(number_or_null(v));
    for (double v : c.sort_means) sort_means.push_back(number_or_null(v));
    return {{"label", label},
            {"sort_metric", c.sort_metric},
            {"sort_orientation", std::string(to_string(c.sort_orientation))},
            {"target_metric", c.target_metric},
            {"binning", c.mode == BinningMode::EqualCount ? "equal-count" : "equal-width"},
            {"n_bins", c.n_bins},
            {"counts", c.counts},
            {"means", means},
            {"sort_means", sort_means}};
}

std::string curve_text(const BinCurve& c) {
    std::string out = fmt::format("{:>4} {:>6} {:>18} {:>20}\n", "bin", "count", "mean " + c.sort_metric,
                                  "mean " + c.target_metric);
    for (std::size_t b = 0; b < c.means.size(); ++b) {
        out += fmt::format("{:>4} {:>6} {:>18.6f} {:>20.6f}\n", b + 1, c.counts[b], c.sort_means[b], c.means[b]);
    }
    return out;
}

std::string rho_text(double v) { return std::isnan(v) ? "undefined" : fmt::format("{:+.4f}", v); }

class Analysis {
public:
    Analysis(const EvaluateOptions& o, std::vector<EvaluationRecord> records)
        : o_(o), records_(std::move(records)) {
        reference_ = o.reference.empty() ? auto_reference(records_) : o.reference;
        for (const auto id : {metric_id::kRemove, metric_id::kRemoveNoCrop}) {
            const bool all = !records_.empty() && std::all_of(records_.begin(), records_.end(), [&](const auto& r) {
                return metric_value(r, id).has_value();
            });
            if (all) variants_.emplace_back(id);
        }
        label_ = o.corpus_label.empty() ? fs::path(o.manifest).stem().string() : o.corpus_label;
    }

    void run(const std::vector<Failure>& failures) {
        const std::string plots = (fs::path(o_.out) / "plots").string();
        fs::create_directories(plots);

        text_ += fmt::format("records: {}\nfailures: {}\n", records_.size(), failures.size());
        if (!records_.empty()) {
            text_ += fmt::format("encoder: {}\nconfig digest: {}\n", records_.front().encoder_id,
                                 records_.front().config_digest);
        }
        text_ += fmt::format("reference metric: {}\n\n",
                             reference_.empty() ? "none (no LPIPS or MSE on every record)" : reference_);
        results_["records"] = records_.size();
        results_["reference_metric"] = reference_.empty() ? json(nullptr) : json(reference_);
        results_["sigma_convention"] = "population";

        if (records_.empty() || variants_.empty()) {
            text_ += "no complete ReMOVE scores to analyse\n";
        } else {
            ablation();
            correlations();
            curves("all", all_indices(), plots);
            if (o_.partition == "mask-size") mask_size(plots);
        }

        results_["failures"] = json::array();
        text_ += fmt::format("\n== Failures ({}) ==\n", failures.size());
        for (const auto& f : failures) {
            text_ += fmt::format("{}\t[{}] {}: {}\n", f.id, f.stage, f.code, f.reason);
            results_["failures"].push_back({{"id", f.id}, {"stage", f.stage}, {"code", f.code}, {"reason", f.reason}});
        }
    }

    const std::string& text() const { return text_; }
    const json& results() const { return results_; }

private:
    std::vector<std::size_t> all_indices() const {
        std::vector<std::size_t> v(records_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
        return v;
    }

    std::vector<EvaluationRecord> subset(const std::vector<std::size_t>& idx) const {
        std::vector<EvaluationRecord> out;
        out.reserve(idx.size());
        for (auto i : idx) out.push_back(records_[i]);
        return out;
    }

    double correlate(const std::vector<EvaluationRecord>& recs, const std::string& metric) const {
        if (reference_.empty()) return std::nan("");
        AblationOptions opt;
        opt.reference_metric = reference_;
        opt.mode = parse_correlation_mode(o_.correlation);
        opt.estimator = parse_estimator(o_.estimator);
        opt.n_bins = o_.n_bins;
        try {
            const auto t = ablation_table(recs, label_, opt);
            for (const auto& row : t.rows) {
                if (row.metric == metric) return row.rho;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UndefinedCorrelation && e.code() != ErrorCode::Validation) throw;
        }
        return std::nan("");
    }

    void ablation() {
        AblationOptions opt;
        opt.reference_metric = reference_;
        opt.mode = parse_correlation_mode(o_.correlation);
        opt.estimator = parse_estimator(o_.estimator);
        opt.n_bins = o_.n_bins;
        AblationTable table;
        try {
            table = ablation_table(records_, label_, opt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UndefinedCorrelation && e.code() != ErrorCode::Validation) throw;
            text_ += fmt::format("note: rho undefined ({})\n", e.detail());
            opt.reference_metric.clear();
            table = ablation_table(records_, label_, opt);
        }
        text_ += "== Crop ablation ==\n" + table.to_text() + "\n";
        results_["ablation"] = json::parse(table.to_json());
    }

    void correlations() {
        if (reference_.empty()) return;
        const auto mode = parse_correlation_mode(o_.correlation);
        const auto est = parse_estimator(o_.estimator);
        text_ += fmt::format("== Correlation with {} ({}, {}) ==\n", reference_, o_.estimator, o_.correlation);
        json j = json::object();
        std::vector<std::string> metrics = variants_;
        for (const auto& [id, v] : records_.front().baselines) {
            if (id != reference_) metrics.push_back(id);
        }
        for (const auto& m : metrics) {
            double rho = std::nan("");
            try {
                if (mode == CorrelationMode::PerRecord) {
                    std::vector<double> a, b;
                    for (const auto& r : records_) {
                        a.push_back(*metric_value(r, m));
                        b.push_back(*metric_value(r, reference_));
                    }
                    rho = est == CorrelationEstimator::Pearson ? pearson_correlation(a, b) : spearman_correlation(a, b);
                } else {
                    const int bins = std::min<int>(o_.n_bins, static_cast<int>(records_.size()));
                    const auto c = bin_by_reference(records_, metric_ref(reference_), m, bins);
                    rho = est == CorrelationEstimator::Pearson ? pearson_correlation(c.means, c.sort_means)
                                                               : spearman_correlation(c.means, c.sort_means);
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::UndefinedCorrelation && e.code() != ErrorCode::Validation) throw;
            }
            text_ += fmt::format("{:<18} {}\n", m, rho_text(rho));
            j[m] = number_or_null(rho);
        }
        results_["correlations"] = j;
        text_ += "\n";
    }

    void curves(const std::string& label, const std::vector<std::size_t>& idx, const std::string& plots) {
        if (reference_.empty() || idx.empty()) return;
        const auto recs = subset(idx);
        const int bins = std::min<int>(o_.n_bins, static_cast<int>(recs.size()));
        std::vector<Series> series;
        for (const auto& v : variants_) {
            const auto c = bin_by_reference(recs, metric_ref(reference_), v, bins, parse_binning(o_.binning));
            text_ += fmt::format("== Bin curve [{}]: {} by {} ({} {} bins, best first) ==\n", label, v, reference_,
                                 bins, o_.binning);
            text_ += curve_text(c) + "\n";
            results_["curves"].push_back(curve_json(label, c));
            series.push_back({v, c.means});
        }
        const auto png = (fs::path(plots) / ("curve_" + label + ".png")).string();
        plot_series(png, fmt::format("[{}] mean per bin, sorted by {}", label, reference_),
                    fmt::format("bin ({} records)", recs.size()), "mean score", series);
    }

    void mask_size(const std::string& plots) {
        std::vector<double> fractions;
        for (const auto& r : records_) fractions.push_back(r.mask_area_fraction);
        const auto part = partition_by_mask_size(fractions, parse_size_bounds(o_.size_bounds));
        const auto& b = part.boundaries;
        text_ += fmt::format("== Mask-size classes ({}: small < {} <= medium < {} <= large) ==\n",
                             b.from_terciles ? "empirical terciles" : "fixed bounds", format_number(b.small_upper),
                             format_number(b.medium_upper));
        json classes = json::object();
        for (int k = 0; k < 3; ++k) {
            const auto cls = static_cast<MaskSizeClass>(k);
            const std::string name(to_string(cls));
            const auto& members = part.members[static_cast<std::size_t>(k)];
            json cj = {{"count", members.size()}};
            std::string line = fmt::format("{:<7} n={:<6}", name, members.size());
            if (!members.empty()) {
                const auto recs = subset(members);
                for (const auto& v : variants_) {
                    const auto st = summary_stats(recs, v);
                    const double rho = recs.size() >= 2 ? correlate(recs, v) : std::nan("");
                    line += fmt::format("  {}: mu={:.4f} sigma={:.4f} rho={}", v, st.mean, st.stddev, rho_text(rho));
                    cj[v] = {{"mean", st.mean}, {"stddev", st.stddev}, {"rho", number_or_null(rho)}};
                }
            }
            text_ += line + "\n";
            classes[name] = cj;
        }
        for (const auto& w : part.warnings) text_ += "warning: " + w + "\n";
        text_ += "\n";
        results_["mask_size"] = {{"boundaries",
                                  {{"small_upper", b.small_upper},
                                   {"medium_upper", b.medium_upper},
                                   {"source", b.from_terciles ? "terciles" : "fixed"}}},
                                 {"classes", classes},
                                 {"warnings", part.warnings}};
        for (int k = 0; k < 3; ++k) {
            curves(std::string(to_string(static_cast<MaskSizeClass>(k))), part.members[static_cast<std::size_t>(k)],
                   plots);
        }
    }

    const EvaluateOptions& o_;
    std::vector<EvaluationRecord> records_;
    std::string reference_;
    std::vector<std::string> variants_;
    std::string label_;
    std::string text_;
    json results_ = json::object();
};

}  // namespace

int cmd_evaluate(const EvaluateOptions& o) {
    if (o.workers < 1) throw Error(ErrorCode::Configuration, "--workers must be >= 1");
    if (o.n_bins < 1) throw Error(ErrorCode::Configuration, "--n-bins must be >= 1");
    if (o.partition != "none" && o.partition != "mask-size") {
        throw Error(ErrorCode::Configuration, "--partition must be none or mask-size");
    }
    parse_binning(o.binning);
    parse_correlation_mode(o.correlation);
    parse_estimator(o.estimator);
    const auto fixed_bounds = parse_size_bounds(o.size_bounds);

    const MetricConfig config = o.metric.config();
    MetricConfig nocrop = config;
    nocrop.use_crop = false;

    const Manifest manifest = load_manifest(o.manifest);
    fs::create_directories(o.out);

    const EncoderSpec spec = o.encoder.spec(config);
    std::vector<std::unique_ptr<PatchEncoder>> encoders;
    encoders.push_back(make_encoder(spec));
    const BaselineSet baselines(o.baselines, (fs::path(o.out) / "captions.tsv").string());

    // The run digest covers the metric configuration and the baseline set.
    std::string basis = "remove=" + config_digest(config, encoders.front()->info().encoder_id);
    basis += ";baselines=";
    for (const auto& id : baselines.metric_ids()) basis += id + ",";
    if (fixed_bounds) basis += fmt::format(";size={},{}", format_number(fixed_bounds->small_upper),
                                           format_number(fixed_bounds->medium_upper));
    const std::string digest = sha256_hex(basis).substr(0, 16);

    const std::string records_path = (fs::path(o.out) / kRecordsFile).string();
    const auto done = resume_state(records_path, digest);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        if (!done.count(manifest.rows[i].id)) pending.push_back(i);
    }
    if (!done.empty()) {
        fmt::print(stderr, "resuming: {} of {} rows already scored\n", manifest.rows.size() - pending.size(),
                   manifest.rows.size());
    }

    const int workers = std::max(1, std::min<int>(o.workers, static_cast<int>(std::max<std::size_t>(pending.size(), 1))));
    while (static_cast<int>(encoders.size()) < workers) encoders.push_back(make_encoder(spec));

    OrderedAppender appender(records_path, pending.size(), o.stop_after);
    std::mutex fail_mutex;
    std::vector<std::pair<std::size_t, Failure>> failures;
    std::atomic<std::size_t> progress{0};
    const std::size_t report_every = std::max<std::size_t>(1, pending.size() / 10);

    parallel_for(pending.size(), workers, [&](int w, std::size_t k) {
        if (appender.stopped()) {
            appender.finish(k, std::nullopt);
            return;
        }
        const auto& row = manifest.rows[pending[k]];
        std::optional<std::string> line;
        try {
            EditedImage sample = load_sample_image(manifest, row);
            sample.id = row.id;
            const EraseMask mask = load_sample_mask(manifest, row, o.binarize_threshold);
            validate_pairing(sample, mask);

            EvaluationRecord rec;
            rec.id = row.id;
            rec.tags = row.tags;
            rec.mask_area_fraction = mask_area_fraction(mask);
            rec.mask_size_class = classify(rec.mask_area_fraction, fixed_bounds);
            rec.encoder_id = encoders[static_cast<std::size_t>(w)]->info().encoder_id;
            rec.config_digest = digest;
            const auto& enc = *encoders[static_cast<std::size_t>(w)];
            if (config.use_crop) {
                const MetricResult r = remove_score(sample, mask, enc, config);
                rec.remove_score = r.score;
                rec.crop_box = r.crop_box;
                rec.crop_fraction_in_bounds = r.crop_fraction_in_bounds;
                rec.masked_patch_count = r.masked_patch_count;
                rec.unmasked_patch_count = r.unmasked_patch_count;
            }
            try {
                const MetricResult r = remove_score(sample, mask, enc, nocrop);
                rec.remove_score_nocrop = r.score;
                if (!config.use_crop) {
                    rec.masked_patch_count = r.masked_patch_count;
                    rec.unmasked_patch_count = r.unmasked_patch_count;
                }
            } catch (const Error& e) {
                // A mask can vanish at full-image patch resolution while the crop still scores it.
                if (!config.use_crop || e.code() != ErrorCode::DegenerateMask) throw;
            }
            for (const auto& s : baselines.score(sample)) {
                rec.baselines[s.metric_id] = s.value;
                if (s.prompt) rec.prompts[s.metric_id] = *s.prompt;
            }
            line = to_json_line(rec);
        } catch (const Error& e) {
            std::lock_guard lock(fail_mutex);
            failures.push_back({k, {row.id, e.stage(), std::string(to_string(e.code())), e.detail()}});
        } catch (const std::exception& e) {
            std::lock_guard lock(fail_mutex);
            failures.push_back({k, {row.id, "unknown", "internal", e.what()}});
        }
        appender.finish(k, std::move(line));
        const std::size_t n = ++progress;
        if (n % report_every == 0 || n == pending.size()) {
            fmt::print(stderr, "[{}/{}] scored\n", n, pending.size());
        }
    });

    std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t committed = appender.committed();
    std::vector<Failure> committed_failures;
    for (const auto& [k, f] : failures) {
        if (k < committed) committed_failures.push_back(f);
    }

    if (committed < pending.size()) {
        fmt::print(stderr, "stopped after {} new record(s); rerun the same command to resume\n", appender.written());
        return kIncomplete;
    }

    const auto records = read_records(records_path);
    Analysis analysis(o, records);
    analysis.run(committed_failures);
    write_text_file((fs::path(o.out) / "report.txt").string(), analysis.text());
    write_text_file((fs::path(o.out) / "results.json").string(), analysis.results().dump(2) + "\n");
    {
        std::string f;
        for (const auto& x : committed_failures) f += fmt::format("{}\t{}\t{}\t{}\n", x.id, x.stage, x.code, x.reason);
        write_text_file((fs::path(o.out) / "failures.tsv").string(), f);
    }
    fmt::print("{}", analysis.text());
    if (!committed_failures.empty()) {
        fmt::print(stderr, "{} sample(s) failed; see {}\n", committed_failures.size(),
                   (fs::path(o.out) / "failures.tsv").string());
    }
    return kOk;
}

}  // namespace remove_eval::cli
