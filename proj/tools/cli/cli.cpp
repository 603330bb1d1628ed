#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>

#include "commands.hpp"
#include "plot.hpp"
#include "remove_eval/datasets.hpp"
#include "remove_eval/image_io.hpp"
#include "remove_eval/metric.hpp"

namespace remove_eval::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io:
        case ErrorCode::Load: return kIo;
        case ErrorCode::DegenerateMask: return kDegenerateMask;
        case ErrorCode::EncoderFailure:
        case ErrorCode::AdapterContract: return kEncoderFailure;
        case ErrorCode::Configuration:
        case ErrorCode::ReferenceRequired: return kConfiguration;
        case ErrorCode::Validation:
        case ErrorCode::Parse:
        case ErrorCode::UndefinedCorrelation: return kValidation;
        case ErrorCode::ZeroVector: return kZeroVector;
    }
    return kInternal;
}

// ---------------------------------------------------------------------------
// option helpers

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            const auto b = cur.find_first_not_of(' ');
            const auto e = cur.find_last_not_of(' ');
            if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Configuration, fmt::format("{}: '{}' is not a number", what, item));
        }
    }
    return out;
}

std::optional<SizeBoundaries> parse_size_bounds(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto v = parse_doubles(text, "--size-bounds");
    if (v.size() != 2 || !(v[0] < v[1])) {
        throw Error(ErrorCode::Configuration, "--size-bounds expects two increasing fractions, e.g. 0.05,0.15");
    }
    return SizeBoundaries{v[0], v[1], false};
}

BinningMode parse_binning(const std::string& text) {
    if (text == "equal-count") return BinningMode::EqualCount;
    if (text == "equal-width") return BinningMode::EqualWidth;
    throw Error(ErrorCode::Configuration, "--binning must be equal-count or equal-width");
}

CorrelationMode parse_correlation_mode(const std::string& text) {
    if (text == "per-record") return CorrelationMode::PerRecord;
    if (text == "per-bin") return CorrelationMode::PerBin;
    throw Error(ErrorCode::Configuration, "--correlation must be per-record or per-bin");
}

CorrelationEstimator parse_estimator(const std::string& text) {
    if (text == "pearson") return CorrelationEstimator::Pearson;
    if (text == "spearman") return CorrelationEstimator::Spearman;
    throw Error(ErrorCode::Configuration, "--estimator must be pearson or spearman");
}

std::string auto_reference(const std::vector<EvaluationRecord>& records) {
    if (records.empty()) return {};
    auto on_all = [&](const std::string& id) {
        return std::all_of(records.begin(), records.end(), [&](const auto& r) { return r.baselines.count(id) > 0; });
    };
    for (const auto& [id, value] : records.front().baselines) {
        if (id.rfind(metric_id::kLpips, 0) == 0 && on_all(id)) return id;
    }
    if (on_all(std::string(metric_id::kMse))) return std::string(metric_id::kMse);
    return {};
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'", "output");
}

EncoderSpec EncoderOptions::spec(const MetricConfig& config) const {
    EncoderSpec s;
    s.encoder_id = encoder;
    s.weights_path = weights;
    if (s.weights_path.empty()) {
        if (const char* dir = std::getenv(kWeightsEnv)) s.weights_path = dir;
    }
    s.input_side = config.input_side;
    s.patch_size = config.patch_size;
    s.normalization_id = normalization;
    if (layout == "nchw") {
        s.layout = FeatureLayout::Nchw;
    } else if (layout == "nlc") {
        s.layout = FeatureLayout::Nlc;
    } else {
        throw Error(ErrorCode::Configuration, "--layout must be nchw or nlc");
    }
    return s;
}

MetricConfig MetricOptions::config() const {
    MetricConfig c;
    c.use_crop = !no_crop;
    c.target_mask_fraction = target_fraction;
    c.patch_mask_threshold = patch_threshold;
    c.input_side = input_side;
    c.patch_size = patch_size;
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// baselines

BaselineSet::BaselineSet(const BaselineOptions& options, const std::string& default_cache_path) {
    std::set<std::string> wanted;
    if (options.baselines != "none") {
        for (const auto& b : split_list(options.baselines)) {
            if (b != "mse" && b != "lpips" && b != "cs-nr" && b != "cs-fr") {
                throw Error(ErrorCode::Configuration,
                            "unknown baseline '" + b + "' (expected none or a list of mse, lpips, cs-nr, cs-fr)");
            }
            wanted.insert(b);
        }
    }
    if (wanted.count("mse")) {
        mse_ = true;
        ids_.emplace_back(metric_id::kMse);
    }
    if (wanted.count("lpips")) {
        std::string weights = options.lpips_weights;
        if (weights.empty() && options.lpips_cmd.empty()) {
            if (const char* dir = std::getenv(kWeightsEnv)) {
                const auto candidate = fs::path(dir) / ("lpips_" + options.lpips_variant + ".onnx");
                if (fs::is_regular_file(candidate)) weights = candidate.string();
            }
        }
        if (!options.lpips_cmd.empty()) {
            lpips_ = std::make_unique<CommandLpips>(options.lpips_cmd, options.lpips_variant);
        } else if (!weights.empty()) {
            lpips_ = std::make_unique<OnnxLpips>(weights, options.lpips_variant);
        } else {
            throw Error(ErrorCode::Load,
                        "baseline 'lpips' needs --lpips-weights <model.onnx>, --lpips-cmd <executable>, or lpips_" +
                            options.lpips_variant + ".onnx in $" + kWeightsEnv,
                        "load");
        }
        ids_.push_back(lpips_->variant().empty() ? std::string(metric_id::kLpips)
                                                 : std::string(metric_id::kLpips) + "-" + lpips_->variant());
    }
    cs_nr_ = wanted.count("cs-nr") > 0;
    cs_fr_ = wanted.count("cs-fr") > 0;
    if (cs_nr_ || cs_fr_) {
        if (options.caption_cmd.empty() || options.clip_cmd.empty()) {
            throw Error(ErrorCode::Load, "CLIPScore baselines need --caption-cmd and --clip-cmd executables", "load");
        }
        raw_captioner_ = std::make_unique<CommandCaptioner>(options.caption_cmd);
        cache_ = std::make_unique<CaptionCache>(options.caption_cache.empty() ? default_cache_path
                                                                               : options.caption_cache);
        captioner_ = std::make_unique<CachingCaptioner>(*raw_captioner_, *cache_);
        clip_ = std::make_unique<CommandClipEmbedder>(options.clip_cmd);
        if (cs_nr_) ids_.emplace_back(metric_id::kClipNoRef);
        if (cs_fr_) ids_.emplace_back(metric_id::kClipFullRef);
    }
}

BaselineSet::~BaselineSet() = default;

std::vector<BaselineScore> BaselineSet::score(const EditedImage& sample) const {
    std::vector<BaselineScore> out;
    if (mse_) out.push_back(mse_score(sample));
    if (lpips_) out.push_back(lpips_score(*lpips_, sample));
    if (cs_nr_) out.push_back(clip_score_no_reference(*captioner_, *clip_, sample));
    if (cs_fr_) out.push_back(clip_score_full_reference(*captioner_, *clip_, sample));
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// shared flag registration

void add_encoder_flags(CLI::App& cmd, EncoderOptions& enc, MetricOptions& metric) {
    cmd.add_option("--encoder", enc.encoder, "Encoder backend id")->capture_default_str();
    cmd.add_option("--weights", enc.weights,
                   std::string("Encoder weights file or directory (default $") + kWeightsEnv + ")");
    cmd.add_option("--normalization", enc.normalization, "Override normalization: identity, imagenet, clip");
    cmd.add_option("--layout", enc.layout, "ONNX feature layout: nchw or nlc")->capture_default_str();
    cmd.add_flag("--no-crop", metric.no_crop, "Score the whole image without the square crop");
    cmd.add_option("--target-fraction", metric.target_fraction, "Mask fraction targeted by the crop")
        ->capture_default_str();
    cmd.add_option("--patch-threshold", metric.patch_threshold, "Masked-pixel fraction that marks a patch")
        ->capture_default_str();
    cmd.add_option("--input-side", metric.input_side, "Encoder input side in pixels")->capture_default_str();
    cmd.add_option("--patch-size", metric.patch_size, "Encoder patch size in pixels")->capture_default_str();
}

void add_baseline_flags(CLI::App& cmd, BaselineOptions& b) {
    cmd.add_option("--baselines", b.baselines, "none, or comma list of mse, lpips, cs-nr, cs-fr")
        ->capture_default_str();
    cmd.add_option("--lpips-weights", b.lpips_weights, "LPIPS model exported to ONNX");
    cmd.add_option("--lpips-cmd", b.lpips_cmd, "External LPIPS executable");
    cmd.add_option("--lpips-variant", b.lpips_variant, "LPIPS network variant tag")->capture_default_str();
    cmd.add_option("--caption-cmd", b.caption_cmd, "External captioning executable");
    cmd.add_option("--clip-cmd", b.clip_cmd, "External CLIP embedding executable");
    cmd.add_option("--caption-cache", b.caption_cache, "Caption cache file");
}

json result_json(const MetricResult& r) {
    json j = json::object();
    j["score"] = r.score;
    j["masked_patch_count"] = r.masked_patch_count;
    j["unmasked_patch_count"] = r.unmasked_patch_count;
    j["crop_box"] = r.crop_box ? json::array({r.crop_box->x0, r.crop_box->y0, r.crop_box->side}) : json(nullptr);
    if (r.crop_box) {
        j["crop_mask_fraction"] = r.crop_mask_fraction;
        j["crop_fraction_in_bounds"] = r.crop_fraction_in_bounds;
    }
    j["encoder_id"] = r.encoder_id;
    j["config_digest"] = r.config_digest;
    return j;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
    std::string image;
    std::string mask;
    std::string ground_truth;
    std::string json_path;
    std::optional<int> binarize_threshold;
    EncoderOptions encoder;
    MetricOptions metric;
    BaselineOptions baselines;
};

int cmd_score(const ScoreOptions& o) {
    const MetricConfig config = o.metric.config();
    EditedImage sample;
    sample.id = fs::path(o.image).stem().string();
    sample.pixels = load_rgb(o.image);
    if (!o.ground_truth.empty()) sample.ground_truth = load_rgb(o.ground_truth);
    const EraseMask mask = load_mask(o.mask, o.binarize_threshold);

    const auto encoder = make_encoder(o.encoder.spec(config));
    const MetricResult r = remove_score(sample, mask, *encoder, config);

    fmt::print("ReMOVE: {:.6f}\n", r.score);
    fmt::print("encoder: {}\nconfig_digest: {}\n", r.encoder_id, r.config_digest);
    fmt::print("patches: masked {}, unmasked {}\n", r.masked_patch_count, r.unmasked_patch_count);
    if (r.crop_box) {
        fmt::print("crop_box: x0={} y0={} side={} (mask fraction {:.4f}{})\n", r.crop_box->x0, r.crop_box->y0,
                   r.crop_box->side, r.crop_mask_fraction, r.crop_fraction_in_bounds ? "" : ", outside band");
    } else {
        fmt::print("crop_box: none\n");
    }

    json j = result_json(r);
    j["id"] = sample.id;
    j["mask_area_fraction"] = mask_area_fraction(mask);
    const BaselineSet baselines(o.baselines,
                                (fs::path(o.image).parent_path() / "captions.tsv").string());
    if (!baselines.empty()) {
        j["baselines"] = json::object();
        for (const auto& s : baselines.score(sample)) {
            fmt::print("{}: {:.6f} ({})\n", s.metric_id, s.value, to_string(s.orientation));
            j["baselines"][s.metric_id] = s.value;
            if (s.prompt) j["prompts"][s.metric_id] = *s.prompt;
        }
    }
    if (!o.json_path.empty()) write_text_file(o.json_path, j.dump(2) + "\n");
    return kOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
    std::string out;
    std::string backgrounds_dir;
    std::string masks_dir;
    int procedural_backgrounds = 0;
    int procedural_masks = 0;
    int width = 256;
    int height = 256;
    std::string alphas = "0,0.25,0.5,0.75,1";
    std::uint64_t seed = 0;
    int n_seeds = 1;
    std::string foreign = "flat-random-color";
    std::optional<int> binarize_threshold;
    int workers = 1;
};

std::vector<fs::path> png_files(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: '" + dir + "'", "input");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::Validation, "no PNG files in '" + dir + "'", "input");
    return files;
}

int cmd_generate(const GenerateOptions& o) {
    CorpusSpec spec;
    spec.foreign_source = parse_foreign_source(o.foreign);
    spec.alphas = parse_doubles(o.alphas, "--alphas");
    if (o.n_seeds < 1) throw Error(ErrorCode::Configuration, "--n-seeds must be >= 1");
    for (int i = 0; i < o.n_seeds; ++i) spec.seeds.push_back(o.seed + static_cast<std::uint64_t>(i));

    if (!o.backgrounds_dir.empty()) {
        for (const auto& p : png_files(o.backgrounds_dir)) spec.backgrounds.push_back({p.stem().string(), load_rgb(p)});
    }
    for (int i = 0; i < o.procedural_backgrounds; ++i) {
        spec.backgrounds.push_back({fmt::format("bg{:03d}", i),
                                    procedural_background(o.width, o.height, derive_seed(o.seed, 0x10000u + i))});
    }
    if (!o.masks_dir.empty()) {
        for (const auto& p : png_files(o.masks_dir)) {
            spec.masks.push_back({p.stem().string(), load_mask(p, o.binarize_threshold)});
        }
    }
    for (int i = 0; i < o.procedural_masks; ++i) {
        spec.masks.push_back(
            {fmt::format("m{:02d}", i), procedural_mask(o.width, o.height, derive_seed(o.seed, 0x20000u + i))});
    }
    if (spec.backgrounds.empty() || spec.masks.empty()) {
        throw Error(ErrorCode::Configuration,
                    "generate needs backgrounds (--backgrounds or --procedural-backgrounds) and masks "
                    "(--masks or --procedural-masks)");
    }
    const auto rows = generate_synthetic_corpus(spec, o.out, o.workers);
    fmt::print("wrote {} rows to {}\n", rows.size(), (fs::path(o.out) / "manifest.jsonl").string());
    return kOk;
}

// ---------------------------------------------------------------------------
// agreement

struct AgreementOptions {
    std::string pairs;
    std::string records;
    std::string metrics;
    std::string json_path;
    bool allow_mixed = false;
};

int cmd_agreement(const AgreementOptions& o) {
    const auto pairs = load_preference_pairs(o.pairs);
    const auto records = read_records(o.records, o.allow_mixed);

    std::vector<std::string> metrics = split_list(o.metrics);
    if (metrics.empty()) {
        std::set<std::string> seen;
        auto add = [&](const std::string& id) {
            if (seen.insert(id).second) metrics.push_back(id);
        };
        for (const auto& r : records) {
            if (r.remove_score) add(std::string(metric_id::kRemove));
            if (r.remove_score_nocrop) add(std::string(metric_id::kRemoveNoCrop));
        }
        for (const auto& r : records) {
            for (const auto& [id, v] : r.baselines) add(id);
        }
    }
    if (metrics.empty()) throw Error(ErrorCode::Validation, "records carry no metrics", "agreement");

    json j = json::object();
    j["pairs"] = pairs.size();
    j["tie_policy"] = "ties earn 0.5";
    j["metrics"] = json::array();
    fmt::print("{:<18} {:<14} {:>10} {:>7}\n", "metric", "orientation", "agreement", "pairs");
    for (const auto& m : metrics) {
        std::map<std::string, double> scores;
        for (const auto& r : records) {
            if (auto v = metric_value(r, m)) scores[r.id] = *v;
        }
        const Orientation orient = orientation_of(m);
        const double rate = agreement_rate(pairs, scores, orient);
        fmt::print("{:<18} {:<14} {:>9.1f}% {:>7}\n", m, to_string(orient), 100.0 * rate, pairs.size());
        j["metrics"].push_back({{"metric", m}, {"orientation", std::string(to_string(orient))}, {"agreement", rate}});
    }
    if (!o.json_path.empty()) write_text_file(o.json_path, j.dump(2) + "\n");
    return kOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotOptions {
    std::string records;
    std::string out;
    std::string reference;
    std::string targets = "ReMOVE";
    std::string binning = "equal-count";
    int n_bins = 20;
    bool allow_mixed = false;
};

int cmd_plot(const PlotOptions& o) {
    const auto records = read_records(o.records, o.allow_mixed);
    const std::string reference = o.reference.empty() ? auto_reference(records) : o.reference;
    if (reference.empty()) {
        throw Error(ErrorCode::Validation, "no reference metric on every record; pass --reference", "plot");
    }
    const int bins = std::min<int>(o.n_bins, static_cast<int>(records.size()));
    std::vector<Series> series;
    for (const auto& target : split_list(o.targets)) {
        const auto curve = bin_by_reference(records, metric_ref(reference), target, bins, parse_binning(o.binning));
        series.push_back({target, curve.means});
    }
    plot_series(o.out, fmt::format("mean per bin, sorted by {} (best first)", reference),
                fmt::format("bin ({} records, {} bins)", records.size(), bins), "mean", series);
    fmt::print("wrote {}\n", o.out);
    return kOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Reference-free object-erasure scoring and evaluation harness", "remove-eval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "remove-eval 0.1.0");
    std::function<int()> action;

    ScoreOptions score;
    auto* s = app.add_subcommand("score", "Score one image/mask pair");
    s->add_option("--image", score.image, "Edited image (PNG)")->required()->check(CLI::ExistingFile);
    s->add_option("--mask", score.mask, "Erase mask (PNG, 0 keep / 255 inpainted)")->required()->check(CLI::ExistingFile);
    s->add_option("--ground-truth", score.ground_truth, "Ground truth image for reference baselines")
        ->check(CLI::ExistingFile);
    s->add_option("--json", score.json_path, "Also write the result as JSON");
    s->add_option("--binarize-threshold", score.binarize_threshold, "Binarize grey masks at this level (1-255)");
    add_encoder_flags(*s, score.encoder, score.metric);
    add_baseline_flags(*s, score.baselines);
    s->callback([&] { action = [&] { return cmd_score(score); }; });

    EvaluateOptions eval;
    auto* e = app.add_subcommand("evaluate", "Score a manifest and write records, tables and plots");
    e->add_option("manifest", eval.manifest, "Manifest (JSON lines)")->required();
    e->add_option("--out", eval.out, "Output directory")->required();
    e->add_option("--workers", eval.workers, "Scoring threads")->capture_default_str();
    e->add_option("--n-bins", eval.n_bins, "Bins for curves")->capture_default_str();
    e->add_option("--partition", eval.partition, "none or mask-size")->capture_default_str();
    e->add_option("--size-bounds", eval.size_bounds, "Fixed small/medium and medium/large area fractions");
    e->add_option("--reference", eval.reference, "Reference metric for curves and rho (default: LPIPS, else MSE)");
    e->add_option("--binning", eval.binning, "equal-count or equal-width")->capture_default_str();
    e->add_option("--correlation", eval.correlation, "per-record or per-bin")->capture_default_str();
    e->add_option("--estimator", eval.estimator, "pearson or spearman")->capture_default_str();
    e->add_option("--corpus-label", eval.corpus_label, "Corpus name in tables (default: manifest stem)");
    e->add_option("--binarize-threshold", eval.binarize_threshold, "Binarize grey masks at this level (1-255)");
    e->add_option("--stop-after", eval.stop_after, "Stop after writing this many new records (resume later)");
    add_encoder_flags(*e, eval.encoder, eval.metric);
    add_baseline_flags(*e, eval.baselines);
    e->callback([&] { action = [&] { return cmd_evaluate(eval); }; });

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic degradation corpus with a manifest");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--backgrounds", gen.backgrounds_dir, "Directory of background PNGs");
    g->add_option("--masks", gen.masks_dir, "Directory of mask PNGs");
    g->add_option("--procedural-backgrounds", gen.procedural_backgrounds, "Add N procedural backgrounds");
    g->add_option("--procedural-masks", gen.procedural_masks, "Add N procedural ellipse masks");
    g->add_option("--width", gen.width, "Procedural image width")->capture_default_str();
    g->add_option("--height", gen.height, "Procedural image height")->capture_default_str();
    g->add_option("--alphas", gen.alphas, "Comma list of blend levels")->capture_default_str();
    g->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
    g->add_option("--n-seeds", gen.n_seeds, "Seeds seed..seed+n-1")->capture_default_str();
    g->add_option("--foreign", gen.foreign, "inverted-colors, shuffled-patches or flat-random-color")
        ->capture_default_str();
    g->add_option("--binarize-threshold", gen.binarize_threshold, "Binarize grey masks at this level (1-255)");
    g->add_option("--workers", gen.workers, "Writer threads")->capture_default_str();
    g->callback([&] { action = [&] { return cmd_generate(gen); }; });

    AgreementOptions agree;
    auto* a = app.add_subcommand("agreement", "Agreement of metric orderings with pairwise human preferences");
    a->add_option("--pairs", agree.pairs, "CSV with rater,image_a,image_b,choice")->required();
    a->add_option("--records", agree.records, "Records file from evaluate")->required();
    a->add_option("--metrics", agree.metrics, "Comma list of metric ids (default: all present)");
    a->add_option("--json", agree.json_path, "Also write the report as JSON");
    a->add_flag("--allow-mixed-configs", agree.allow_mixed, "Accept records from several configurations");
    a->callback([&] { action = [&] { return cmd_agreement(agree); }; });

    PlotOptions plot;
    auto* p = app.add_subcommand("plot", "Plot bin curves from a records file");
    p->add_option("--records", plot.records, "Records file from evaluate")->required();
    p->add_option("--out", plot.out, "Output PNG")->required();
    p->add_option("--reference", plot.reference, "Sort metric (default: LPIPS, else MSE)");
    p->add_option("--targets", plot.targets, "Comma list of metrics to average per bin")->capture_default_str();
    p->add_option("--binning", plot.binning, "equal-count or equal-width")->capture_default_str();
    p->add_option("--n-bins", plot.n_bins, "Number of bins")->capture_default_str();
    p->add_flag("--allow-mixed-configs", plot.allow_mixed, "Accept records from several configurations");
    p->callback([&] { action = [&] { return cmd_plot(plot); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        return action();
    } catch (const Error& err) {
        fmt::print(stderr, "error: {}\n", err.what());
        return exit_code_for(err.code());
    } catch (const std::exception& err) {
        fmt::print(stderr, "error: {}\n", err.what());
        return kInternal;
    }
}

}  // namespace remove_eval::cli
