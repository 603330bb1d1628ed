#include "remove_eval/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "remove_eval/error.hpp"
#include "remove_eval/image_io.hpp"
#include "remove_eval/parallel.hpp"
#include "remove_eval/preprocess.hpp"

namespace remove_eval {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kShuffleBlock = 8;

// Portable draws from mt19937_64: the engine output is fully specified by the
// standard, the library distributions are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = 0;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 engine_;
};

float quantize8(double v) {
    return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
}

std::string required_string(const json& j, const char* field, const std::string& source, std::size_t line) {
    if (!j.contains(field) || !j[field].is_string() || j[field].get<std::string>().empty()) {
        throw Error(ErrorCode::Parse,
                    source + " line " + std::to_string(line) + ": missing or empty field '" + field + "'");
    }
    return j[field].get<std::string>();
}

RgbImage foreign_content(const RgbImage& bg, const DegradationSpec& spec) {
    RgbImage f(bg.width, bg.height);
    switch (spec.foreign_source) {
        case ForeignSource::InvertedColors:
            for (std::size_t i = 0; i < bg.data.size(); ++i) f.data[i] = 1.0f - bg.data[i];
            break;
        case ForeignSource::FlatRandomColor: {
            Rng rng(spec.seed);
            const float color[3] = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                                    static_cast<float>(rng.uniform())};
            for (std::size_t i = 0; i < bg.data.size(); ++i) f.data[i] = color[i % 3];
            break;
        }
        case ForeignSource::ShuffledPatches: {
            const int b = std::max(1, std::min({kShuffleBlock, bg.width, bg.height}));
            const int bx = bg.width / b;
            const int by = bg.height / b;
            std::vector<std::size_t> perm(static_cast<std::size_t>(bx) * by);
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            Rng rng(spec.seed);
            for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
            for (int y = 0; y < bg.height; ++y) {
                const int cy = std::min(y / b, by - 1);
                const int oy = std::min(y - cy * b, b - 1);
                for (int x = 0; x < bg.width; ++x) {
                    const int cx = std::min(x / b, bx - 1);
                    const int ox = std::min(x - cx * b, b - 1);
                    const std::size_t src = perm[static_cast<std::size_t>(cy) * bx + cx];
                    const int sx = static_cast<int>(src % bx) * b + ox;
                    const int sy = static_cast<int>(src / bx) * b + oy;
                    for (int c = 0; c < 3; ++c) f.at(x, y, c) = bg.at(sx, sy, c);
                }
            }
            break;
        }
    }
    return f;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string Manifest::resolve(const std::string& path) const {
    const fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (fs::path(base_dir) / p).string();
}

std::vector<SampleManifestRow> parse_manifest(std::istream& in, const std::string& source) {
    std::vector<SampleManifestRow> rows;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, source + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object()) {
            throw Error(ErrorCode::Parse, source + " line " + std::to_string(line_no) + ": expected a JSON object");
        }
        SampleManifestRow row;
        row.id = required_string(j, "id", source, line_no);
        row.edited_path = required_string(j, "edited_path", source, line_no);
        row.mask_path = required_string(j, "mask_path", source, line_no);
        if (j.contains("ground_truth_path") && !j["ground_truth_path"].is_null()) {
            row.ground_truth_path = required_string(j, "ground_truth_path", source, line_no);
        }
        if (j.contains("tags")) {
            if (!j["tags"].is_object()) {
                throw Error(ErrorCode::Parse, source + " line " + std::to_string(line_no) + ": 'tags' must be an object");
            }
            for (const auto& [k, v] : j["tags"].items()) {
                row.tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        if (auto [it, fresh] = seen.emplace(row.id, line_no); !fresh) {
            throw Error(ErrorCode::Parse, source + " line " + std::to_string(line_no) + ": duplicate id '" + row.id +
                                              "' (first on line " + std::to_string(it->second) + ")");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Manifest load_manifest(const std::string& path, bool check_files) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open manifest '" + path + "'", "load");
    Manifest m;
    m.base_dir = fs::path(path).parent_path().string();
    m.rows = parse_manifest(in, path);
    if (!check_files) return m;

    std::vector<std::string> missing;
    for (const auto& row : m.rows) {
        for (const std::string* p : {&row.edited_path, &row.mask_path}) {
            if (!fs::is_regular_file(m.resolve(*p))) missing.push_back(row.id + ": " + m.resolve(*p));
        }
        if (row.ground_truth_path && !fs::is_regular_file(m.resolve(*row.ground_truth_path))) {
            missing.push_back(row.id + ": " + m.resolve(*row.ground_truth_path));
        }
    }
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " referenced file(s) missing:";
        for (const auto& s : missing) msg += "\n  " + s;
        throw Error(ErrorCode::Validation, msg, "load");
    }
    return m;
}

void write_manifest(const std::string& path, const std::vector<SampleManifestRow>& rows) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write manifest '" + tmp + "'", "write");
        for (const auto& r : rows) {
            json j = json::object();
            j["id"] = r.id;
            j["edited_path"] = r.edited_path;
            j["mask_path"] = r.mask_path;
            j["ground_truth_path"] = r.ground_truth_path ? json(*r.ground_truth_path) : json(nullptr);
            j["tags"] = r.tags;
            out << j.dump() << '\n';
        }
        if (!out) throw Error(ErrorCode::Io, "cannot write manifest '" + tmp + "'", "write");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move manifest into place: " + ec.message(), "write");
}

EditedImage load_sample_image(const Manifest& manifest, const SampleManifestRow& row) {
    EditedImage s{row.id, load_rgb(manifest.resolve(row.edited_path)), std::nullopt};
    if (row.ground_truth_path) s.ground_truth = load_rgb(manifest.resolve(*row.ground_truth_path));
    s.validate();
    return s;
}

EraseMask load_sample_mask(const Manifest& manifest, const SampleManifestRow& row,
                           std::optional<int> binarize_threshold) {
    return load_mask(manifest.resolve(row.mask_path), binarize_threshold);
}

std::string_view to_string(MaskSizeClass c) {
    switch (c) {
        case MaskSizeClass::Small: return "small";
        case MaskSizeClass::Medium: return "medium";
        case MaskSizeClass::Large: return "large";
    }
    return "?";
}

MaskSizePartition partition_by_mask_size(std::span<const double> area_fractions, std::optional<SizeBoundaries> fixed) {
    MaskSizePartition out;
    const std::size_t n = area_fractions.size();
    if (fixed) {
        if (fixed->small_upper > fixed->medium_upper) {
            throw Error(ErrorCode::Configuration, "mask size boundaries must be ordered");
        }
        out.boundaries = *fixed;
        out.boundaries.from_terciles = false;
    } else if (n > 0) {
        std::vector<double> sorted(area_fractions.begin(), area_fractions.end());
        std::sort(sorted.begin(), sorted.end());
        out.boundaries = {sorted[n / 3], sorted[(2 * n) / 3], true};
    }
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = area_fractions[i];
        const MaskSizeClass c = f < out.boundaries.small_upper    ? MaskSizeClass::Small
                                : f < out.boundaries.medium_upper ? MaskSizeClass::Medium
                                                                  : MaskSizeClass::Large;
        out.labels.push_back(c);
        out.members[static_cast<std::size_t>(c)].push_back(i);
    }
    if (n > 0) {
        for (std::size_t k = 0; k < 3; ++k) {
            if (out.members[k].empty()) {
                out.warnings.push_back("mask size class '" + std::string(to_string(static_cast<MaskSizeClass>(k))) +
                                       "' is empty");
            }
        }
    }
    return out;
}

std::string_view to_string(ForeignSource s) {
    switch (s) {
        case ForeignSource::InvertedColors: return "inverted-colors";
        case ForeignSource::ShuffledPatches: return "shuffled-patches";
        case ForeignSource::FlatRandomColor: return "flat-random-color";
    }
    return "?";
}

ForeignSource parse_foreign_source(std::string_view s) {
    for (auto f : {ForeignSource::InvertedColors, ForeignSource::ShuffledPatches, ForeignSource::FlatRandomColor}) {
        if (s == to_string(f)) return f;
    }
    throw Error(ErrorCode::Configuration, "unknown foreign source '" + std::string(s) + "'");
}

RgbImage generate_degraded_sample(const RgbImage& background, const EraseMask& mask, const DegradationSpec& spec) {
    if (mask.width != background.width || mask.height != background.height) {
        throw Error(ErrorCode::Validation, "mask does not fit the background");
    }
    if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw Error(ErrorCode::Configuration, "alpha must lie in [0, 1]");
    RgbImage out = background;
    if (spec.alpha == 0.0) return out;
    const RgbImage foreign = foreign_content(background, spec);
    const double a = spec.alpha;
    for (int y = 0; y < background.height; ++y) {
        for (int x = 0; x < background.width; ++x) {
            if (mask.at(x, y) == 0) continue;
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) =
                    static_cast<float>((1.0 - a) * background.at(x, y, c) + a * foreign.at(x, y, c));
            }
        }
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RgbImage procedural_background(int width, int height, std::uint64_t seed) {
    Rng rng(seed);
    double c0[3], c1[3], amp[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform(0.05, 0.95);
        c1[c] = rng.uniform(0.05, 0.95);
        amp[c] = rng.uniform(0.04, 0.15);
    }
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dx = std::cos(angle), dy = std::sin(angle);
    const double freq = rng.uniform(2.0, 9.0) * 2.0 * std::numbers::pi / std::max(width, height);
    const double tex_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double fx = freq * std::cos(tex_angle), fy = freq * std::sin(tex_angle);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double noise = rng.uniform(0.01, 0.05);

    RgbImage img(width, height);
    const double cx = 0.5 * width, cy = 0.5 * height;
    const double extent = 0.5 * (std::abs(dx) * width + std::abs(dy) * height) + 1e-9;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double t = 0.5 + 0.5 * ((x - cx) * dx + (y - cy) * dy) / extent;
            const double wave = std::sin(fx * x + fy * y + phase);
            for (int c = 0; c < 3; ++c) {
                const double base = (1.0 - t) * c0[c] + t * c1[c];
                img.at(x, y, c) = quantize8(base + amp[c] * wave + noise * (rng.uniform() - 0.5));
            }
        }
    }
    return img;
}

EraseMask procedural_mask(int width, int height, std::uint64_t seed) {
    Rng rng(seed);
    const double target = rng.uniform(0.05, 0.20);
    const double aspect = rng.uniform(0.6, 1.6);
    // ellipse area = pi * a * b with b = a / aspect
    const double a = std::sqrt(target * width * height * aspect / std::numbers::pi);
    const double b = a / aspect;
    const double cx = rng.uniform(std::min(a, 0.5 * width), std::max(width - a, 0.5 * width));
    const double cy = rng.uniform(std::min(b, 0.5 * height), std::max(height - b, 0.5 * height));
    EraseMask m(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5 - cx) / a, v = (y + 0.5 - cy) / b;
            m.at(x, y) = (u * u + v * v <= 1.0) ? 1 : 0;
        }
    }
    if (m.count() == 0) m.at(static_cast<int>(cx), static_cast<int>(cy)) = 1;
    return m;
}

EraseMask rectangle_mask(int width, int height, int x0, int y0, int rect_width, int rect_height) {
    EraseMask m(width, height);
    for (int y = std::max(0, y0); y < std::min(height, y0 + rect_height); ++y) {
        for (int x = std::max(0, x0); x < std::min(width, x0 + rect_width); ++x) m.at(x, y) = 1;
    }
    return m;
}

std::vector<SampleManifestRow> generate_synthetic_corpus(const CorpusSpec& spec, const std::string& out_dir,
                                                         int workers) {
    if (spec.backgrounds.empty() || spec.masks.empty() || spec.alphas.empty() || spec.seeds.empty()) {
        throw Error(ErrorCode::Configuration, "corpus generation needs backgrounds, masks, alphas and seeds");
    }
    for (double a : spec.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::Configuration, "alpha must lie in [0, 1]");
    }
    const fs::path root(out_dir);
    const fs::path manifest_path = root / "manifest.jsonl";
    std::error_code ec;
    fs::remove(manifest_path, ec);
    for (const char* sub : {"backgrounds", "masks", "edited"}) fs::create_directories(root / sub);

    struct Job {
        std::size_t bg, mask, seed, alpha;
    };
    std::vector<Job> jobs;
    std::vector<SampleManifestRow> rows;
    for (std::size_t b = 0; b < spec.backgrounds.size(); ++b) {
        for (std::size_t m = 0; m < spec.masks.size(); ++m) {
            for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
                for (std::size_t a = 0; a < spec.alphas.size(); ++a) {
                    const auto& bg_name = spec.backgrounds[b].name;
                    const auto& mask_name = spec.masks[m].name;
                    const std::string alpha_text = format_number(spec.alphas[a]);
                    const std::string seed_text = std::to_string(spec.seeds[s]);
                    SampleManifestRow row;
                    row.id = bg_name + "__" + mask_name + "__a" + alpha_text + "__s" + seed_text;
                    row.edited_path = "edited/" + row.id + ".png";
                    row.mask_path = "masks/" + bg_name + "__" + mask_name + ".png";
                    row.ground_truth_path = "backgrounds/" + bg_name + ".png";
                    row.tags = {{"alpha", alpha_text},
                                {"seed", seed_text},
                                {"background", bg_name},
                                {"mask", mask_name},
                                {"foreign_source", std::string(to_string(spec.foreign_source))}};
                    rows.push_back(std::move(row));
                    jobs.push_back({b, m, s, a});
                }
            }
        }
    }

    std::mutex failures_mutex;
    std::vector<std::string> failures;
    auto attempt = [&](const std::string& path, auto&& write) {
        try {
            write();
        } catch (const std::exception& e) {
            std::lock_guard lock(failures_mutex);
            failures.push_back(path + ": " + e.what());
        }
    };

    // Backgrounds and fitted masks first; they are shared by many rows.
    const std::size_t pairs = spec.backgrounds.size() * spec.masks.size();
    std::vector<EraseMask> fitted(pairs);
    parallel_for(pairs, workers, [&](int, std::size_t i) {
        const std::size_t b = i / spec.masks.size();
        const std::size_t m = i % spec.masks.size();
        const RgbImage& bg = spec.backgrounds[b].image;
        const EraseMask& src = spec.masks[m].mask;
        fitted[i] = (src.width == bg.width && src.height == bg.height) ? src : resize_nearest(src, bg.width, bg.height);
        const auto mask_path = root / "masks" / (spec.backgrounds[b].name + "__" + spec.masks[m].name + ".png");
        attempt(mask_path.string(), [&] { save_mask_png(mask_path.string(), fitted[i]); });
        if (m == 0) {
            const auto bg_path = root / "backgrounds" / (spec.backgrounds[b].name + ".png");
            attempt(bg_path.string(), [&] { save_rgb_png(bg_path.string(), bg); });
        }
    });

    parallel_for(jobs.size(), workers, [&](int, std::size_t i) {
        const Job& j = jobs[i];
        const std::size_t pair = j.bg * spec.masks.size() + j.mask;
        const DegradationSpec d{spec.alphas[j.alpha], spec.foreign_source, derive_seed(spec.seeds[j.seed], pair)};
        const auto path = root / rows[i].edited_path;
        attempt(path.string(), [&] {
            save_rgb_png(path.string(), generate_degraded_sample(spec.backgrounds[j.bg].image, fitted[pair], d));
        });
    });

    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        std::string msg = std::to_string(failures.size()) + " file(s) could not be written; no manifest produced:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw Error(ErrorCode::Io, msg, "write");
    }
    write_manifest(manifest_path.string(), rows);
    return rows;
}

}  // namespace remove_eval
