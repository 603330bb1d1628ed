#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "remove_eval/image.hpp"

namespace remove_eval {

// ---------------------------------------------------------------------------
// Manifest: one JSON object per line with fields
//   id, edited_path, mask_path, ground_truth_path (string or null), tags (object)
// Paths are relative to the manifest's directory unless absolute.
// ---------------------------------------------------------------------------

struct SampleManifestRow {
    std::string id;
    std::string edited_path;
    std::string mask_path;
    std::optional<std::string> ground_truth_path;
    std::map<std::string, std::string> tags;

    friend bool operator==(const SampleManifestRow&, const SampleManifestRow&) = default;
};

struct Manifest {
    std::string base_dir;
    std::vector<SampleManifestRow> rows;

    std::string resolve(const std::string& path) const;
};

/// Parses manifest text. Throws Parse naming `source` and the line number for
/// malformed rows or missing fields, and for duplicate ids.
std::vector<SampleManifestRow> parse_manifest(std::istream& in, const std::string& source = "<manifest>");

/// Loads and validates a manifest file. With `check_files`, every referenced
/// file must exist; all missing paths are reported in one Validation error.
Manifest load_manifest(const std::string& path, bool check_files = true);

/// Writes atomically (temp file + rename).
void write_manifest(const std::string& path, const std::vector<SampleManifestRow>& rows);

/// Loads edited image (+ ground truth when listed) for a row.
EditedImage load_sample_image(const Manifest& manifest, const SampleManifestRow& row);
EraseMask load_sample_mask(const Manifest& manifest, const SampleManifestRow& row,
                           std::optional<int> binarize_threshold = std::nullopt);

// ---------------------------------------------------------------------------
// Mask-size classes
// ---------------------------------------------------------------------------

enum class MaskSizeClass { Small = 0, Medium = 1, Large = 2 };

std::string_view to_string(MaskSizeClass c);

/// small: f < small_upper; medium: small_upper <= f < medium_upper; large: rest.
struct SizeBoundaries {
    double small_upper = 0.0;
    double medium_upper = 0.0;
    bool from_terciles = true;
};

struct MaskSizePartition {
    SizeBoundaries boundaries;
    std::vector<MaskSizeClass> labels;
    std::array<std::vector<std::size_t>, 3> members;
    std::vector<std::string> warnings;
};

/// Labels each area fraction. Without `fixed`, boundaries are the empirical
/// terciles sorted[n/3] and sorted[2n/3]. Warns when a class comes out empty.
MaskSizePartition partition_by_mask_size(std::span<const double> area_fractions,
                                         std::optional<SizeBoundaries> fixed = std::nullopt);

// ---------------------------------------------------------------------------
// Synthetic degradation
// ---------------------------------------------------------------------------

enum class ForeignSource { InvertedColors, ShuffledPatches, FlatRandomColor };

std::string_view to_string(ForeignSource s);
/// Accepts "inverted-colors", "shuffled-patches", "flat-random-color".
ForeignSource parse_foreign_source(std::string_view s);

struct DegradationSpec {
    double alpha = 0.0;
    ForeignSource foreign_source = ForeignSource::FlatRandomColor;
    std::uint64_t seed = 0;
};

/// Inside the mask: (1 - alpha) * background + alpha * foreign; outside: the
/// background, untouched. Deterministic in (background, mask, spec).
RgbImage generate_degraded_sample(const RgbImage& background, const EraseMask& mask, const DegradationSpec& spec);

/// Seed for a sub-stream, mixing a base seed with a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Smooth two-colour gradient plus oriented sinusoid texture and fine noise,
/// quantized to 8-bit levels so it survives a PNG round trip unchanged.
RgbImage procedural_background(int width, int height, std::uint64_t seed);

/// Filled axis-aligned ellipse covering roughly 5-20 % of the image.
EraseMask procedural_mask(int width, int height, std::uint64_t seed);

EraseMask rectangle_mask(int width, int height, int x0, int y0, int rect_width, int rect_height);

struct NamedImage {
    std::string name;
    RgbImage image;
};

struct NamedMask {
    std::string name;
    EraseMask mask;
};

struct CorpusSpec {
    std::vector<NamedImage> backgrounds;
    std::vector<NamedMask> masks;
    std::vector<double> alphas;
    std::vector<std::uint64_t> seeds;
    ForeignSource foreign_source = ForeignSource::FlatRandomColor;
};

/// Writes backgrounds/, masks/, edited/ and finally manifest.jsonl under
/// `out_dir`. Row order: background, mask, seed, alpha. The foreign content for
/// a row depends on (seed, background index, mask index) only, so an alpha
/// sweep blends toward the same content. Masks of a different size are
/// resized to the background with nearest neighbour. No manifest is written if
/// any file fails; the error lists every failed file.
std::vector<SampleManifestRow> generate_synthetic_corpus(const CorpusSpec& spec, const std::string& out_dir,
                                                         int workers = 1);

/// Shortest round-trip decimal text for a double.
std::string format_number(double v);

}  // namespace remove_eval
