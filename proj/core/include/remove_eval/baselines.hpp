#pragma once

// Comparison metrics used alongside ReMOVE. The pretrained models behind
// LPIPS, captioning and CLIP are external; this module owns the adapter
// contracts, the score conventions and the caption cache.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "remove_eval/image.hpp"

namespace remove_eval {

enum class Orientation { LowerBetter, HigherBetter };

std::string_view to_string(Orientation o);

namespace metric_id {
inline constexpr std::string_view kRemove = "ReMOVE";
inline constexpr std::string_view kRemoveNoCrop = "ReMOVE-nocrop";
inline constexpr std::string_view kLpips = "LPIPS";
inline constexpr std::string_view kClipNoRef = "CS-NR";
inline constexpr std::string_view kClipFullRef = "CS-FR";
inline constexpr std::string_view kMse = "MSE";
}  // namespace metric_id

/// Orientation for a metric id. "LPIPS-<variant>" ids inherit LPIPS.
/// Throws Configuration for unknown ids.
Orientation orientation_of(std::string_view id);

struct BaselineScore {
    std::string metric_id;
    double value = 0.0;
    Orientation orientation = Orientation::LowerBetter;
    std::optional<std::string> prompt;
};

/// Mean squared pixel error against the ground truth, on [0, 1] values.
/// Reference-based stand-in that needs no model. Throws ReferenceRequired.
BaselineScore mse_score(const EditedImage& sample);

class LpipsBackend {
public:
    virtual ~LpipsBackend() = default;
    /// Network variant, e.g. "alex"; appended to the metric id when non-empty.
    virtual std::string variant() const = 0;
    virtual double distance(const RgbImage& a, const RgbImage& b) const = 0;
};

/// LPIPS graph exported to ONNX with two image inputs in [-1, 1] and a scalar output.
class OnnxLpips final : public LpipsBackend {
public:
    explicit OnnxLpips(const std::string& weights_path, std::string variant = "alex",
                       std::vector<std::string> input_names = {"in0", "in1"});
    ~OnnxLpips() override;

    std::string variant() const override { return variant_; }
    double distance(const RgbImage& a, const RgbImage& b) const override;

private:
    struct Session;
    std::string variant_;
    std::vector<std::string> input_names_;
    std::unique_ptr<Session> session_;
};

BaselineScore lpips_score(const LpipsBackend& backend, const RgbImage& edited, const RgbImage& reference);
/// Uses sample.ground_truth as reference; throws ReferenceRequired without one.
BaselineScore lpips_score(const LpipsBackend& backend, const EditedImage& sample);

class Captioner {
public:
    virtual ~Captioner() = default;
    virtual std::string caption(const RgbImage& image) const = 0;
};

/// Persistent image-digest -> caption store, one tab-separated record per line.
class CaptionCache {
public:
    /// Loads `path` if it exists; new entries are appended to it.
    explicit CaptionCache(std::string path);

    std::optional<std::string> get(const std::string& digest) const;
    void put(const std::string& digest, const std::string& caption);
    std::size_t size() const;

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

class CachingCaptioner final : public Captioner {
public:
    CachingCaptioner(const Captioner& inner, CaptionCache& cache) : inner_(inner), cache_(cache) {}
    std::string caption(const RgbImage& image) const override;

private:
    const Captioner& inner_;
    CaptionCache& cache_;
};

class ClipEmbedder {
public:
    virtual ~ClipEmbedder() = default;
    virtual std::vector<double> embed_image(const RgbImage& image) const = 0;
    virtual std::vector<double> embed_text(const std::string& text) const = 0;
};

enum class ClipMode { NoReference, FullReference };

/// CLIPScore weight w in w * max(cos(image, text), 0).
inline constexpr double kClipScoreWeight = 2.5;

BaselineScore clip_score(const ClipEmbedder& embedder, const RgbImage& image, const std::string& prompt,
                         ClipMode mode);

/// CLIPScore of the edited image against a caption of the edited image.
BaselineScore clip_score_no_reference(const Captioner& captioner, const ClipEmbedder& embedder,
                                      const EditedImage& sample);

/// CLIPScore of the edited image against a caption of the ground truth.
BaselineScore clip_score_full_reference(const Captioner& captioner, const ClipEmbedder& embedder,
                                        const EditedImage& sample);

/// Runs an external executable per request: `<executable> <request.json>`.
/// The request names a task ("caption", "embed_image", "embed_text", "lpips"),
/// image paths (PNG, written to a private temp directory) and optional text;
/// the executable prints one JSON object on stdout. Calls are serialized.
class CommandBackend {
public:
    explicit CommandBackend(std::string executable);

    /// Returns the raw JSON response text.
    std::string run(const std::string& task, const std::vector<const RgbImage*>& images,
                    const std::optional<std::string>& text) const;

    const std::string& executable() const noexcept { return executable_; }

private:
    std::string executable_;
    mutable std::mutex mutex_;
};

class CommandCaptioner final : public Captioner {
public:
    explicit CommandCaptioner(std::string executable) : backend_(std::move(executable)) {}
    std::string caption(const RgbImage& image) const override;

private:
    CommandBackend backend_;
};

class CommandClipEmbedder final : public ClipEmbedder {
public:
    explicit CommandClipEmbedder(std::string executable) : backend_(std::move(executable)) {}
    std::vector<double> embed_image(const RgbImage& image) const override;
    std::vector<double> embed_text(const std::string& text) const override;

private:
    CommandBackend backend_;
};

class CommandLpips final : public LpipsBackend {
public:
    explicit CommandLpips(std::string executable, std::string variant = {})
        : backend_(std::move(executable)), variant_(std::move(variant)) {}
    std::string variant() const override { return variant_; }
    double distance(const RgbImage& a, const RgbImage& b) const override;

private:
    CommandBackend backend_;
    std::string variant_;
};

}  // namespace remove_eval
