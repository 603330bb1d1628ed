#pragma once

#include <memory>
#include <string>
#include <vector>

#include "remove_eval/core.hpp"
#include "remove_eval/preprocess.hpp"

namespace remove_eval {

struct EncoderInfo {
    std::string encoder_id;
    int patch_size = 16;
    int input_side = 1024;
    std::string normalization_id;

    int grid_side() const noexcept { return input_side / patch_size; }
};

/// Patch-encoder backend. encode() must be deterministic for identical input
/// bytes and safe to call concurrently.
class PatchEncoder {
public:
    virtual ~PatchEncoder() = default;

    virtual const EncoderInfo& info() const noexcept = 0;

    /// Throws Configuration when `image` does not match info(), EncoderFailure
    /// when the backend fails, AdapterContract when its output is malformed.
    virtual PatchEmbeddingGrid encode(const PreprocessedImage& image) const = 0;

protected:
    void check_input(const PreprocessedImage& image) const;
};

/// Closed-form encoder: per patch (mean R, mean G, mean B, std R, std G, std B)
/// with population standard deviation. Used as the testing oracle backend.
class MockPoolingEncoder final : public PatchEncoder {
public:
    static constexpr const char* kId = "mock-pooling";
    static constexpr int kDim = 6;

    explicit MockPoolingEncoder(int input_side = 1024, int patch_size = 16);

    const EncoderInfo& info() const noexcept override { return info_; }
    PatchEmbeddingGrid encode(const PreprocessedImage& image) const override;

private:
    EncoderInfo info_;
};

enum class FeatureLayout {
    Nchw,  ///< [1, d_f, rows, cols], e.g. a SAM image-encoder neck
    Nlc,   ///< [1, rows * cols, d_f], token sequence without class token
};

/// ViT image encoder exported to ONNX, run through OpenCV's DNN module.
/// Calls to encode() are serialized internally.
class OnnxVitEncoder final : public PatchEncoder {
public:
    OnnxVitEncoder(EncoderInfo info, const std::string& weights_path, FeatureLayout layout = FeatureLayout::Nchw);
    ~OnnxVitEncoder() override;

    const EncoderInfo& info() const noexcept override { return info_; }
    PatchEmbeddingGrid encode(const PreprocessedImage& image) const override;

private:
    struct Session;
    EncoderInfo info_;
    FeatureLayout layout_;
    std::unique_ptr<Session> session_;
};

struct EncoderSpec {
    std::string encoder_id = MockPoolingEncoder::kId;
    /// Model file, or a directory searched for the backend's default file name.
    std::string weights_path;
    int input_side = 1024;
    int patch_size = 16;
    /// Empty selects the backend default.
    std::string normalization_id;
    FeatureLayout layout = FeatureLayout::Nchw;
};

/// Registered encoder ids.
std::vector<std::string> registered_encoders();

/// Builds a backend for `spec.encoder_id`: "mock-pooling", "onnx-vit", or one
/// of the SAM-geometry aliases "sam-vit-h", "sam-vit-l", "sam-vit-b".
/// Throws Configuration for unknown ids and Load for missing weights.
std::unique_ptr<PatchEncoder> make_encoder(const EncoderSpec& spec);

}  // namespace remove_eval
