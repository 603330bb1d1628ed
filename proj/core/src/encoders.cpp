#include "remove_eval/encoders.hpp"

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include <cmath>
#include <filesystem>
#include <mutex>

#include "remove_eval/error.hpp"

namespace remove_eval {

namespace fs = std::filesystem;

void PatchEncoder::check_input(const PreprocessedImage& image) const {
    const EncoderInfo& i = info();
    if (image.side != i.input_side) {
        throw Error(ErrorCode::Configuration,
                    "encoder '" + i.encoder_id + "' expects input side " + std::to_string(i.input_side) +
                        ", got " + std::to_string(image.side),
                    "encode");
    }
    if (image.normalization_id != i.normalization_id) {
        throw Error(ErrorCode::Configuration,
                    "encoder '" + i.encoder_id + "' expects normalization '" + i.normalization_id + "', got '" +
                        image.normalization_id + "'",
                    "encode");
    }
    if (image.chw.size() != static_cast<std::size_t>(image.side) * image.side * 3) {
        throw Error(ErrorCode::Configuration, "preprocessed buffer has the wrong size", "encode");
    }
}

MockPoolingEncoder::MockPoolingEncoder(int input_side, int patch_size)
    : info_{kId, patch_size, input_side, "identity"} {
    if (patch_size < 1 || input_side % patch_size != 0) {
        throw Error(ErrorCode::Configuration, "mock encoder input side must be a multiple of the patch size");
    }
}

PatchEmbeddingGrid MockPoolingEncoder::encode(const PreprocessedImage& image) const {
    check_input(image);
    const int p = info_.patch_size;
    const int g = info_.grid_side();
    PatchEmbeddingGrid grid{g, g, kDim, p, info_.encoder_id, {}};
    grid.features.resize(static_cast<std::size_t>(g) * g * kDim);
    const double n = static_cast<double>(p) * p;

    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            double* out = &grid.features[(static_cast<std::size_t>(r) * g + c) * kDim];
            for (int ch = 0; ch < 3; ++ch) {
                double sum = 0.0;
                for (int y = r * p; y < (r + 1) * p; ++y) {
                    for (int x = c * p; x < (c + 1) * p; ++x) sum += image.at(ch, y, x);
                }
                const double mean = sum / n;
                double ss = 0.0;
                for (int y = r * p; y < (r + 1) * p; ++y) {
                    for (int x = c * p; x < (c + 1) * p; ++x) {
                        const double d = image.at(ch, y, x) - mean;
                        ss += d * d;
                    }
                }
                out[ch] = mean;
                out[3 + ch] = std::sqrt(ss / n);
            }
        }
    }
    return grid;
}

struct OnnxVitEncoder::Session {
    std::mutex mutex;
    cv::dnn::Net net;
};

OnnxVitEncoder::OnnxVitEncoder(EncoderInfo info, const std::string& weights_path, FeatureLayout layout)
    : info_(std::move(info)), layout_(layout), session_(std::make_unique<Session>()) {
    if (info_.normalization_id.empty()) {
        throw Error(ErrorCode::Configuration, "encoder '" + info_.encoder_id + "' declares no normalization");
    }
    if (weights_path.empty() || !fs::is_regular_file(weights_path)) {
        throw Error(ErrorCode::Load,
                    "encoder '" + info_.encoder_id + "' needs an ONNX image-encoder file; not found: '" +
                        weights_path + "'",
                    "load");
    }
    try {
        session_->net = cv::dnn::readNetFromONNX(weights_path);
        session_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
        session_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::Load, "failed to load '" + weights_path + "': " + e.what(), "load");
    }
    if (session_->net.empty()) {
        throw Error(ErrorCode::Load, "model '" + weights_path + "' has no layers", "load");
    }
}

OnnxVitEncoder::~OnnxVitEncoder() = default;

PatchEmbeddingGrid OnnxVitEncoder::encode(const PreprocessedImage& image) const {
    check_input(image);
    const int side = image.side;
    const int blob_shape[] = {1, 3, side, side};
    // The blob aliases image.chw; readers only.
    cv::Mat blob(4, blob_shape, CV_32F, const_cast<float*>(image.chw.data()));

    cv::Mat out;
    try {
        std::lock_guard lock(session_->mutex);
        session_->net.setInput(blob);
        out = session_->net.forward().clone();
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::EncoderFailure, "backend '" + info_.encoder_id + "' failed: " + e.what(), "encode");
    }

    const int g = info_.grid_side();
    PatchEmbeddingGrid grid{g, g, 0, info_.patch_size, info_.encoder_id, {}};
    auto shape_str = [&] {
        std::string s = "[";
        for (int i = 0; i < out.dims; ++i) s += (i ? "," : "") + std::to_string(out.size[i]);
        return s + "]";
    };
    const float* src = out.ptr<float>();
    if (layout_ == FeatureLayout::Nchw) {
        if (out.dims != 4 || out.size[0] != 1 || out.size[2] != g || out.size[3] != g) {
            throw Error(ErrorCode::AdapterContract,
                        "expected output [1,d," + std::to_string(g) + "," + std::to_string(g) + "], got " + shape_str(),
                        "encode");
        }
        grid.dim = out.size[1];
        const std::size_t plane = static_cast<std::size_t>(g) * g;
        grid.features.resize(plane * grid.dim);
        for (std::size_t cell = 0; cell < plane; ++cell) {
            for (int k = 0; k < grid.dim; ++k) grid.features[cell * grid.dim + k] = src[k * plane + cell];
        }
    } else {
        if (out.dims != 3 || out.size[0] != 1 || out.size[1] != g * g) {
            throw Error(ErrorCode::AdapterContract,
                        "expected output [1," + std::to_string(g * g) + ",d], got " + shape_str(), "encode");
        }
        grid.dim = out.size[2];
        grid.features.assign(src, src + static_cast<std::size_t>(g) * g * grid.dim);
    }
    for (double v : grid.features) {
        if (!std::isfinite(v)) throw Error(ErrorCode::EncoderFailure, "backend produced non-finite features", "encode");
    }
    return grid;
}

namespace {

struct Registration {
    const char* id;
    const char* default_file;
};

constexpr Registration kOnnxBackends[] = {
    {"onnx-vit", "image_encoder.onnx"},
    {"sam-vit-h", "sam_vit_h_image_encoder.onnx"},
    {"sam-vit-l", "sam_vit_l_image_encoder.onnx"},
    {"sam-vit-b", "sam_vit_b_image_encoder.onnx"},
};

}  // namespace

std::vector<std::string> registered_encoders() {
    std::vector<std::string> ids{MockPoolingEncoder::kId};
    for (const auto& r : kOnnxBackends) ids.emplace_back(r.id);
    return ids;
}

std::unique_ptr<PatchEncoder> make_encoder(const EncoderSpec& spec) {
    if (spec.encoder_id == MockPoolingEncoder::kId) {
        return std::make_unique<MockPoolingEncoder>(spec.input_side, spec.patch_size);
    }
    for (const auto& r : kOnnxBackends) {
        if (spec.encoder_id != r.id) continue;
        EncoderInfo info{spec.encoder_id, spec.patch_size, spec.input_side,
                         spec.normalization_id.empty() ? "imagenet" : spec.normalization_id};
        const bool sam = spec.encoder_id.rfind("sam-", 0) == 0;
        if (sam && (spec.input_side != 1024 || spec.patch_size != 16)) {
            throw Error(ErrorCode::Configuration, "'" + spec.encoder_id + "' has fixed 1024 px input and 16 px patches");
        }
        std::string path = spec.weights_path;
        if (path.empty() || fs::is_directory(path)) {
            path = (fs::path(path.empty() ? "." : path) / r.default_file).string();
        }
        if (!fs::is_regular_file(path)) {
            throw Error(ErrorCode::Load,
                        "encoder '" + spec.encoder_id + "' expects weights file '" + std::string(r.default_file) +
                            "' (looked for '" + path + "'); pass --weights or set REMOVE_EVAL_WEIGHTS_DIR",
                        "load");
        }
        return std::make_unique<OnnxVitEncoder>(std::move(info), path, spec.layout);
    }
    std::string known;
    for (const auto& id : registered_encoders()) known += (known.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::Configuration, "unknown encoder '" + spec.encoder_id + "' (known: " + known + ")");
}

}  // namespace remove_eval
