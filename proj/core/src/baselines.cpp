#include "remove_eval/baselines.hpp"

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "remove_eval/digest.hpp"
#include "remove_eval/error.hpp"
#include "remove_eval/image_io.hpp"

namespace remove_eval {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Orientation o) {
    return o == Orientation::LowerBetter ? "lower-better" : "higher-better";
}

Orientation orientation_of(std::string_view id) {
    if (id == metric_id::kRemove || id == metric_id::kRemoveNoCrop) return Orientation::HigherBetter;
    if (id == metric_id::kClipNoRef || id == metric_id::kClipFullRef) return Orientation::HigherBetter;
    if (id == metric_id::kMse) return Orientation::LowerBetter;
    if (id == metric_id::kLpips || id.substr(0, metric_id::kLpips.size() + 1) == "LPIPS-") {
        return Orientation::LowerBetter;
    }
    throw Error(ErrorCode::Configuration, "unknown metric id '" + std::string(id) + "'");
}

namespace {

const RgbImage& require_reference(const EditedImage& sample, std::string_view metric) {
    if (!sample.ground_truth) {
        throw Error(ErrorCode::ReferenceRequired,
                    std::string(metric) + " needs a ground-truth image; sample '" + sample.id + "' has none");
    }
    sample.validate();
    return *sample.ground_truth;
}

void require_same_size(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(ErrorCode::Validation, "compared images must have identical dimensions");
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "remove_eval_XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw Error(ErrorCode::Io, "cannot create temp directory");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string escape_field(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        const char n = s[++i];
        out += n == 't' ? '\t' : n == 'n' ? '\n' : n == 'r' ? '\r' : n;
    }
    return out;
}

json parse_response(const std::string& text, const std::string& executable) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::EncoderFailure,
                    "backend '" + executable + "' returned malformed JSON: " + e.what(), "baseline");
    }
}

std::vector<double> embedding_from(const json& j, const std::string& executable) {
    if (!j.contains("embedding") || !j["embedding"].is_array() || j["embedding"].empty()) {
        throw Error(ErrorCode::AdapterContract, "backend '" + executable + "' response lacks 'embedding'", "baseline");
    }
    auto v = j["embedding"].get<std::vector<double>>();
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw Error(ErrorCode::EncoderFailure, "backend '" + executable + "' returned non-finite values", "baseline");
        }
    }
    return v;
}

}  // namespace

BaselineScore mse_score(const EditedImage& sample) {
    const RgbImage& ref = require_reference(sample, metric_id::kMse);
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        const double d = static_cast<double>(sample.pixels.data[i]) - ref.data[i];
        sum += d * d;
    }
    return {std::string(metric_id::kMse), sum / static_cast<double>(ref.data.size()), Orientation::LowerBetter,
            std::nullopt};
}

struct OnnxLpips::Session {
    std::mutex mutex;
    cv::dnn::Net net;
};

OnnxLpips::OnnxLpips(const std::string& weights_path, std::string variant, std::vector<std::string> input_names)
    : variant_(std::move(variant)), input_names_(std::move(input_names)), session_(std::make_unique<Session>()) {
    if (input_names_.size() != 2) throw Error(ErrorCode::Configuration, "LPIPS graph needs exactly two input names");
    if (weights_path.empty() || !fs::is_regular_file(weights_path)) {
        throw Error(ErrorCode::Load, "LPIPS backend needs an ONNX file; not found: '" + weights_path + "'", "load");
    }
    try {
        session_->net = cv::dnn::readNetFromONNX(weights_path);
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::Load, "failed to load '" + weights_path + "': " + e.what(), "load");
    }
}

OnnxLpips::~OnnxLpips() = default;

double OnnxLpips::distance(const RgbImage& a, const RgbImage& b) const {
    require_same_size(a, b);
    auto to_blob = [](const RgbImage& img) {
        const int shape[] = {1, 3, img.height, img.width};
        cv::Mat blob(4, shape, CV_32F);
        float* dst = blob.ptr<float>();
        const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
        for (std::size_t i = 0; i < plane; ++i) {
            for (std::size_t c = 0; c < 3; ++c) dst[c * plane + i] = img.data[i * 3 + c] * 2.0f - 1.0f;
        }
        return blob;
    };
    const cv::Mat ba = to_blob(a);
    const cv::Mat bb = to_blob(b);
    cv::Mat out;
    try {
        std::lock_guard lock(session_->mutex);
        session_->net.setInput(ba, input_names_[0]);
        session_->net.setInput(bb, input_names_[1]);
        out = session_->net.forward().clone();
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::EncoderFailure, std::string("LPIPS backend failed: ") + e.what(), "baseline");
    }
    if (out.total() < 1) throw Error(ErrorCode::AdapterContract, "LPIPS backend returned no value", "baseline");
    const double v = out.ptr<float>()[0];
    if (!std::isfinite(v)) throw Error(ErrorCode::EncoderFailure, "LPIPS backend returned a non-finite value", "baseline");
    return v;
}

BaselineScore lpips_score(const LpipsBackend& backend, const RgbImage& edited, const RgbImage& reference) {
    require_same_size(edited, reference);
    const std::string variant = backend.variant();
    std::string id(metric_id::kLpips);
    if (!variant.empty()) id += "-" + variant;
    return {id, backend.distance(edited, reference), Orientation::LowerBetter, std::nullopt};
}

BaselineScore lpips_score(const LpipsBackend& backend, const EditedImage& sample) {
    return lpips_score(backend, sample.pixels, require_reference(sample, metric_id::kLpips));
}

CaptionCache::CaptionCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorCode::Parse, "caption cache '" + path_ + "' line " + std::to_string(line_no) +
                                              ": expected '<digest>\\t<caption>'");
        }
        entries_[line.substr(0, tab)] = unescape_field(line.substr(tab + 1));
    }
}

std::optional<std::string> CaptionCache::get(const std::string& digest) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void CaptionCache::put(const std::string& digest, const std::string& caption) {
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(digest, caption).second) return;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    out << digest << '\t' << escape_field(caption) << '\n';
    if (!out) throw Error(ErrorCode::Io, "cannot append to caption cache '" + path_ + "'");
}

std::size_t CaptionCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string CachingCaptioner::caption(const RgbImage& image) const {
    const std::string key = image_content_digest(image);
    if (auto hit = cache_.get(key)) return *hit;
    std::string text = inner_.caption(image);
    cache_.put(key, text);
    return text;
}

BaselineScore clip_score(const ClipEmbedder& embedder, const RgbImage& image, const std::string& prompt,
                         ClipMode mode) {
    if (prompt.empty()) throw Error(ErrorCode::Validation, "CLIPScore needs a nonempty prompt", "baseline");
    const auto vi = embedder.embed_image(image);
    const auto vt = embedder.embed_text(prompt);
    if (vi.size() != vt.size() || vi.empty()) {
        throw Error(ErrorCode::AdapterContract, "image and text embeddings differ in dimension", "baseline");
    }
    const double ni = std::sqrt(dot(vi, vi));
    const double nt = std::sqrt(dot(vt, vt));
    if (ni == 0.0 || nt == 0.0) throw Error(ErrorCode::ZeroVector, "CLIP embedding has zero norm", "baseline");
    const double cos = std::clamp(dot(vi, vt) / (ni * nt), -1.0, 1.0);
    const auto id = mode == ClipMode::NoReference ? metric_id::kClipNoRef : metric_id::kClipFullRef;
    return {std::string(id), kClipScoreWeight * std::max(cos, 0.0), Orientation::HigherBetter, prompt};
}

BaselineScore clip_score_no_reference(const Captioner& captioner, const ClipEmbedder& embedder,
                                      const EditedImage& sample) {
    return clip_score(embedder, sample.pixels, captioner.caption(sample.pixels), ClipMode::NoReference);
}

BaselineScore clip_score_full_reference(const Captioner& captioner, const ClipEmbedder& embedder,
                                        const EditedImage& sample) {
    const RgbImage& ref = require_reference(sample, metric_id::kClipFullRef);
    return clip_score(embedder, sample.pixels, captioner.caption(ref), ClipMode::FullReference);
}

CommandBackend::CommandBackend(std::string executable) : executable_(std::move(executable)) {
    if (executable_.empty()) throw Error(ErrorCode::Configuration, "backend command is empty");
    if (executable_.find('/') != std::string::npos && !fs::is_regular_file(executable_)) {
        throw Error(ErrorCode::Load, "backend executable not found: '" + executable_ + "'", "load");
    }
}

std::string CommandBackend::run(const std::string& task, const std::vector<const RgbImage*>& images,
                                const std::optional<std::string>& text) const {
    std::lock_guard lock(mutex_);
    TempDir dir;
    json request{{"task", task}, {"images", json::array()}};
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto p = dir.path() / ("image" + std::to_string(i) + ".png");
        save_rgb_png(p.string(), *images[i]);
        request["images"].push_back(p.string());
    }
    if (text) request["text"] = *text;
    const auto request_path = dir.path() / "request.json";
    const auto stderr_path = dir.path() / "stderr.txt";
    {
        std::ofstream out(request_path);
        out << request.dump();
        if (!out) throw Error(ErrorCode::Io, "cannot write backend request", "baseline");
    }

    const std::string cmd = shell_quote(executable_) + " " + shell_quote(request_path.string()) + " 2>" +
                            shell_quote(stderr_path.string());
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) throw Error(ErrorCode::Load, "cannot start backend '" + executable_ + "'", "load");
    std::string output;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (code == 127) throw Error(ErrorCode::Load, "backend executable not found: '" + executable_ + "'", "load");
    if (code != 0) {
        std::ifstream err(stderr_path);
        std::string diag((std::istreambuf_iterator<char>(err)), std::istreambuf_iterator<char>());
        if (diag.size() > 2000) diag = diag.substr(diag.size() - 2000);
        throw Error(ErrorCode::EncoderFailure,
                    "backend '" + executable_ + "' exited with status " + std::to_string(code) + ": " + diag,
                    "baseline");
    }
    return output;
}

std::string CommandCaptioner::caption(const RgbImage& image) const {
    const json j = parse_response(backend_.run("caption", {&image}, std::nullopt), backend_.executable());
    if (!j.contains("caption") || !j["caption"].is_string() || j["caption"].get<std::string>().empty()) {
        throw Error(ErrorCode::AdapterContract, "caption backend returned no caption", "baseline");
    }
    return j["caption"].get<std::string>();
}

std::vector<double> CommandClipEmbedder::embed_image(const RgbImage& image) const {
    return embedding_from(parse_response(backend_.run("embed_image", {&image}, std::nullopt), backend_.executable()),
                          backend_.executable());
}

std::vector<double> CommandClipEmbedder::embed_text(const std::string& text) const {
    return embedding_from(parse_response(backend_.run("embed_text", {}, text), backend_.executable()),
                          backend_.executable());
}

double CommandLpips::distance(const RgbImage& a, const RgbImage& b) const {
    require_same_size(a, b);
    const json j = parse_response(backend_.run("lpips", {&a, &b}, std::nullopt), backend_.executable());
    if (!j.contains("distance") || !j["distance"].is_number()) {
        throw Error(ErrorCode::AdapterContract, "LPIPS backend response lacks 'distance'", "baseline");
    }
    const double v = j["distance"].get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::EncoderFailure, "LPIPS backend returned a non-finite value", "baseline");
    return v;
}

}  // namespace remove_eval
