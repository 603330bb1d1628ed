#include "remove_eval/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "remove_eval/error.hpp"

namespace remove_eval {

namespace {

struct BoundingBox {
    int x0 = std::numeric_limits<int>::max();
    int y0 = std::numeric_limits<int>::max();
    int x1 = -1;
    int y1 = -1;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
};

BoundingBox mask_bbox(const EraseMask& mask) {
    BoundingBox bb;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) == 0) continue;
            bb.x0 = std::min(bb.x0, x);
            bb.y0 = std::min(bb.y0, y);
            bb.x1 = std::max(bb.x1, x);
            bb.y1 = std::max(bb.y1, y);
        }
    }
    return bb;
}

// Top-left coordinate along one axis: centered on [lo, hi], then moved so the
// box keeps [lo, hi] inside when it is wide enough, and stays inside [0, extent).
int place_axis(int lo, int hi, int side, int extent) {
    const int twice_center = lo + hi + 1;
    int start = static_cast<int>(std::floor((twice_center - side) / 2.0));
    int min_start = 0;
    int max_start = extent - side;
    if (side >= hi - lo + 1) {
        min_start = std::max(min_start, hi + 1 - side);
        max_start = std::min(max_start, lo);
    }
    return std::clamp(start, min_start, max_start);
}

std::size_t count_in_box(const EraseMask& mask, const CropBox& box) {
    std::size_t n = 0;
    for (int y = box.y0; y < box.y0 + box.side; ++y) {
        for (int x = box.x0; x < box.x0 + box.side; ++x) n += (mask.at(x, y) != 0);
    }
    return n;
}

struct Normalization {
    std::array<float, 3> mean;
    std::array<float, 3> stddev;
};

Normalization lookup_normalization(const std::string& id) {
    if (id == "identity") return {{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
    if (id == "imagenet") return {{0.485f, 0.456f, 0.406f}, {0.229f, 0.224f, 0.225f}};
    if (id == "clip") return {{0.48145466f, 0.4578275f, 0.40821073f}, {0.26862954f, 0.26130258f, 0.27577711f}};
    if (id.empty()) throw Error(ErrorCode::Configuration, "encoder declares no normalization", "preprocess");
    throw Error(ErrorCode::Configuration, "unknown normalization '" + id + "'", "preprocess");
}

}  // namespace

CropResult compute_crop(const EraseMask& mask, const MetricConfig& config) {
    const std::size_t area = mask.count();
    if (area == 0) throw Error(ErrorCode::DegenerateMask, "mask is empty; nothing to crop around", "crop");

    const BoundingBox bb = mask_bbox(mask);
    const int shortest = std::min(mask.width, mask.height);
    const int min_side = std::max(bb.width(), bb.height());
    const double a = static_cast<double>(area);
    const double ideal = std::sqrt(a / config.target_mask_fraction);
    auto in_band = [&](int s) {
        const double f = a / (static_cast<double>(s) * s);
        return f >= config.fraction_lower && f <= config.fraction_upper;
    };

    int side = static_cast<int>(std::ceil(ideal));
    side = std::clamp(std::max(side, min_side), 1, shortest);

    if (!in_band(side) && min_side <= shortest) {
        int best = -1;
        for (int s = min_side; s <= shortest; ++s) {
            if (!in_band(s)) continue;
            if (best < 0 || std::abs(s - ideal) <= std::abs(best - ideal)) best = s;
        }
        if (best > 0) side = best;
    }

    CropResult out;
    out.box.side = side;
    out.box.x0 = place_axis(bb.x0, bb.x1, side, mask.width);
    out.box.y0 = place_axis(bb.y0, bb.y1, side, mask.height);
    out.mask_fraction = static_cast<double>(count_in_box(mask, out.box)) / (static_cast<double>(side) * side);
    out.fraction_in_bounds =
        out.mask_fraction >= config.fraction_lower && out.mask_fraction <= config.fraction_upper;
    return out;
}

std::pair<EditedImage, EraseMask> apply_crop(const EditedImage& image, const EraseMask& mask, const CropBox& box) {
    if (box.side < 1 || box.x0 < 0 || box.y0 < 0 || box.x0 + box.side > image.width() ||
        box.y0 + box.side > image.height()) {
        throw Error(ErrorCode::Configuration, "crop box lies outside the image", "crop");
    }
    auto crop_rgb = [&](const RgbImage& src) {
        RgbImage out(box.side, box.side);
        for (int y = 0; y < box.side; ++y) {
            const auto* row = &src.data[src.index(box.x0, box.y0 + y, 0)];
            std::copy(row, row + static_cast<std::size_t>(box.side) * 3, &out.data[out.index(0, y, 0)]);
        }
        return out;
    };
    EditedImage cropped{image.id, crop_rgb(image.pixels), std::nullopt};
    if (image.ground_truth) cropped.ground_truth = crop_rgb(*image.ground_truth);

    EraseMask m(box.side, box.side);
    for (int y = 0; y < box.side; ++y) {
        for (int x = 0; x < box.side; ++x) m.at(x, y) = mask.at(box.x0 + x, box.y0 + y);
    }
    return {std::move(cropped), std::move(m)};
}

namespace {

// Half-pixel-centre bilinear sampling; `store(x, y, c, v)` receives each output value.
template <typename Store>
void bilinear_sample(const RgbImage& image, int out_width, int out_height, Store&& store) {
    if (image.empty() || out_width < 1 || out_height < 1) {
        throw Error(ErrorCode::Configuration, "cannot resize an empty image", "preprocess");
    }
    struct Tap {
        int i0, i1;
        double t;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> v(static_cast<std::size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int i = 0; i < out; ++i) {
            const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            v[static_cast<std::size_t>(i)] = {i0, std::min(i0 + 1, in - 1), src - i0};
        }
        return v;
    };
    const auto xs = taps(image.width, out_width);
    const auto ys = taps(image.height, out_height);

    for (int y = 0; y < out_height; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_width; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - tx.t) * image.at(tx.i0, ty.i0, c) + tx.t * image.at(tx.i1, ty.i0, c);
                const double bottom = (1.0 - tx.t) * image.at(tx.i0, ty.i1, c) + tx.t * image.at(tx.i1, ty.i1, c);
                store(x, y, c, static_cast<float>((1.0 - ty.t) * top + ty.t * bottom));
            }
        }
    }
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& image, int out_width, int out_height) {
    RgbImage out;
    if (out_width > 0 && out_height > 0) out = RgbImage(out_width, out_height);
    bilinear_sample(image, out_width, out_height, [&](int x, int y, int c, float v) { out.at(x, y, c) = v; });
    return out;
}

EraseMask resize_nearest(const EraseMask& mask, int out_width, int out_height) {
    EraseMask out(out_width, out_height);
    auto src_index = [](int i, int in, int n) {
        const long long s = (2LL * i + 1) * in / (2LL * n);
        return static_cast<int>(std::min<long long>(s, in - 1));
    };
    for (int y = 0; y < out_height; ++y) {
        const int sy = src_index(y, mask.height, out_height);
        for (int x = 0; x < out_width; ++x) out.at(x, y) = mask.at(src_index(x, mask.width, out_width), sy);
    }
    return out;
}

void normalize_in_place(std::vector<float>& chw, int side, const std::string& normalization_id) {
    const Normalization n = lookup_normalization(normalization_id);
    if (normalization_id == "identity") return;
    const std::size_t plane = static_cast<std::size_t>(side) * side;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            float& v = chw[c * plane + i];
            v = (v - n.mean[c]) / n.stddev[c];
        }
    }
}

PreprocessedImage resize_normalize(const RgbImage& image, const MetricConfig& config,
                                   const std::string& normalization_id) {
    lookup_normalization(normalization_id);
    const int side = config.input_side;
    PreprocessedImage out;
    out.side = side;
    out.normalization_id = normalization_id;
    const std::size_t plane = static_cast<std::size_t>(side) * side;
    out.chw.resize(plane * 3);
    if (image.width == side && image.height == side) {
        for (std::size_t i = 0; i < plane; ++i) {
            for (std::size_t c = 0; c < 3; ++c) out.chw[c * plane + i] = image.data[i * 3 + c];
        }
    } else {
        float* chw = out.chw.data();
        bilinear_sample(image, side, side, [&](int x, int y, int c, float v) {
            chw[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * side + x] = v;
        });
    }
    normalize_in_place(out.chw, side, normalization_id);
    return out;
}

PatchMask downsample_mask(const EraseMask& mask, int patch_size, double threshold) {
    if (patch_size < 1 || mask.width % patch_size != 0 || mask.height % patch_size != 0) {
        throw Error(ErrorCode::Configuration, "mask dimensions must be divisible by the patch size", "mask");
    }
    const int cols = mask.width / patch_size;
    const int rows = mask.height / patch_size;
    const double needed = threshold * patch_size * patch_size;
    PatchMask out(cols, rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int n = 0;
            for (int y = r * patch_size; y < (r + 1) * patch_size; ++y) {
                for (int x = c * patch_size; x < (c + 1) * patch_size; ++x) n += (mask.at(x, y) != 0);
            }
            out.at(c, r) = n >= needed ? 1 : 0;
        }
    }
    return out;
}

PatchMask prepare_patch_mask(const EraseMask& mask, const MetricConfig& config) {
    const int side = config.input_side;
    const EraseMask resized = (mask.width == side && mask.height == side) ? mask : resize_nearest(mask, side, side);
    return downsample_mask(resized, config.patch_size, config.patch_mask_threshold);
}

}  // namespace remove_eval
