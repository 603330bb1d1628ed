#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace remove_eval {

/// Interleaved RGB raster, row-major, nominal value range [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    RgbImage() = default;
    RgbImage(int w, int h, float fill = 0.0f);

    bool empty() const noexcept { return width <= 0 || height <= 0; }

    float& at(int x, int y, int c) { return data[index(x, y, c)]; }
    float at(int x, int y, int c) const { return data[index(x, y, c)]; }

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c);
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Row-major binary raster. The tag keeps pixel masks and patch masks apart.
template <class Tag>
struct BinaryGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryGrid() = default;
    BinaryGrid(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    std::uint8_t& at(int x, int y) { return bits[index(x, y)]; }
    std::uint8_t at(int x, int y) const { return bits[index(x, y)]; }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }

    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto b : bits) n += (b != 0);
        return n;
    }

    std::size_t size() const noexcept { return bits.size(); }

    friend bool operator==(const BinaryGrid&, const BinaryGrid&) = default;
};

struct EraseMaskTag {};
struct PatchMaskTag {};

/// Pixel mask, 1 = inpainted.
using EraseMask = BinaryGrid<EraseMaskTag>;
/// Patch-resolution mask; width = grid columns, height = grid rows.
using PatchMask = BinaryGrid<PatchMaskTag>;

/// The unit being scored.
struct EditedImage {
    std::string id;
    RgbImage pixels;
    std::optional<RgbImage> ground_truth;

    int width() const noexcept { return pixels.width; }
    int height() const noexcept { return pixels.height; }

    /// Throws Validation if the raster is empty or ground truth dimensions differ.
    void validate() const;
};

/// Throws Validation unless `mask` has the image's dimensions and only 0/1 values.
void validate_pairing(const EditedImage& image, const EraseMask& mask);

/// Fraction of mask pixels set to 1.
double mask_area_fraction(const EraseMask& mask);

}  // namespace remove_eval
