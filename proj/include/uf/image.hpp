#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uf/errors.hpp"

namespace uf {

// Grayscale image with pixels in [0,1], row-major.
struct GrayImage {
    int64_t width = 0;
    int64_t height = 0;
    std::vector<float> pixels;

    GrayImage() = default;
    GrayImage(int64_t w, int64_t h, float fill = 0.f)
        : width(w), height(h), pixels(static_cast<size_t>(w * h), fill) {}

    float& at(int64_t y, int64_t x) { return pixels[static_cast<size_t>(y * width + x)]; }
    float at(int64_t y, int64_t x) const { return pixels[static_cast<size_t>(y * width + x)]; }
    int64_t count() const { return width * height; }
};

// Reads 8-bit grayscale PGM (P5) or PNG regardless of extension (content is
// sniffed). Color PNG is reduced by luminance 0.299R + 0.587G + 0.114B;
// values come out divided by 255.
GrayImage load_image(const std::filesystem::path& path);

// Writes PGM or PNG selected by extension; pixels are clamped to [0,1] and
// quantized with round(p * 255).
void save_image(const GrayImage& img, const std::filesystem::path& path);

}  // namespace uf
