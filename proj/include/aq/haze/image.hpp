#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace aq::haze {

// Single-channel image, values in [0,1], row-major.
struct GrayImage {
    std::size_t height = 0, width = 0;
    std::vector<double> v;

    GrayImage() = default;
    GrayImage(std::size_t h, std::size_t w, double fill = 0.0)
        : height(h), width(w), v(h * w, fill) {}

    double& at(std::size_t y, std::size_t x) { return v[y * width + x]; }
    double at(std::size_t y, std::size_t x) const { return v[y * width + x]; }
    std::size_t size() const { return v.size(); }
};

// Interleaved RGB image, components in [0,1].
struct RgbImage {
    std::size_t height = 0, width = 0;
    std::vector<double> v;  // r,g,b per pixel

    RgbImage() = default;
    RgbImage(std::size_t h, std::size_t w) : height(h), width(w), v(h * w * 3, 0.0) {}

    double& at(std::size_t y, std::size_t x, std::size_t c) { return v[(y * width + x) * 3 + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return v[(y * width + x) * 3 + c];
    }
    std::size_t pixels() const { return height * width; }
    void validate_range() const;  // throws ValueError when components leave [0,1]
};

struct BinaryMask {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> v;

    BinaryMask() = default;
    BinaryMask(std::size_t h, std::size_t w, bool fill = false)
        : height(h), width(w), v(h * w, fill ? 1 : 0) {}

    bool at(std::size_t y, std::size_t x) const { return v[y * width + x] != 0; }
    void set(std::size_t y, std::size_t x, bool b) { v[y * width + x] = b ? 1 : 0; }
    std::size_t count() const;
};

// Decodes PNG (via libpng), binary PPM (P6) or binary PGM (P5), chosen by
// file magic. Grayscale sources are replicated across RGB.
RgbImage load_image(const std::string& path);

// 8-bit binary PPM writer, mostly for inspecting synthetic corpora.
void save_ppm(const RgbImage& img, const std::string& path);

RgbImage resize_bilinear(const RgbImage& img, std::size_t out_h, std::size_t out_w);

// Luminosity grayscale: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_gray(const RgbImage& img);

}  // namespace aq::haze
