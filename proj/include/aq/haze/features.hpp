#pragma once

#include <array>
#include <optional>
#include <string>

#include "aq/haze/image.hpp"
#include "aq/nn/tensor.hpp"

namespace aq::haze {

/**
 * Knobs for the haze feature extractors. `airlight` left unset means
 * "estimate from the brightest dark-channel pixels".
 */
struct FeatureConfig {
    std::size_t target_size = 128;               // S: stack is S x S x 6
    int dark_patch = 15;                         // odd window for dark channel / transmission
    int local_window = 7;                        // odd window for local contrast/entropy maps
    double sky_fraction = 1.0 / 3.0;             // top rows considered for the sky mask
    std::optional<std::array<double, 3>> airlight;  // fixed ambient colour, else estimated
    double extinction = 1.0;                     // medium extinction used by the depth proxy
    double clamp_eps = 1e-3;                     // transmission floor before the log

    void validate() const;
};

struct OtsuResult {
    int threshold = 0;   // histogram bin index, 256 bins over [0,1]
    BinaryMask mask;     // pixel bin > threshold
    bool degenerate = false;  // single-mode histogram; mask forced all-foreground
};

// Threshold maximizing the between-class variance, ties to the smallest bin.
OtsuResult otsu_threshold(const GrayImage& gray);

// Per-pixel min over an odd patch (clamped at borders) and over R,G,B.
GrayImage dark_channel(const RgbImage& img, int patch);

// 1 - dark channel of the airlight-normalized image, clamped to [0,1].
GrayImage transmission(const RgbImage& img, const std::array<double, 3>& airlight, int patch);

// Beer-Lambert inversion -ln(max(t, eps))/extinction, rescaled to [0,1]
// by its max (an all-zero map stays zero).
GrayImage depth_proxy(const GrayImage& transmission_map, double extinction, double eps);

struct Hsv {
    double h;  // degrees in [0,360); 0 when s == 0
    double s;  // [0,1]
    double v;  // [0,1]
};
Hsv rgb_to_hsv(double r, double g, double b);

// Saturation-weighted triangular membership around the blue hue:
// s * max(0, 1 - |h-240|/60).
GrayImage blueness_map(const RgbImage& img);

struct LocalStat {
    GrayImage map;
    double global = 0.0;
};

// Root-mean-square deviation from the mean, globally and per local window.
LocalStat rms_contrast(const GrayImage& gray, int window);

// Shannon entropy (bits) of the bin histogram, globally and per local window.
LocalStat entropy(const GrayImage& gray, int window, int bins = 256);

struct SmoothnessResult {
    GrayImage map;       // per-pixel gradient magnitude
    double avg = 0.0;    // mean magnitude over the sky mask
    bool degenerate = false;  // empty mask; average taken over the whole image
};

// Central differences in the interior, one-sided at the borders.
SmoothnessResult smoothness(const GrayImage& gray, const BinaryMask& sky_mask);

// Per-channel mean of the brightest 0.1% dark-channel pixels.
std::array<double, 3> estimate_airlight(const RgbImage& img, const GrayImage& dark);

constexpr std::size_t kFeatureChannels = 6;
extern const std::array<const char*, kFeatureChannels> kFeatureChannelNames;

/**
 * The S x S x 6 feature stack: dark channel, depth proxy, blueness,
 * local RMS contrast, local entropy, gradient magnitude — each min-max
 * scaled to [0,1] — plus whole-image scalar diagnostics.
 */
struct FeatureStack {
    nn::Tensor channels;  // [S, S, 6]
    double rms_global = 0.0;
    double entropy_global = 0.0;
    double smoothness_avg = 0.0;
    int otsu_threshold = 0;

    std::size_t side() const { return channels.extent(0); }
    // Channel-major copy [6, S, S] for the classifier.
    nn::Tensor to_chw() const;
};

FeatureStack build_feature_stack(const RgbImage& img, const FeatureConfig& cfg);

}  // namespace aq::haze
