#include "aq/haze/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aq/errors.hpp"

namespace aq::haze {

const std::array<const char*, kFeatureChannels> kFeatureChannelNames = {
    "dark_channel", "depth_proxy", "blueness", "local_rms_contrast",
    "local_entropy", "gradient_magnitude"};

void FeatureConfig::validate() const {
    if (target_size < 8) throw ConfigError("target_size must be >= 8");
    if (dark_patch < 1 || dark_patch % 2 == 0) throw ConfigError("dark_patch must be odd and >= 1");
    if (local_window < 1 || local_window % 2 == 0)
        throw ConfigError("local_window must be odd and >= 1");
    if (!(sky_fraction > 0.0 && sky_fraction <= 1.0))
        throw ConfigError("sky_fraction must be in (0,1]");
    if (!(extinction > 0.0)) throw ConfigError("extinction must be positive");
    if (!(clamp_eps > 0.0)) throw ConfigError("clamp_eps must be positive");
    if (airlight) {
        for (double c : *airlight) {
            if (!(c > 0.0)) throw ConfigError("airlight components must be positive");
        }
    }
}

namespace {

constexpr int kBins = 256;

inline int bin_of(double value) {
    int b = static_cast<int>(value * kBins);
    return std::clamp(b, 0, kBins - 1);
}

// Separable sliding min with border-clamped (truncated) windows.
GrayImage window_min(const GrayImage& src, int patch) {
    const int radius = patch / 2;
    const int h = static_cast<int>(src.height), w = static_cast<int>(src.width);
    GrayImage rows(src.height, src.width);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            double m = src.at(y, x0);
            for (int xx = x0 + 1; xx <= x1; ++xx) m = std::min(m, src.at(y, xx));
            rows.at(y, x) = m;
        }
    }
    GrayImage out(src.height, src.width);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            double m = rows.at(y0, x);
            for (int yy = y0 + 1; yy <= y1; ++yy) m = std::min(m, rows.at(yy, x));
            out.at(y, x) = m;
        }
    }
    return out;
}

void check_patch(int patch) {
    if (patch < 1 || patch % 2 == 0) {
        throw ConfigError("patch must be odd and >= 1, got " + std::to_string(patch));
    }
}

}  // namespace

OtsuResult otsu_threshold(const GrayImage& gray) {
    if (gray.size() == 0) throw ValueError("otsu_threshold: empty image");
    std::array<double, kBins> hist{};
    for (double p : gray.v) hist[static_cast<std::size_t>(bin_of(p))] += 1.0;
    const double total = static_cast<double>(gray.size());

    double mu_total = 0.0;
    for (int b = 0; b < kBins; ++b) mu_total += b * hist[static_cast<std::size_t>(b)];
    mu_total /= total;

    // between-class variance over every split "bin <= k" vs "bin > k"
    int best_k = 0;
    double best_var = -1.0;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < kBins - 1; ++k) {
        w0 += hist[static_cast<std::size_t>(k)] / total;
        sum0 += k * hist[static_cast<std::size_t>(k)] / total;
        if (w0 <= 0.0 || w0 >= 1.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (mu_total - sum0) / (1.0 - w0);
        const double var = w0 * (1.0 - w0) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var + 1e-15) {
            best_var = var;
            best_k = k;
        }
    }

    OtsuResult out;
    out.mask = BinaryMask(gray.height, gray.width);
    if (best_var <= 0.0) {
        // single occupied bin: nothing to separate
        out.threshold = 0;
        out.degenerate = true;
        std::fill(out.mask.v.begin(), out.mask.v.end(), std::uint8_t{1});
        return out;
    }
    out.threshold = best_k;
    for (std::size_t i = 0; i < gray.size(); ++i) {
        out.mask.v[i] = bin_of(gray.v[i]) > best_k ? 1 : 0;
    }
    return out;
}

GrayImage dark_channel(const RgbImage& img, int patch) {
    check_patch(patch);
    GrayImage min_rgb(img.height, img.width);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        min_rgb.v[p] = std::min({img.v[p * 3], img.v[p * 3 + 1], img.v[p * 3 + 2]});
    }
    return window_min(min_rgb, patch);
}

GrayImage transmission(const RgbImage& img, const std::array<double, 3>& airlight, int patch) {
    check_patch(patch);
    for (double c : airlight) {
        if (!(c > 0.0)) {
            throw ValueError("transmission: airlight component " + std::to_string(c) +
                             " must be positive");
        }
    }
    GrayImage ratio_min(img.height, img.width);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        ratio_min.v[p] = std::min({img.v[p * 3] / airlight[0], img.v[p * 3 + 1] / airlight[1],
                                   img.v[p * 3 + 2] / airlight[2]});
    }
    GrayImage out = window_min(ratio_min, patch);
    for (auto& t : out.v) t = std::clamp(1.0 - t, 0.0, 1.0);
    return out;
}

GrayImage depth_proxy(const GrayImage& transmission_map, double extinction, double eps) {
    if (!(extinction > 0.0)) throw ConfigError("depth_proxy: extinction must be positive");
    if (!(eps > 0.0)) throw ConfigError("depth_proxy: eps must be positive");
    GrayImage out(transmission_map.height, transmission_map.width);
    double peak = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.v[i] = -std::log(std::max(transmission_map.v[i], eps)) / extinction;
        peak = std::max(peak, out.v[i]);
    }
    if (peak > 0.0) {
        for (auto& d : out.v) d /= peak;
    }
    return out;
}

Hsv rgb_to_hsv(double r, double g, double b) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out{0.0, 0.0, mx};
    if (mx > 0.0) out.s = delta / mx;
    if (delta > 0.0) {
        double h;
        if (mx == r) {
            h = 60.0 * std::fmod((g - b) / delta, 6.0);
        } else if (mx == g) {
            h = 60.0 * ((b - r) / delta + 2.0);
        } else {
            h = 60.0 * ((r - g) / delta + 4.0);
        }
        if (h < 0.0) h += 360.0;
        out.h = h;
    }
    return out;
}

GrayImage blueness_map(const RgbImage& img) {
    GrayImage out(img.height, img.width);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        const Hsv hsv = rgb_to_hsv(img.v[p * 3], img.v[p * 3 + 1], img.v[p * 3 + 2]);
        out.v[p] = hsv.s * std::max(0.0, 1.0 - std::abs(hsv.h - 240.0) / 60.0);
    }
    return out;
}

namespace {

double rms_of_range(const GrayImage& g, int y0, int y1, int x0, int x1) {
    double sum = 0.0;
    int n = 0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            sum += g.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            ++n;
        }
    const double mean = sum / n;
    double acc = 0.0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = g.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) - mean;
            acc += d * d;
        }
    return std::sqrt(acc / n);
}

}  // namespace

LocalStat rms_contrast(const GrayImage& gray, int window) {
    check_patch(window);
    const int h = static_cast<int>(gray.height), w = static_cast<int>(gray.width);
    const int radius = window / 2;
    LocalStat out;
    out.global = rms_of_range(gray, 0, h - 1, 0, w - 1);
    out.map = GrayImage(gray.height, gray.width);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.map.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                rms_of_range(gray, std::max(0, y - radius), std::min(h - 1, y + radius),
                             std::max(0, x - radius), std::min(w - 1, x + radius));
        }
    }
    return out;
}

namespace {

double entropy_of_hist(const std::vector<double>& hist, double total) {
    double e = 0.0;
    for (double c : hist) {
        if (c > 0.0) {
            const double p = c / total;
            e -= p * std::log2(p);
        }
    }
    return e;
}

}  // namespace

LocalStat entropy(const GrayImage& gray, int window, int bins) {
    check_patch(window);
    if (bins < 2) throw ConfigError("entropy: need at least 2 bins");
    const int h = static_cast<int>(gray.height), w = static_cast<int>(gray.width);
    const int radius = window / 2;

    auto bin_idx = [bins](double v) {
        return static_cast<std::size_t>(std::clamp(static_cast<int>(v * bins), 0, bins - 1));
    };

    LocalStat out;
    {
        std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
        for (double p : gray.v) hist[bin_idx(p)] += 1.0;
        out.global = entropy_of_hist(hist, static_cast<double>(gray.size()));
    }
    out.map = GrayImage(gray.height, gray.width);
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::fill(hist.begin(), hist.end(), 0.0);
            const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx)
                    hist[bin_idx(gray.at(static_cast<std::size_t>(yy),
                                         static_cast<std::size_t>(xx)))] += 1.0;
            out.map.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                entropy_of_hist(hist, static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1)));
        }
    }
    return out;
}

SmoothnessResult smoothness(const GrayImage& gray, const BinaryMask& sky_mask) {
    if (sky_mask.height != gray.height || sky_mask.width != gray.width) {
        throw ShapeError("smoothness: mask " + std::to_string(sky_mask.height) + "x" +
                         std::to_string(sky_mask.width) + " does not match image " +
                         std::to_string(gray.height) + "x" + std::to_string(gray.width));
    }
    const int h = static_cast<int>(gray.height), w = static_cast<int>(gray.width);
    SmoothnessResult out;
    out.map = GrayImage(gray.height, gray.width);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double gx, gy;
            if (w == 1) {
                gx = 0.0;
            } else if (x == 0) {
                gx = gray.at(y, 1) - gray.at(y, 0);
            } else if (x == w - 1) {
                gx = gray.at(y, static_cast<std::size_t>(w - 1)) -
                     gray.at(y, static_cast<std::size_t>(w - 2));
            } else {
                gx = 0.5 * (gray.at(y, static_cast<std::size_t>(x + 1)) -
                            gray.at(y, static_cast<std::size_t>(x - 1)));
            }
            if (h == 1) {
                gy = 0.0;
            } else if (y == 0) {
                gy = gray.at(1, static_cast<std::size_t>(x)) - gray.at(0, static_cast<std::size_t>(x));
            } else if (y == h - 1) {
                gy = gray.at(static_cast<std::size_t>(h - 1), static_cast<std::size_t>(x)) -
                     gray.at(static_cast<std::size_t>(h - 2), static_cast<std::size_t>(x));
            } else {
                gy = 0.5 * (gray.at(static_cast<std::size_t>(y + 1), static_cast<std::size_t>(x)) -
                            gray.at(static_cast<std::size_t>(y - 1), static_cast<std::size_t>(x)));
            }
            out.map.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                std::sqrt(gx * gx + gy * gy);
        }
    }

    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < out.map.size(); ++i) {
        if (sky_mask.v[i]) {
            acc += out.map.v[i];
            ++n;
        }
    }
    if (n == 0) {
        out.degenerate = true;
        acc = std::accumulate(out.map.v.begin(), out.map.v.end(), 0.0);
        n = out.map.size();
    }
    out.avg = acc / static_cast<double>(n);
    return out;
}

std::array<double, 3> estimate_airlight(const RgbImage& img, const GrayImage& dark) {
    if (dark.size() != img.pixels()) {
        throw ShapeError("estimate_airlight: dark channel size mismatch");
    }
    std::vector<std::size_t> order(dark.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t keep = std::max<std::size_t>(1, dark.size() / 1000);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dark.v[a] != dark.v[b]) return dark.v[a] > dark.v[b];
                          return a < b;
                      });
    std::array<double, 3> air{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < keep; ++i) {
        for (std::size_t c = 0; c < 3; ++c) air[c] += img.v[order[i] * 3 + c];
    }
    for (auto& c : air) c = std::max(c / static_cast<double>(keep), 1e-6);
    return air;
}

nn::Tensor FeatureStack::to_chw() const {
    const std::size_t s = side();
    nn::Tensor out({kFeatureChannels, s, s});
    const auto& src = channels.data();
    auto& dst = out.data();
    for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
            for (std::size_t c = 0; c < kFeatureChannels; ++c)
                dst[(c * s + y) * s + x] = src[(y * s + x) * kFeatureChannels + c];
    return out;
}

FeatureStack build_feature_stack(const RgbImage& img, const FeatureConfig& cfg) {
    cfg.validate();
    if (img.height == 0 || img.width == 0) throw ValueError("build_feature_stack: empty image");

    const std::size_t s = cfg.target_size;
    const RgbImage resized = resize_bilinear(img, s, s);
    const GrayImage gray = to_gray(resized);

    // Sky mask: Otsu-bright pixels within the top rows.
    const std::size_t sky_rows =
        std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(s) * cfg.sky_fraction));
    GrayImage top(sky_rows, s);
    std::copy(gray.v.begin(), gray.v.begin() + static_cast<std::ptrdiff_t>(sky_rows * s),
              top.v.begin());
    const OtsuResult otsu = otsu_threshold(top);
    BinaryMask sky(s, s);
    for (std::size_t y = 0; y < sky_rows; ++y)
        for (std::size_t x = 0; x < s; ++x) sky.set(y, x, otsu.mask.at(y, x));

    const GrayImage dark = dark_channel(resized, cfg.dark_patch);
    const std::array<double, 3> airlight =
        cfg.airlight ? *cfg.airlight : estimate_airlight(resized, dark);
    const GrayImage trans = transmission(resized, airlight, cfg.dark_patch);
    const GrayImage depth = depth_proxy(trans, cfg.extinction, cfg.clamp_eps);
    const GrayImage blue = blueness_map(resized);
    const LocalStat rms = rms_contrast(gray, cfg.local_window);
    const LocalStat ent = entropy(gray, cfg.local_window);
    const SmoothnessResult smooth = smoothness(gray, sky);

    FeatureStack stack;
    stack.rms_global = rms.global;
    stack.entropy_global = ent.global;
    stack.smoothness_avg = smooth.avg;
    stack.otsu_threshold = otsu.threshold;
    stack.channels = nn::Tensor({s, s, kFeatureChannels});

    const GrayImage* maps[kFeatureChannels] = {&dark, &depth, &blue, &rms.map, &ent.map,
                                               &smooth.map};
    auto& dst = stack.channels.data();
    for (std::size_t c = 0; c < kFeatureChannels; ++c) {
        const auto& mv = maps[c]->v;
        const auto [mn_it, mx_it] = std::minmax_element(mv.begin(), mv.end());
        const double mn = *mn_it, range = *mx_it - *mn_it;
        for (std::size_t p = 0; p < mv.size(); ++p) {
            dst[p * kFeatureChannels + c] = range > 0.0 ? (mv[p] - mn) / range : 0.0;
        }
    }
    if (!stack.channels.all_finite()) {
        throw ValueError("build_feature_stack: non-finite feature values");
    }
    return stack;
}

}  // namespace aq::haze
