#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "aq/errors.hpp"
#include "aq/haze/features.hpp"
#include "aq/haze/image.hpp"

using namespace aq;
using haze::BinaryMask;
using haze::GrayImage;
using haze::RgbImage;

namespace {

RgbImage random_rgb(std::size_t h, std::size_t w, std::mt19937_64& rng) {
    RgbImage img(h, w);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : img.v) v = dist(rng);
    return img;
}

GrayImage random_gray(std::size_t h, std::size_t w, std::mt19937_64& rng) {
    GrayImage g(h, w);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : g.v) v = dist(rng);
    return g;
}

// exhaustive 256-threshold search maximizing between-class variance
int otsu_exhaustive(const GrayImage& g) {
    std::array<double, 256> hist{};
    for (double p : g.v) {
        hist[static_cast<std::size_t>(std::clamp(static_cast<int>(p * 256), 0, 255))] += 1.0;
    }
    const double total = static_cast<double>(g.size());
    int best = 0;
    double best_var = -1.0;
    for (int k = 0; k < 255; ++k) {
        double w0 = 0, w1 = 0, m0 = 0, m1 = 0;
        for (int b = 0; b <= k; ++b) {
            w0 += hist[static_cast<std::size_t>(b)];
            m0 += b * hist[static_cast<std::size_t>(b)];
        }
        for (int b = k + 1; b < 256; ++b) {
            w1 += hist[static_cast<std::size_t>(b)];
            m1 += b * hist[static_cast<std::size_t>(b)];
        }
        if (w0 == 0 || w1 == 0) continue;
        m0 /= w0;
        m1 /= w1;
        const double var = (w0 / total) * (w1 / total) * (m0 - m1) * (m0 - m1);
        if (var > best_var + 1e-15) {
            best_var = var;
            best = k;
        }
    }
    return best_var <= 0 ? 0 : best;
}

// brute-force double-min loop over patch and channels
GrayImage dark_channel_loop(const RgbImage& img, int patch) {
    const int r = patch / 2;
    const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
    GrayImage out(img.height, img.width);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = 1e300;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx)
                    for (std::size_t c = 0; c < 3; ++c)
                        m = std::min(m, img.at(static_cast<std::size_t>(yy),
                                               static_cast<std::size_t>(xx), c));
            out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = m;
        }
    return out;
}

GrayImage transmission_loop(const RgbImage& img, const std::array<double, 3>& air, int patch) {
    const int r = patch / 2;
    const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
    GrayImage out(img.height, img.width);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = 1e300;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx)
                    for (std::size_t c = 0; c < 3; ++c)
                        m = std::min(m, img.at(static_cast<std::size_t>(yy),
                                               static_cast<std::size_t>(xx), c) /
                                            air[c]);
            out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                std::clamp(1.0 - m, 0.0, 1.0);
        }
    return out;
}

double rms_global_loop(const GrayImage& g) {
    double mean = 0.0;
    for (double v : g.v) mean += v;
    mean /= static_cast<double>(g.size());
    double acc = 0.0;
    for (double v : g.v) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(g.size()));
}

GrayImage smoothness_loop(const GrayImage& g) {
    const int h = static_cast<int>(g.height), w = static_cast<int>(g.width);
    GrayImage out(g.height, g.width);
    auto px = [&](int y, int x) {
        return g.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = 0, gy = 0;
            if (w > 1)
                gx = x == 0 ? px(y, 1) - px(y, 0)
                            : (x == w - 1 ? px(y, w - 1) - px(y, w - 2)
                                          : 0.5 * (px(y, x + 1) - px(y, x - 1)));
            if (h > 1)
                gy = y == 0 ? px(1, x) - px(0, x)
                            : (y == h - 1 ? px(h - 1, x) - px(h - 2, x)
                                          : 0.5 * (px(y + 1, x) - px(y - 1, x)));
            out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("haze-features");

TEST_CASE("otsu separates a bimodal image and matches exhaustive search") {
    GrayImage g(4, 4);
    for (std::size_t i = 0; i < 8; ++i) g.v[i] = 0.0;
    for (std::size_t i = 8; i < 16; ++i) g.v[i] = 1.0;
    auto res = haze::otsu_threshold(g);
    CHECK(res.threshold == otsu_exhaustive(g));
    CHECK_FALSE(res.degenerate);
    // the mask singles out the bright mode
    for (std::size_t i = 0; i < 8; ++i) CHECK_FALSE(res.mask.v[i]);
    for (std::size_t i = 8; i < 16; ++i) CHECK(res.mask.v[i]);
}

TEST_CASE("otsu degenerate and ramp cases") {
    GrayImage flat(3, 5, 0.42);
    auto res = haze::otsu_threshold(flat);
    CHECK(res.threshold == 0);
    CHECK(res.degenerate);
    CHECK(res.mask.count() == flat.size());

    GrayImage ramp(1, 64);
    for (std::size_t x = 0; x < 64; ++x) ramp.v[x] = static_cast<double>(x) / 63.0;
    CHECK(haze::otsu_threshold(ramp).threshold == otsu_exhaustive(ramp));

    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        GrayImage g = random_gray(9, 7, rng);
        CHECK(haze::otsu_threshold(g).threshold == otsu_exhaustive(g));
    }
}

TEST_CASE("dark channel basics") {
    RgbImage white(5, 5);
    std::fill(white.v.begin(), white.v.end(), 1.0);
    GrayImage d = haze::dark_channel(white, 3);
    for (double v : d.v) CHECK(v == 1.0);

    // a zero green channel everywhere forces a zero dark channel
    RgbImage zeroed(5, 5);
    for (std::size_t p = 0; p < zeroed.pixels(); ++p) {
        zeroed.v[p * 3] = 0.8;
        zeroed.v[p * 3 + 1] = 0.0;
        zeroed.v[p * 3 + 2] = 0.9;
    }
    for (double v : haze::dark_channel(zeroed, 3).v) CHECK(v == 0.0);

    CHECK_THROWS_AS(haze::dark_channel(white, 4), ConfigError);
}

TEST_CASE("dark channel matches brute-force loop on random 8x8 images") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 30; ++i) {
        RgbImage img = random_rgb(8, 8, rng);
        GrayImage fast = haze::dark_channel(img, 3);
        GrayImage slow = dark_channel_loop(img, 3);
        for (std::size_t p = 0; p < fast.size(); ++p) CHECK(fast.v[p] == slow.v[p]);
    }
}

TEST_CASE("dark channel is monotone under brightening") {
    std::mt19937_64 rng(23);
    RgbImage img = random_rgb(10, 10, rng);
    GrayImage base = haze::dark_channel(img, 5);
    std::uniform_int_distribution<std::size_t> pick(0, img.v.size() - 1);
    for (int trial = 0; trial < 50; ++trial) {
        RgbImage brighter = img;
        const std::size_t at = pick(rng);
        brighter.v[at] = std::min(1.0, brighter.v[at] + 0.3);
        GrayImage after = haze::dark_channel(brighter, 5);
        for (std::size_t p = 0; p < after.size(); ++p) CHECK(after.v[p] >= base.v[p]);
    }
}

TEST_CASE("transmission edge values and loop oracle") {
    RgbImage white(6, 6);
    std::fill(white.v.begin(), white.v.end(), 1.0);
    const std::array<double, 3> unit{1.0, 1.0, 1.0};
    for (double v : haze::transmission(white, unit, 3).v) CHECK(v == 0.0);

    RgbImage black(6, 6);
    for (double v : haze::transmission(black, unit, 3).v) CHECK(v == 1.0);

    std::mt19937_64 rng(29);
    const std::array<double, 3> air{0.9, 0.85, 0.95};
    for (int i = 0; i < 20; ++i) {
        RgbImage img = random_rgb(8, 8, rng);
        GrayImage fast = haze::transmission(img, air, 3);
        GrayImage slow = transmission_loop(img, air, 3);
        for (std::size_t p = 0; p < fast.size(); ++p)
            CHECK(fast.v[p] == doctest::Approx(slow.v[p]).epsilon(1e-15));
    }

    CHECK_THROWS_AS(haze::transmission(white, {0.0, 1.0, 1.0}, 3), ValueError);
}

TEST_CASE("depth proxy inversion") {
    GrayImage clear(3, 3, 1.0);
    for (double v : haze::depth_proxy(clear, 1.0, 1e-3).v) CHECK(v == 0.0);

    // t = e^-1 gives raw depth 1, t = e^-2 raw depth 2; rescale by the max
    GrayImage two(1, 2);
    two.v[0] = std::exp(-1.0);
    two.v[1] = std::exp(-2.0);
    GrayImage d = haze::depth_proxy(two, 1.0, 1e-6);
    CHECK(d.v[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.v[1] == doctest::Approx(1.0).epsilon(1e-12));

    GrayImage zero(2, 2, 0.0);
    GrayImage dz = haze::depth_proxy(zero, 1.0, 1e-3);
    for (double v : dz.v) {
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(1.0));  // constant raw -ln(eps), rescaled
    }
}

TEST_CASE("rgb to hsv standard corners") {
    auto red = haze::rgb_to_hsv(1, 0, 0);
    CHECK(red.h == doctest::Approx(0.0));
    CHECK(red.s == doctest::Approx(1.0));
    CHECK(red.v == doctest::Approx(1.0));

    auto gray = haze::rgb_to_hsv(0.5, 0.5, 0.5);
    CHECK(gray.s == doctest::Approx(0.0));
    CHECK(gray.v == doctest::Approx(0.5));
    CHECK(gray.h == doctest::Approx(0.0));

    auto blue = haze::rgb_to_hsv(0, 0, 1);
    CHECK(blue.h == doctest::Approx(240.0));
    auto green = haze::rgb_to_hsv(0, 1, 0);
    CHECK(green.h == doctest::Approx(120.0));
}

TEST_CASE("blueness membership") {
    RgbImage px(1, 3);
    px.at(0, 0, 2) = 1.0;                                    // pure blue
    px.at(0, 1, 0) = 1.0;                                    // pure red
    px.at(0, 2, 0) = px.at(0, 2, 1) = px.at(0, 2, 2) = 0.6;  // gray
    GrayImage b = haze::blueness_map(px);
    CHECK(b.v[0] == doctest::Approx(1.0));
    CHECK(b.v[1] == doctest::Approx(0.0));
    CHECK(b.v[2] == doctest::Approx(0.0));
}

TEST_CASE("rms contrast values") {
    GrayImage flat(4, 4, 0.7);
    auto rf = haze::rms_contrast(flat, 3);
    CHECK(rf.global == doctest::Approx(0.0));
    for (double v : rf.map.v) CHECK(v == doctest::Approx(0.0));

    GrayImage two(1, 2);
    two.v = {0.0, 1.0};
    CHECK(haze::rms_contrast(two, 1).global == doctest::Approx(0.5));

    std::mt19937_64 rng(31);
    for (int i = 0; i < 10; ++i) {
        GrayImage g = random_gray(7, 9, rng);
        CHECK(haze::rms_contrast(g, 3).global ==
              doctest::Approx(rms_global_loop(g)).epsilon(1e-12));
    }
}

TEST_CASE("entropy values") {
    GrayImage flat(8, 8, 0.3);
    CHECK(haze::entropy(flat, 3).global == doctest::Approx(0.0));

    // one pixel in each of the 256 bins
    GrayImage uniform(16, 16);
    for (std::size_t i = 0; i < 256; ++i) uniform.v[i] = (static_cast<double>(i) + 0.5) / 256.0;
    CHECK(haze::entropy(uniform, 3).global == doctest::Approx(8.0).epsilon(1e-12));

    GrayImage bimodal(2, 2);
    bimodal.v = {0.1, 0.1, 0.9, 0.9};
    CHECK(haze::entropy(bimodal, 1).global == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 rng(5);
    GrayImage g = random_gray(10, 10, rng);
    const double e = haze::entropy(g, 5).global;
    CHECK(e >= 0.0);
    CHECK(e <= 8.0);
}

TEST_CASE("smoothness map and sky average") {
    GrayImage flat(5, 5, 0.2);
    BinaryMask all(5, 5, true);
    auto sf = haze::smoothness(flat, all);
    CHECK(sf.avg == doctest::Approx(0.0));

    // horizontal ramp: interior magnitude is the step size
    const std::size_t n = 9;
    GrayImage ramp(n, n);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) ramp.at(y, x) = static_cast<double>(x) / (n - 1);
    auto sr = haze::smoothness(ramp, BinaryMask(n, n, true));
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 1; x + 1 < n; ++x)
            CHECK(sr.map.at(y, x) == doctest::Approx(1.0 / (n - 1)).epsilon(1e-12));
    GrayImage want = smoothness_loop(ramp);
    double want_avg = 0;
    for (double v : want.v) want_avg += v;
    CHECK(sr.avg == doctest::Approx(want_avg / want.v.size()).epsilon(1e-12));

    std::mt19937_64 rng(41);
    GrayImage g = random_gray(8, 8, rng);
    GrayImage slow = smoothness_loop(g);
    auto fast = haze::smoothness(g, BinaryMask(8, 8, true));
    for (std::size_t p = 0; p < slow.size(); ++p)
        CHECK(fast.map.v[p] == doctest::Approx(slow.v[p]).epsilon(1e-12));

    // empty mask falls back to the whole image and flags it
    auto degen = haze::smoothness(g, BinaryMask(8, 8, false));
    CHECK(degen.degenerate);
    CHECK(degen.avg == doctest::Approx(fast.avg));
}

TEST_CASE("feature stack shape, determinism, and channel range") {
    std::mt19937_64 rng(53);
    haze::FeatureConfig cfg;
    cfg.target_size = 32;
    cfg.dark_patch = 7;
    cfg.local_window = 5;

    RgbImage img = random_rgb(48, 40, rng);
    auto stack = haze::build_feature_stack(img, cfg);
    CHECK(stack.channels.shape() == nn::Shape{32, 32, 6});
    CHECK(stack.channels.all_finite());

    auto again = haze::build_feature_stack(img, cfg);
    CHECK(std::memcmp(stack.channels.data().data(), again.channels.data().data(),
                      stack.channels.numel() * sizeof(double)) == 0);

    haze::FeatureConfig defaults;
    CHECK(defaults.target_size == 128);

    // CHW view is a permutation of the same values
    auto chw = stack.to_chw();
    CHECK(chw.shape() == nn::Shape{6, 32, 32});
    CHECK(chw.data()[0 * 32 * 32 + 5 * 32 + 7] ==
          stack.channels.data()[(5 * 32 + 7) * 6 + 0]);
}

TEST_CASE("all six channels stay in [0,1] over fuzzed images") {
    std::mt19937_64 rng(61);
    haze::FeatureConfig cfg;
    cfg.target_size = 16;
    cfg.dark_patch = 3;
    cfg.local_window = 3;
    for (int i = 0; i < 1000; ++i) {
        RgbImage img = random_rgb(16, 16, rng);
        auto stack = haze::build_feature_stack(img, cfg);
        for (double v : stack.channels.data()) {
            if (!(v >= 0.0 && v <= 1.0)) {
                CAPTURE(i);
                REQUIRE(false);
            }
        }
    }
    CHECK(true);
}

TEST_CASE("config validation") {
    haze::FeatureConfig cfg;
    cfg.dark_patch = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.target_size = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.sky_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_SUITE_END();
