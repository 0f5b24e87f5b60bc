#include "aq/haze/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "aq/errors.hpp"

namespace aq::haze {

void RgbImage::validate_range() const {
    for (double c : v) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ValueError("rgb component " + std::to_string(c) + " outside [0,1]");
        }
    }
}

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (auto b : v) n += b != 0;
    return n;
}

namespace {

// --- netpbm ------------------------------------------------------------

int pnm_next_token(std::istream& in) {
    // skips whitespace and '#' comments, returns the next integer
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return value;
}

RgbImage load_pnm(std::istream& in, const std::string& path, bool color) {
    const int width = pnm_next_token(in);
    const int height = pnm_next_token(in);
    const int maxval = pnm_next_token(in);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw IoError("bad PNM header in " + path);
    }
    in.get();  // single whitespace before raster
    const std::size_t channels = color ? 3 : 1;
    const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
    const bool wide = maxval > 255;
    std::vector<unsigned char> raw(samples * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw IoError("truncated PNM raster in " + path);
    }
    RgbImage img(static_cast<std::size_t>(height), static_cast<std::size_t>(width));
    const double scale = 1.0 / maxval;
    for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) {
        double rgb[3];
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t s = p * channels + c;
            const unsigned value = wide ? (raw[s * 2] << 8 | raw[s * 2 + 1]) : raw[s];
            rgb[c] = value * scale;
        }
        if (!color) rgb[1] = rgb[2] = rgb[0];
        for (std::size_t c = 0; c < 3; ++c) img.v[p * 3 + c] = rgb[c];
    }
    return img;
}

// --- png ---------------------------------------------------------------

struct PngCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

RgbImage load_png(const std::string& path) {
    PngCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open image " + path);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("libpng init failed for " + path);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("libpng init failed for " + path);
    if (setjmp(png_jmpbuf(ctx.png))) {
        throw IoError("undecodable image " + path);
    }
    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(ctx.png, ctx.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
                 nullptr);

    // normalize everything to 8-bit RGB
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (bit_depth == 16) png_set_strip_16(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const std::size_t row_bytes = png_get_rowbytes(ctx.png, ctx.info);
    if (row_bytes != static_cast<std::size_t>(width) * 3) {
        throw IoError("unexpected PNG row layout in " + path);
    }
    std::vector<unsigned char> raster(static_cast<std::size_t>(height) * row_bytes);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * row_bytes;
    png_read_image(ctx.png, rows.data());

    RgbImage img(height, width);
    for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = raster[i] / 255.0;
    return img;
}

}  // namespace

RgbImage load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2) throw IoError("undecodable image " + path);
    if (magic[0] == 'P' && magic[1] == '6') return load_pnm(in, path, true);
    if (magic[0] == 'P' && magic[1] == '5') return load_pnm(in, path, false);
    in.close();
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return load_png(path);
    throw IoError("undecodable image " + path + " (not PNG, PPM, or PGM)");
}

void save_ppm(const RgbImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.v.size());
    for (std::size_t i = 0; i < img.v.size(); ++i) {
        const double c = std::clamp(img.v[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(c * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing " + path);
}

RgbImage resize_bilinear(const RgbImage& img, std::size_t out_h, std::size_t out_w) {
    if (img.height == 0 || img.width == 0) throw ValueError("resize of empty image");
    if (img.height == out_h && img.width == out_w) return img;
    RgbImage out(out_h, out_w);
    const double sy = out_h > 1 ? double(img.height - 1) / double(out_h - 1) : 0.0;
    const double sx = out_w > 1 ? double(img.width - 1) / double(out_w - 1) : 0.0;
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = y * sy;
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = x * sx;
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
                const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

GrayImage to_gray(const RgbImage& img) {
    GrayImage g(img.height, img.width);
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        g.v[p] = 0.299 * img.v[p * 3] + 0.587 * img.v[p * 3 + 1] + 0.114 * img.v[p * 3 + 2];
    }
    return g;
}

}  // namespace aq::haze
