#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"

namespace ctx {

namespace detail {

struct png_read_guard {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~png_read_guard() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct png_write_guard {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~png_write_guard() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace detail

// Load an 8- or 16-bit grayscale PNG. 16-bit samples are reduced to 8 bits by
// taking the high byte (v >> 8). Palette, color, and alpha images are
// rejected, as are bit depths other than 8/16.
inline gray_image8 load_png(const std::filesystem::path& path) {
    detail::png_read_guard g;
    std::vector<png_bytep> rows;
    gray_image8 out;

    g.fp = std::fopen(path.string().c_str(), "rb");
    if (!g.fp) throw io_error("cannot open " + path.string());
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw io_error("png_create_read_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw io_error("png_create_info_struct failed");

    if (setjmp(png_jmpbuf(g.png))) throw io_error("libpng failed reading " + path.string());

    png_init_io(g.png, g.fp);
    png_read_info(g.png, g.info);

    const png_byte color_type = png_get_color_type(g.png, g.info);
    const png_byte bit_depth = png_get_bit_depth(g.png, g.info);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        throw unsupported_png("palette PNG not supported: " + path.string());
    if (color_type != PNG_COLOR_TYPE_GRAY)
        throw unsupported_png("only grayscale PNG input is supported: " + path.string());
    if (bit_depth != 8 && bit_depth != 16)
        throw unsupported_png("grayscale bit depth " + std::to_string(bit_depth) +
                              " not supported: " + path.string());
    if (bit_depth == 16) png_set_strip_16(g.png);  // keeps the high byte, i.e. v >> 8
    png_set_interlace_handling(g.png);
    png_read_update_info(g.png, g.info);

    out.width = static_cast<int>(png_get_image_width(g.png, g.info));
    out.height = static_cast<int>(png_get_image_height(g.png, g.info));
    out.data.assign(static_cast<std::size_t>(out.width) * out.height, 0);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y)
        rows[y] = out.data.data() + static_cast<std::size_t>(y) * out.width;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);
    return out;
}

namespace detail {

inline void save_png_impl(const std::filesystem::path& path, int width, int height,
                          int color_type, const std::uint8_t* data, std::size_t row_bytes) {
    png_write_guard g;
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * row_bytes);

    g.fp = std::fopen(path.string().c_str(), "wb");
    if (!g.fp) throw io_error("cannot open " + path.string() + " for writing");
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw io_error("png_create_write_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw io_error("png_create_info_struct failed");

    if (setjmp(png_jmpbuf(g.png))) throw io_error("libpng failed writing " + path.string());

    png_init_io(g.png, g.fp);
    png_set_IHDR(g.png, g.info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);
    png_write_image(g.png, rows.data());
    png_write_end(g.png, nullptr);
}

}  // namespace detail

inline void save_png(const std::filesystem::path& path, const gray_image8& img) {
    detail::save_png_impl(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, img.data.data(),
                          static_cast<std::size_t>(img.width));
}

inline void save_png(const std::filesystem::path& path, const rgb_image8& img) {
    detail::save_png_impl(path, img.width, img.height, PNG_COLOR_TYPE_RGB, img.data.data(),
                          static_cast<std::size_t>(img.width) * 3);
}

}  // namespace ctx
