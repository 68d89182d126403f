#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctxplain/error.hpp"

namespace ctx {

// Half-away-from-zero rounding, the one quantization rule used everywhere
// intensities are produced.
inline int round_half_away(double v) { return static_cast<int>(std::llround(v)); }

inline std::uint8_t quantize8(double v) {
    long r = std::llround(v);
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    return static_cast<std::uint8_t>(r);
}

// 8-bit single-channel raster, row-major. The universal slice representation
// after Hounsfield conversion.
struct gray_image8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size = width * height

    gray_image8() = default;
    gray_image8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

// Row-major float raster, 1 or 3 interleaved channels. Values are in [0, 1]
// once an image has been through to_unit_interval.
struct float_image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;  // size = width * height * channels

    float_image() = default;
    float_image(int w, int h, int c = 1, float fill = 0.f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// 8-bit RGB raster, interleaved, used for saliency renders and overlays.
struct rgb_image8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size = width * height * 3

    rgb_image8() = default;
    rgb_image8(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

struct rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const rect&) const = default;
};

inline gray_image8 crop(const gray_image8& img, const rect& r) {
    if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > img.width ||
        r.y + r.h > img.height) {
        throw index_out_of_range("crop rect outside image bounds");
    }
    gray_image8 out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
    return out;
}

}  // namespace ctx
