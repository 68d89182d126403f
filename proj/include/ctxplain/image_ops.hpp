#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"

namespace ctx {

namespace detail {

// Bilinear sample of one channel plane at (sx, sy), half-pixel-centered
// coordinates already converted to source space. Coordinates are clamped to
// the valid sample grid.
template <typename T>
double bilinear_at(const T* plane, int w, int h, std::size_t stride, double sx, double sy) {
    sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(sx);
    int y0 = static_cast<int>(sy);
    int x1 = std::min(x0 + 1, w - 1);
    int y1 = std::min(y0 + 1, h - 1);
    double fx = sx - x0;
    double fy = sy - y0;
    double v00 = static_cast<double>(plane[(static_cast<std::size_t>(y0) * w + x0) * stride]);
    double v10 = static_cast<double>(plane[(static_cast<std::size_t>(y0) * w + x1) * stride]);
    double v01 = static_cast<double>(plane[(static_cast<std::size_t>(y1) * w + x0) * stride]);
    double v11 = static_cast<double>(plane[(static_cast<std::size_t>(y1) * w + x1) * stride]);
    double top = v00 + (v10 - v00) * fx;
    double bot = v01 + (v11 - v01) * fx;
    return top + (bot - top) * fy;
}

template <typename In, typename Out, typename Quant>
void resize_plane(const In* src, int w, int h, std::size_t stride_in, Out* dst, int ow, int oh,
                  std::size_t stride_out, Quant quant) {
    const double scale_x = static_cast<double>(w) / ow;
    const double scale_y = static_cast<double>(h) / oh;
    for (int y = 0; y < oh; ++y) {
        double sy = (y + 0.5) * scale_y - 0.5;
        for (int x = 0; x < ow; ++x) {
            double sx = (x + 0.5) * scale_x - 0.5;
            dst[(static_cast<std::size_t>(y) * ow + x) * stride_out] =
                quant(bilinear_at(src, w, h, stride_in, sx, sy));
        }
    }
}

}  // namespace detail

// Bilinear resize with half-pixel-centered sampling; 8-bit output is
// re-quantized half-away-from-zero.
inline gray_image8 resize_bilinear(const gray_image8& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw error("resize target must be at least 1x1");
    gray_image8 out(out_w, out_h);
    detail::resize_plane(img.data.data(), img.width, img.height, 1, out.data.data(), out_w,
                         out_h, 1, [](double v) { return quantize8(v); });
    return out;
}

inline float_image resize_bilinear(const float_image& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw error("resize target must be at least 1x1");
    float_image out(out_w, out_h, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        detail::resize_plane(img.data.data() + c, img.width, img.height,
                             static_cast<std::size_t>(img.channels), out.data.data() + c, out_w,
                             out_h, static_cast<std::size_t>(img.channels),
                             [](double v) { return static_cast<float>(v); });
    }
    return out;
}

// Exact division by 255; 255 * out[i] recovers in[i] bit-for-bit.
inline float_image to_unit_interval(const gray_image8& img) {
    float_image out(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<float>(img.data[i]) / 255.0f;
    return out;
}

}  // namespace ctx
