#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/image.hpp"
#include "ctxplain/image_ops.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/tensor.hpp"

namespace ctx {

enum class explain_target { positive, negative };

// Class-discriminative localization map at input resolution, values in [0,1].
struct heatmap {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    heatmap() = default;
    heatmap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.f) {}
    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Pixel-space gradient map: raw signed values plus a min-max normalized
// render view in [0,1].
struct saliency_map {
    int width = 0;
    int height = 0;
    std::vector<float> raw;
    std::vector<float> render;
};

namespace detail {

template <typename T>
std::size_t last_conv_index(const basic_model<T>& m) {
    for (std::size_t i = m.layers.size(); i-- > 0;)
        if (m.layers[i].kind == layer_kind::conv2d) return i;
    throw no_conv_layer("model has no convolutional layer to localize against");
}

// Boundary holding the pre-sigmoid logit: just below a terminal sigmoid,
// otherwise the network output itself.
template <typename T>
std::size_t logit_boundary(const basic_model<T>& m) {
    if (!m.layers.empty() && m.layers.back().kind == layer_kind::sigmoid)
        return m.layers.size() - 1;
    return m.layers.size();
}

template <typename T>
basic_tensor<T> target_seed(const std::vector<std::size_t>& shape, explain_target t) {
    basic_tensor<T> seed(shape);
    seed.fill(t == explain_target::positive ? T(1) : T(-1));
    return seed;
}

inline tensor batch1_from_image(const float_image& img) {
    tensor x({1, static_cast<std::size_t>(img.channels), static_cast<std::size_t>(img.height),
              static_cast<std::size_t>(img.width)});
    std::copy(img.data.begin(), img.data.end(), x.data.begin());
    return x;
}

}  // namespace detail

// Channel weights and the unnormalized class activation map at feature-map
// resolution. Exposed separately so the weights can be cross-checked.
template <typename T>
struct cam_result {
    std::size_t conv_layer = 0;
    basic_tensor<T> alphas;  // [K]
    basic_tensor<T> map;     // [h, w], already through ReLU
};

// alpha_k = spatial mean of d(logit)/dA_k at the last conv layer's output;
// map = ReLU(sum_k alpha_k * A_k). The target picks the sign of the logit.
template <typename T>
cam_result<T> grad_cam_raw(const basic_model<T>& m, const basic_forward_record<T>& rec,
                           explain_target target) {
    if (rec.acts.empty()) throw no_forward_record("forward record is empty");
    const std::size_t ci = detail::last_conv_index(m);
    const std::size_t lb = detail::logit_boundary(m);
    auto seed = detail::target_seed<T>(rec.acts[lb].shape, target);
    auto d_act = m.backward_span(rec, lb, ci + 1, seed, backprop_mode::standard);

    const basic_tensor<T>& act = rec.acts[ci + 1];
    const std::size_t channels = act.dim(1), h = act.dim(2), w = act.dim(3);
    const std::size_t area = h * w;
    cam_result<T> out;
    out.conv_layer = ci;
    out.alphas = basic_tensor<T>({channels});
    for (std::size_t k = 0; k < channels; ++k) {
        T acc(0);
        for (std::size_t j = 0; j < area; ++j) acc += d_act[k * area + j];
        out.alphas[k] = acc / static_cast<T>(area);
    }
    out.map = basic_tensor<T>({h, w});
    for (std::size_t j = 0; j < area; ++j) {
        T acc(0);
        for (std::size_t k = 0; k < channels; ++k) acc += out.alphas[k] * act[k * area + j];
        out.map[j] = acc > T(0) ? acc : T(0);
    }
    return out;
}

inline heatmap grad_cam(const model& m, const float_image& img, explain_target target) {
    auto rec = m.forward(detail::batch1_from_image(img));
    auto cam = grad_cam_raw(m, rec, target);

    float_image coarse(static_cast<int>(cam.map.dim(1)), static_cast<int>(cam.map.dim(0)), 1);
    for (std::size_t j = 0; j < cam.map.numel(); ++j) coarse.data[j] = cam.map[j];
    float_image fine = resize_bilinear(coarse, img.width, img.height);

    heatmap out(img.width, img.height);
    float mx = 0.f;
    for (float v : fine.data) mx = std::max(mx, v);
    if (mx > 0.f)
        for (std::size_t j = 0; j < fine.data.size(); ++j) out.values[j] = fine.data[j] / mx;
    return out;
}

// Gradient of the target logit with respect to the input pixels for a
// recorded forward pass. Guided mode additionally zeroes ReLU gradients
// wherever the upstream gradient is negative.
template <typename T>
basic_tensor<T> input_gradient(const basic_model<T>& m, const basic_forward_record<T>& rec,
                               explain_target target, backprop_mode mode) {
    if (rec.acts.empty()) throw no_forward_record("forward record is empty");
    const std::size_t lb = detail::logit_boundary(m);
    auto seed = detail::target_seed<T>(rec.acts[lb].shape, target);
    return m.backward_span(rec, lb, 0, seed, mode);
}

inline saliency_map saliency_from_gradient(const tensor& grad, int width, int height) {
    saliency_map out;
    out.width = width;
    out.height = height;
    out.raw.assign(grad.data.begin(), grad.data.end());
    out.render.assign(out.raw.size(), 0.f);
    float lo = out.raw[0], hi = out.raw[0];
    for (float v : out.raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo)
        for (std::size_t j = 0; j < out.raw.size(); ++j)
            out.render[j] = (out.raw[j] - lo) / (hi - lo);
    return out;
}

inline saliency_map guided_backprop(const model& m, const float_image& img,
                                    explain_target target) {
    auto rec = m.forward(detail::batch1_from_image(img));
    auto grad = input_gradient(m, rec, target, backprop_mode::guided);
    return saliency_from_gradient(grad, img.width, img.height);
}

// Element-wise product of the heatmap and the normalized saliency render.
// Both factors live in [0,1], so the product needs no renormalization.
inline saliency_map guided_grad_cam(const heatmap& h, const saliency_map& s) {
    if (h.width != s.width || h.height != s.height)
        throw shape_mismatch("heatmap " + std::to_string(h.width) + "x" +
                             std::to_string(h.height) + " does not match saliency " +
                             std::to_string(s.width) + "x" + std::to_string(s.height));
    saliency_map out;
    out.width = h.width;
    out.height = h.height;
    out.raw.resize(h.values.size());
    for (std::size_t j = 0; j < h.values.size(); ++j) out.raw[j] = h.values[j] * s.render[j];
    out.render = out.raw;
    return out;
}

// Grayscale render with the green channel tripled (clamped at 255).
inline rgb_image8 enhance_green(const saliency_map& s) {
    rgb_image8 out(s.width, s.height);
    for (std::size_t j = 0; j < s.render.size(); ++j) {
        const int g = quantize8(255.0 * s.render[j]);
        out.data[j * 3 + 0] = static_cast<std::uint8_t>(g);
        out.data[j * 3 + 1] = static_cast<std::uint8_t>(std::min(3 * g, 255));
        out.data[j * 3 + 2] = static_cast<std::uint8_t>(g);
    }
    return out;
}

// Piecewise-linear heat colormap. Stops: 0 -> blue (0,0,255),
// 0.5 -> green (0,255,0), 1 -> red (255,0,0).
inline std::array<double, 3> heat_colormap(double v) {
    v = std::clamp(v, 0.0, 1.0);
    if (v <= 0.5) {
        const double t = v / 0.5;
        return {0.0, 255.0 * t, 255.0 * (1.0 - t)};
    }
    const double t = (v - 0.5) / 0.5;
    return {255.0 * t, 255.0 * (1.0 - t), 0.0};
}

inline rgb_image8 overlay(const gray_image8& img, const heatmap& h, double alpha = 0.4) {
    if (img.width != h.width || img.height != h.height)
        throw shape_mismatch("image " + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + " does not match heatmap " +
                             std::to_string(h.width) + "x" + std::to_string(h.height));
    if (alpha < 0.0 || alpha > 1.0) throw error("overlay alpha must be in [0, 1]");
    rgb_image8 out(img.width, img.height);
    for (std::size_t j = 0; j < img.data.size(); ++j) {
        const double gray = img.data[j];
        const auto cmap = heat_colormap(h.values[j]);
        for (int c = 0; c < 3; ++c)
            out.data[j * 3 + c] = quantize8((1.0 - alpha) * gray + alpha * cmap[c]);
    }
    return out;
}

// Grayscale 8-bit view of a saliency render, for PNG export.
inline gray_image8 render_gray(const saliency_map& s) {
    gray_image8 out(s.width, s.height);
    for (std::size_t j = 0; j < s.render.size(); ++j) out.data[j] = quantize8(255.0 * s.render[j]);
    return out;
}

}  // namespace ctx
