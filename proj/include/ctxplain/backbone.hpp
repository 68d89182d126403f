#pragma once

#include <cstdint>

#include "ctxplain/error.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/rng.hpp"
#include "ctxplain/tensor.hpp"

namespace ctx {

namespace detail {

inline std::string init_stage_name(std::size_t i, const basic_layer<float>& l) {
    return "layers." + std::to_string(i) + "." + l.weights_name();
}

inline void glorot_init(model& m, std::uint64_t seed) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        auto& l = m.layers[i];
        if (!l.has_params()) continue;
        std::size_t fan_in = 0, fan_out = 0;
        if (l.kind == layer_kind::conv2d) {
            const std::size_t rf = l.weights.dim(2) * l.weights.dim(3);
            fan_in = l.weights.dim(1) * rf;
            fan_out = l.weights.dim(0) * rf;
        } else {
            fan_in = l.weights.dim(1);
            fan_out = l.weights.dim(0);
        }
        l.weights = tensor::glorot_uniform(l.weights.shape, fan_in, fan_out,
                                           derive_seed(seed, init_stage_name(i, l)));
        l.bias.fill(0.0f);
    }
    m.bump_version();
}

}  // namespace detail

// Compact convolutional feature extractor: three stages of 3x3 conv (pad 1),
// relu and 2x2 max pooling, then a final 32-channel 3x3 conv + relu. For a
// 224x224 grayscale input the output is [32, 28, 28].
inline model tiny_backbone(std::uint64_t seed, std::size_t side = 224) {
    model m;
    m.input_shape = {1, side, side};
    using L = basic_layer<float>;
    m.layers.push_back(L::conv2d(16, 1, 3, 1, 1));
    m.layers.push_back(L::relu());
    m.layers.push_back(L::maxpool2d(2, 2));
    m.layers.push_back(L::conv2d(16, 16, 3, 1, 1));
    m.layers.push_back(L::relu());
    m.layers.push_back(L::maxpool2d(2, 2));
    m.layers.push_back(L::conv2d(16, 16, 3, 1, 1));
    m.layers.push_back(L::relu());
    m.layers.push_back(L::maxpool2d(2, 2));
    m.layers.push_back(L::conv2d(32, 16, 3, 1, 1));
    m.layers.push_back(L::relu());
    detail::glorot_init(m, seed);
    return m;
}

// Appends a binary classification head (global average pool, a hidden dense
// layer with relu, then dense + sigmoid) to a convolutional feature
// extractor. The extractor must end in a 4-d feature map. Its layers are
// marked frozen by default, which the optimizer honors by never updating
// them.
inline model build_transfer_model(const model& backbone, std::uint64_t seed,
                                  std::size_t hidden = 512, bool freeze = true) {
    auto shapes = backbone.boundary_shapes(1);
    const auto& feat = shapes.back();
    if (feat.size() != 4)
        throw no_conv_output("feature extractor ends in a rank-" +
                             std::to_string(feat.size() - 1) +
                             " activation; a 4-d feature map is required");
    model m = backbone;
    if (freeze)
        for (auto& l : m.layers) l.frozen = true;
    const std::size_t channels = feat[1];
    using L = basic_layer<float>;
    const std::size_t head_start = m.layers.size();
    m.layers.push_back(L::global_avg_pool());
    m.layers.push_back(L::dense(hidden, channels));
    m.layers.push_back(L::relu());
    m.layers.push_back(L::dense(1, hidden));
    m.layers.push_back(L::sigmoid());
    for (std::size_t i = head_start; i < m.layers.size(); ++i) {
        auto& l = m.layers[i];
        if (!l.has_params()) continue;
        l.weights = tensor::glorot_uniform(
            l.weights.shape, l.weights.dim(1), l.weights.dim(0),
            derive_seed(seed, detail::init_stage_name(i, l)));
        l.bias.fill(0.0f);
    }
    m.bump_version();
    return m;
}

}  // namespace ctx
