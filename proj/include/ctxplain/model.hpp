#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/tensor.hpp"

namespace ctx {

enum class layer_kind { conv2d, relu, maxpool2d, global_avg_pool, dense, sigmoid };

inline const char* layer_kind_name(layer_kind k) {
    switch (k) {
        case layer_kind::conv2d: return "conv2d";
        case layer_kind::relu: return "relu";
        case layer_kind::maxpool2d: return "maxpool2d";
        case layer_kind::global_avg_pool: return "global_avg_pool";
        case layer_kind::dense: return "dense";
        case layer_kind::sigmoid: return "sigmoid";
    }
    return "?";
}

enum class backprop_mode { standard, guided };

template <typename T>
struct basic_layer {
    layer_kind kind = layer_kind::relu;
    basic_tensor<T> weights;  // conv2d: [out_c, in_c, kh, kw]; dense: [out, in]
    basic_tensor<T> bias;     // conv2d: [out_c]; dense: [out]
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::size_t pool = 2;
    bool frozen = false;

    bool has_params() const { return kind == layer_kind::conv2d || kind == layer_kind::dense; }

    // "kernel" for convolutions, "weight" for dense layers.
    const char* weights_name() const {
        return kind == layer_kind::conv2d ? "kernel" : "weight";
    }

    static basic_layer conv2d(std::size_t out_c, std::size_t in_c, std::size_t k,
                              std::size_t stride = 1, std::size_t pad = 0) {
        basic_layer l;
        l.kind = layer_kind::conv2d;
        l.weights = basic_tensor<T>({out_c, in_c, k, k});
        l.bias = basic_tensor<T>({out_c});
        l.stride = stride;
        l.pad = pad;
        return l;
    }
    static basic_layer relu() {
        basic_layer l;
        l.kind = layer_kind::relu;
        return l;
    }
    static basic_layer maxpool2d(std::size_t pool, std::size_t stride) {
        basic_layer l;
        l.kind = layer_kind::maxpool2d;
        l.pool = pool;
        l.stride = stride;
        return l;
    }
    static basic_layer global_avg_pool() {
        basic_layer l;
        l.kind = layer_kind::global_avg_pool;
        return l;
    }
    static basic_layer dense(std::size_t out, std::size_t in) {
        basic_layer l;
        l.kind = layer_kind::dense;
        l.weights = basic_tensor<T>({out, in});
        l.bias = basic_tensor<T>({out});
        return l;
    }
    static basic_layer sigmoid() {
        basic_layer l;
        l.kind = layer_kind::sigmoid;
        return l;
    }
};

// Everything backward needs: the activation at every layer boundary
// (acts[0] is the network input, acts[i + 1] the output of layer i) and,
// for each max-pool layer, the flat input index that won each window.
template <typename T>
struct basic_forward_record {
    std::vector<basic_tensor<T>> acts;
    std::vector<std::vector<std::size_t>> pool_argmax;  // per layer; empty unless maxpool2d
    std::uint64_t model_version = 0;

    const basic_tensor<T>& output() const { return acts.back(); }
};

template <typename T>
struct basic_gradients {
    std::vector<basic_tensor<T>> weights;  // per layer; empty tensor if no params
    std::vector<basic_tensor<T>> bias;
    basic_tensor<T> input;  // empty when backward stops above boundary 0
};

template <typename T>
struct basic_model {
    std::vector<basic_layer<T>> layers;
    std::vector<std::size_t> input_shape;  // per-sample shape, no batch dim
    std::uint64_t version = 1;

    void bump_version() { ++version; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.numel() + l.bias.numel();
        return n;
    }

    // Shape of every boundary for a batch of the given size. Throws
    // shape_mismatch when a layer cannot accept what the previous one emits.
    std::vector<std::vector<std::size_t>> boundary_shapes(std::size_t batch) const {
        std::vector<std::vector<std::size_t>> out;
        std::vector<std::size_t> cur;
        cur.push_back(batch);
        for (auto d : input_shape) cur.push_back(d);
        out.push_back(cur);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            cur = layer_output_shape(i, cur);
            out.push_back(cur);
        }
        return out;
    }

    basic_forward_record<T> forward(const basic_tensor<T>& input) const {
        check_input(input);
        basic_forward_record<T> rec;
        rec.model_version = version;
        rec.acts.reserve(layers.size() + 1);
        rec.pool_argmax.resize(layers.size());
        rec.acts.push_back(input);
        for (std::size_t i = 0; i < layers.size(); ++i)
            rec.acts.push_back(apply_layer(i, rec.acts.back(), rec.pool_argmax[i]));
        return rec;
    }

    // Full backward pass from the network output. Parameter gradients are
    // produced for every layer at or above stop_boundary; the propagation
    // does not descend below it. stop_boundary 0 reaches the input.
    basic_gradients<T> backward(const basic_forward_record<T>& rec, const basic_tensor<T>& d_out,
                                backprop_mode mode = backprop_mode::standard,
                                std::size_t stop_boundary = 0) const {
        check_record(rec);
        if (!d_out.same_shape(rec.acts.back()))
            throw shape_mismatch("output gradient shape " + shape_string(d_out.shape) +
                                 " does not match network output " +
                                 shape_string(rec.acts.back().shape));
        basic_gradients<T> g;
        g.weights.resize(layers.size());
        g.bias.resize(layers.size());
        basic_tensor<T> up = d_out;
        for (std::size_t i = layers.size(); i-- > stop_boundary;)
            up = layer_backward(i, rec, up, mode, &g.weights[i], &g.bias[i]);
        if (stop_boundary == 0) g.input = std::move(up);
        return g;
    }

    // Propagate a gradient seeded at boundary `from` down to boundary `to`
    // and return it there. No parameter gradients are accumulated. Used by
    // the saliency routines, which differentiate an internal quantity with
    // respect to an internal activation.
    basic_tensor<T> backward_span(const basic_forward_record<T>& rec, std::size_t from,
                                  std::size_t to, const basic_tensor<T>& seed,
                                  backprop_mode mode = backprop_mode::standard) const {
        check_record(rec);
        if (from > layers.size() || to > from)
            throw index_out_of_range("backward span [" + std::to_string(to) + ", " +
                                     std::to_string(from) + "] is not a valid boundary range");
        if (!seed.same_shape(rec.acts[from]))
            throw shape_mismatch("seed shape " + shape_string(seed.shape) +
                                 " does not match activation at boundary " + std::to_string(from));
        basic_tensor<T> up = seed;
        for (std::size_t i = from; i-- > to;)
            up = layer_backward(i, rec, up, mode, nullptr, nullptr);
        return up;
    }

    // Copy of layers [first, last) as a standalone model whose input shape
    // matches boundary `first` of this model.
    basic_model slice(std::size_t first, std::size_t last) const {
        if (first > last || last > layers.size())
            throw index_out_of_range("layer slice [" + std::to_string(first) + ", " +
                                     std::to_string(last) + ") out of range");
        auto shapes = boundary_shapes(1);
        basic_model out;
        out.input_shape.assign(shapes[first].begin() + 1, shapes[first].end());
        out.layers.assign(layers.begin() + static_cast<std::ptrdiff_t>(first),
                          layers.begin() + static_cast<std::ptrdiff_t>(last));
        return out;
    }

    // Overwrite layers [offset, offset + src.layers.size()) with the
    // parameters of src. Layer kinds must line up.
    void adopt_params(const basic_model& src, std::size_t offset) {
        if (offset + src.layers.size() > layers.size())
            throw index_out_of_range("parameter adoption past the end of the layer stack");
        for (std::size_t i = 0; i < src.layers.size(); ++i) {
            auto& dst = layers[offset + i];
            const auto& from = src.layers[i];
            if (dst.kind != from.kind)
                throw shape_mismatch(std::string("cannot adopt ") + layer_kind_name(from.kind) +
                                     " parameters into " + layer_kind_name(dst.kind) + " layer");
            dst.weights = from.weights;
            dst.bias = from.bias;
        }
        bump_version();
    }

    template <typename U>
    basic_model<U> cast() const {
        basic_model<U> out;
        out.input_shape = input_shape;
        out.version = version;
        out.layers.reserve(layers.size());
        for (const auto& l : layers) {
            basic_layer<U> c;
            c.kind = l.kind;
            c.weights = l.weights.template cast<U>();
            c.bias = l.bias.template cast<U>();
            c.stride = l.stride;
            c.pad = l.pad;
            c.pool = l.pool;
            c.frozen = l.frozen;
            out.layers.push_back(std::move(c));
        }
        return out;
    }

   private:
    void check_input(const basic_tensor<T>& input) const {
        bool ok = input.rank() == input_shape.size() + 1 && input.dim(0) >= 1;
        if (ok)
            for (std::size_t i = 0; i < input_shape.size(); ++i)
                ok = ok && input.dim(i + 1) == input_shape[i];
        if (!ok)
            throw shape_mismatch("input shape " + shape_string(input.shape) +
                                 " does not match expected per-sample shape " +
                                 shape_string(input_shape));
    }

    void check_record(const basic_forward_record<T>& rec) const {
        if (rec.model_version != version)
            throw stale_record("forward record was taken at model version " +
                               std::to_string(rec.model_version) + " but the model is now at " +
                               std::to_string(version));
        if (rec.acts.size() != layers.size() + 1)
            throw stale_record("forward record has " + std::to_string(rec.acts.size()) +
                               " boundaries for a model with " + std::to_string(layers.size()) +
                               " layers");
    }

    std::vector<std::size_t> layer_output_shape(std::size_t i,
                                                const std::vector<std::size_t>& in) const {
        const auto& l = layers[i];
        auto fail = [&](const std::string& why) -> std::vector<std::size_t> {
            throw shape_mismatch("layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) +
                                 "): " + why + "; incoming shape " + shape_string(in));
        };
        switch (l.kind) {
            case layer_kind::relu:
            case layer_kind::sigmoid:
                return in;
            case layer_kind::conv2d: {
                if (in.size() != 4) return fail("expects a 4-d [n, c, h, w] input");
                if (in[1] != l.weights.dim(1))
                    return fail("kernel expects " + std::to_string(l.weights.dim(1)) +
                                " input channels");
                const std::size_t kh = l.weights.dim(2), kw = l.weights.dim(3);
                if (in[2] + 2 * l.pad < kh || in[3] + 2 * l.pad < kw)
                    return fail("kernel larger than padded input");
                return {in[0], l.weights.dim(0), (in[2] + 2 * l.pad - kh) / l.stride + 1,
                        (in[3] + 2 * l.pad - kw) / l.stride + 1};
            }
            case layer_kind::maxpool2d: {
                if (in.size() != 4) return fail("expects a 4-d [n, c, h, w] input");
                if (in[2] < l.pool || in[3] < l.pool) return fail("pool window larger than input");
                return {in[0], in[1], (in[2] - l.pool) / l.stride + 1,
                        (in[3] - l.pool) / l.stride + 1};
            }
            case layer_kind::global_avg_pool:
                if (in.size() != 4) return fail("expects a 4-d [n, c, h, w] input");
                return {in[0], in[1]};
            case layer_kind::dense:
                if (in.size() != 2) return fail("expects a 2-d [n, features] input");
                if (in[1] != l.weights.dim(1))
                    return fail("weight expects " + std::to_string(l.weights.dim(1)) +
                                " input features");
                return {in[0], l.weights.dim(0)};
        }
        return fail("unknown layer kind");
    }

    basic_tensor<T> apply_layer(std::size_t i, const basic_tensor<T>& x,
                                std::vector<std::size_t>& argmax) const {
        const auto& l = layers[i];
        basic_tensor<T> y(layer_output_shape(i, x.shape));
        switch (l.kind) {
            case layer_kind::relu:
                for (std::size_t j = 0; j < x.numel(); ++j) y[j] = x[j] > T(0) ? x[j] : T(0);
                break;
            case layer_kind::sigmoid:
                for (std::size_t j = 0; j < x.numel(); ++j)
                    y[j] = T(1) / (T(1) + std::exp(-x[j]));
                break;
            case layer_kind::conv2d: {
                const std::size_t n = x.dim(0), ic = x.dim(1), h = x.dim(2), w = x.dim(3);
                const std::size_t oc = y.dim(1), oh = y.dim(2), ow = y.dim(3);
                const std::size_t kh = l.weights.dim(2), kw = l.weights.dim(3);
                const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(l.pad);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t o = 0; o < oc; ++o)
                        for (std::size_t oy = 0; oy < oh; ++oy)
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                T acc = l.bias[o];
                                for (std::size_t c = 0; c < ic; ++c)
                                    for (std::size_t ky = 0; ky < kh; ++ky) {
                                        const std::ptrdiff_t iy =
                                            static_cast<std::ptrdiff_t>(oy * l.stride + ky) - pad;
                                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h))
                                            continue;
                                        for (std::size_t kx = 0; kx < kw; ++kx) {
                                            const std::ptrdiff_t ix =
                                                static_cast<std::ptrdiff_t>(ox * l.stride + kx) -
                                                pad;
                                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                                continue;
                                            acc += x.at4(b, c, static_cast<std::size_t>(iy),
                                                         static_cast<std::size_t>(ix)) *
                                                   l.weights.at4(o, c, ky, kx);
                                        }
                                    }
                                y.at4(b, o, oy, ox) = acc;
                            }
                break;
            }
            case layer_kind::maxpool2d: {
                const std::size_t n = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
                const std::size_t oh = y.dim(2), ow = y.dim(3);
                argmax.assign(y.numel(), 0);
                std::size_t out_i = 0;
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < ch; ++c)
                        for (std::size_t oy = 0; oy < oh; ++oy)
                            for (std::size_t ox = 0; ox < ow; ++ox, ++out_i) {
                                T best = -std::numeric_limits<T>::infinity();
                                std::size_t best_i = 0;
                                for (std::size_t py = 0; py < l.pool; ++py)
                                    for (std::size_t px = 0; px < l.pool; ++px) {
                                        const std::size_t iy = oy * l.stride + py;
                                        const std::size_t ix = ox * l.stride + px;
                                        if (iy >= h || ix >= w) continue;
                                        const std::size_t flat = ((b * ch + c) * h + iy) * w + ix;
                                        // Strict > keeps the first maximum on ties.
                                        if (x[flat] > best) {
                                            best = x[flat];
                                            best_i = flat;
                                        }
                                    }
                                y[out_i] = best;
                                argmax[out_i] = best_i;
                            }
                break;
            }
            case layer_kind::global_avg_pool: {
                const std::size_t n = x.dim(0), ch = x.dim(1);
                const std::size_t area = x.dim(2) * x.dim(3);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < ch; ++c) {
                        T acc(0);
                        const std::size_t base = (b * ch + c) * area;
                        for (std::size_t j = 0; j < area; ++j) acc += x[base + j];
                        y.at2(b, c) = acc / static_cast<T>(area);
                    }
                break;
            }
            case layer_kind::dense: {
                const std::size_t n = x.dim(0), in = x.dim(1), out = y.dim(1);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t o = 0; o < out; ++o) {
                        T acc = l.bias[o];
                        for (std::size_t j = 0; j < in; ++j)
                            acc += x.at2(b, j) * l.weights.at2(o, j);
                        y.at2(b, o) = acc;
                    }
                break;
            }
        }
        return y;
    }

    basic_tensor<T> layer_backward(std::size_t i, const basic_forward_record<T>& rec,
                                   const basic_tensor<T>& dy, backprop_mode mode,
                                   basic_tensor<T>* dw, basic_tensor<T>* db) const {
        const auto& l = layers[i];
        const basic_tensor<T>& x = rec.acts[i];
        const basic_tensor<T>& y = rec.acts[i + 1];
        basic_tensor<T> dx(x.shape);
        switch (l.kind) {
            case layer_kind::relu:
                for (std::size_t j = 0; j < x.numel(); ++j) {
                    bool pass = x[j] > T(0);
                    if (mode == backprop_mode::guided) pass = pass && dy[j] > T(0);
                    dx[j] = pass ? dy[j] : T(0);
                }
                break;
            case layer_kind::sigmoid:
                for (std::size_t j = 0; j < x.numel(); ++j) dx[j] = dy[j] * y[j] * (T(1) - y[j]);
                break;
            case layer_kind::conv2d: {
                if (dw) *dw = basic_tensor<T>(l.weights.shape);
                if (db) *db = basic_tensor<T>(l.bias.shape);
                const std::size_t n = x.dim(0), ic = x.dim(1), h = x.dim(2), w = x.dim(3);
                const std::size_t oc = y.dim(1), oh = y.dim(2), ow = y.dim(3);
                const std::size_t kh = l.weights.dim(2), kw = l.weights.dim(3);
                const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(l.pad);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t o = 0; o < oc; ++o)
                        for (std::size_t oy = 0; oy < oh; ++oy)
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                const T g = dy.at4(b, o, oy, ox);
                                if (db) (*db)[o] += g;
                                for (std::size_t c = 0; c < ic; ++c)
                                    for (std::size_t ky = 0; ky < kh; ++ky) {
                                        const std::ptrdiff_t iy =
                                            static_cast<std::ptrdiff_t>(oy * l.stride + ky) - pad;
                                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h))
                                            continue;
                                        for (std::size_t kx = 0; kx < kw; ++kx) {
                                            const std::ptrdiff_t ix =
                                                static_cast<std::ptrdiff_t>(ox * l.stride + kx) -
                                                pad;
                                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                                continue;
                                            const std::size_t uy = static_cast<std::size_t>(iy);
                                            const std::size_t ux = static_cast<std::size_t>(ix);
                                            if (dw)
                                                dw->at4(o, c, ky, kx) += g * x.at4(b, c, uy, ux);
                                            dx.at4(b, c, uy, ux) += g * l.weights.at4(o, c, ky, kx);
                                        }
                                    }
                            }
                break;
            }
            case layer_kind::maxpool2d: {
                const auto& argmax = rec.pool_argmax[i];
                if (argmax.size() != y.numel())
                    throw stale_record("max-pool winners in the forward record do not match the "
                                       "recorded output size");
                for (std::size_t j = 0; j < y.numel(); ++j) dx[argmax[j]] += dy[j];
                break;
            }
            case layer_kind::global_avg_pool: {
                const std::size_t n = x.dim(0), ch = x.dim(1);
                const std::size_t area = x.dim(2) * x.dim(3);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < ch; ++c) {
                        const T g = dy.at2(b, c) / static_cast<T>(area);
                        const std::size_t base = (b * ch + c) * area;
                        for (std::size_t j = 0; j < area; ++j) dx[base + j] = g;
                    }
                break;
            }
            case layer_kind::dense: {
                if (dw) *dw = basic_tensor<T>(l.weights.shape);
                if (db) *db = basic_tensor<T>(l.bias.shape);
                const std::size_t n = x.dim(0), in = x.dim(1), out = y.dim(1);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t o = 0; o < out; ++o) {
                        const T g = dy.at2(b, o);
                        if (db) (*db)[o] += g;
                        for (std::size_t j = 0; j < in; ++j) {
                            if (dw) dw->at2(o, j) += g * x.at2(b, j);
                            dx.at2(b, j) += g * l.weights.at2(o, j);
                        }
                    }
                break;
            }
        }
        return dx;
    }
};

using model = basic_model<float>;
using forward_record = basic_forward_record<float>;
using gradients = basic_gradients<float>;

}  // namespace ctx
