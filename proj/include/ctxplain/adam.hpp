#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/tensor.hpp"

namespace ctx {

template <typename T>
struct basic_adam_config {
    T lr = T(0.001);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
};

using adam_config = basic_adam_config<float>;

// Adam with bias correction. One step() call advances the shared timestep
// and applies the update to every trainable layer that received a gradient;
// frozen layers keep their moment slots but are never written to.
template <typename T>
class basic_adam {
   public:
    explicit basic_adam(const basic_model<T>& m, basic_adam_config<T> cfg = {}) : cfg_(cfg) {
        slots_.reserve(m.layers.size());
        for (const auto& l : m.layers) {
            slot s;
            if (l.has_params()) {
                s.mw = basic_tensor<T>(l.weights.shape);
                s.vw = basic_tensor<T>(l.weights.shape);
                s.mb = basic_tensor<T>(l.bias.shape);
                s.vb = basic_tensor<T>(l.bias.shape);
            }
            slots_.push_back(std::move(s));
        }
    }

    void step(basic_model<T>& m, const basic_gradients<T>& g) {
        if (m.layers.size() != slots_.size())
            throw shape_mismatch("optimizer was built for a model with " +
                                 std::to_string(slots_.size()) + " layers, got " +
                                 std::to_string(m.layers.size()));
        ++t_;
        const T bc1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, static_cast<T>(t_)));
        const T bc2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, static_cast<T>(t_)));
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            auto& l = m.layers[i];
            if (!l.has_params() || l.frozen) continue;
            if (i < g.weights.size() && !g.weights[i].empty())
                update(l.weights, g.weights[i], slots_[i].mw, slots_[i].vw, bc1, bc2);
            if (i < g.bias.size() && !g.bias[i].empty())
                update(l.bias, g.bias[i], slots_[i].mb, slots_[i].vb, bc1, bc2);
        }
        m.bump_version();
    }

    std::uint64_t steps() const { return t_; }
    const basic_adam_config<T>& config() const { return cfg_; }

   private:
    struct slot {
        basic_tensor<T> mw, vw, mb, vb;
    };

    void update(basic_tensor<T>& p, const basic_tensor<T>& g, basic_tensor<T>& m,
                basic_tensor<T>& v, T bc1, T bc2) {
        if (!p.same_shape(g))
            throw shape_mismatch("gradient shape " + shape_string(g.shape) +
                                 " does not match parameter " + shape_string(p.shape));
        for (std::size_t j = 0; j < p.numel(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (T(1) - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (T(1) - cfg_.beta2) * g[j] * g[j];
            const T mhat = m[j] / bc1;
            const T vhat = v[j] / bc2;
            p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }

    basic_adam_config<T> cfg_;
    std::vector<slot> slots_;
    std::uint64_t t_ = 0;
};

using adam = basic_adam<float>;

}  // namespace ctx
