#pragma once

#include <algorithm>
#include <cmath>

#include "ctxplain/error.hpp"
#include "ctxplain/tensor.hpp"

namespace ctx {

// Predicted probabilities are clamped away from {0, 1} before the logs so a
// saturated sigmoid cannot produce an infinite loss or gradient.
template <typename T>
inline constexpr T bce_epsilon = T(1e-7);

template <typename T>
T bce_loss(T p, T y) {
    const T q = std::clamp(p, bce_epsilon<T>, T(1) - bce_epsilon<T>);
    return -(y * std::log(q) + (T(1) - y) * std::log(T(1) - q));
}

// d loss / d p at the clamped point; zero outside the clamp range, matching
// the flat loss there.
template <typename T>
T bce_loss_grad(T p, T y) {
    if (p < bce_epsilon<T> || p > T(1) - bce_epsilon<T>) return T(0);
    return (p - y) / (p * (T(1) - p));
}

// Mean loss over a batch of scalar predictions [n, 1] against labels [n].
// The gradient tensor matches the prediction shape and already carries the
// 1/n factor of the mean.
template <typename T>
struct basic_batch_loss {
    T loss = T(0);
    basic_tensor<T> grad;
};

template <typename T>
basic_batch_loss<T> bce_batch(const basic_tensor<T>& pred, const basic_tensor<T>& labels) {
    if (pred.rank() != 2 || pred.dim(1) != 1)
        throw shape_mismatch("binary cross-entropy expects predictions of shape [n, 1], got " +
                             shape_string(pred.shape));
    if (labels.rank() != 1 || labels.dim(0) != pred.dim(0))
        throw shape_mismatch("labels of shape " + shape_string(labels.shape) +
                             " do not match predictions " + shape_string(pred.shape));
    const std::size_t n = pred.dim(0);
    basic_batch_loss<T> out;
    out.grad = basic_tensor<T>(pred.shape);
    T total(0);
    for (std::size_t i = 0; i < n; ++i) {
        total += bce_loss(pred[i], labels[i]);
        out.grad[i] = bce_loss_grad(pred[i], labels[i]) / static_cast<T>(n);
    }
    out.loss = total / static_cast<T>(n);
    return out;
}

}  // namespace ctx
