#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ctxplain/adam.hpp"
#include "ctxplain/augment.hpp"
#include "ctxplain/error.hpp"
#include "ctxplain/image_ops.hpp"
#include "ctxplain/loss.hpp"
#include "ctxplain/metrics.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/preprocess.hpp"
#include "ctxplain/rng.hpp"
#include "ctxplain/weights_io.hpp"

namespace ctx {

struct labeled_image {
    gray_image8 image;
    int label = 0;
};

struct train_config {
    std::size_t batch_size = 32;
    std::size_t max_epochs = 50;
    std::size_t patience = 15;
    double threshold = 0.5;
    adam_config optimizer{};
    std::uint64_t seed = 0;
    // Training-set augmentation; absent means every epoch sees the images
    // verbatim. Exterior exclusion fires per sample with the probability in
    // the params, using `exclusion` for its mask.
    std::optional<augment_params> augment;
    crop_params exclusion{};
    // Test hook: called after every epoch with the weights the full model
    // would carry if training stopped there.
    std::function<void(std::size_t epoch, const std::vector<std::uint8_t>& weights)> on_epoch_end;

    void validate() const {
        if (batch_size < 1) throw error("batch_size must be at least 1");
        if (patience < 1) throw error("patience must be at least 1");
        if (max_epochs < 1) throw error("max_epochs must be at least 1");
        if (augment) augment->validate();
    }
};

struct epoch_stats {
    std::size_t epoch = 0;
    double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
    double train_precision = 0, train_recall = 0, val_precision = 0, val_recall = 0;
};

struct train_log {
    std::vector<epoch_stats> epochs;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0;
    bool stopped_early = false;
    std::vector<std::string> warnings;

    std::string to_csv() const {
        std::string out =
            "epoch,train_loss,train_acc,val_loss,val_acc,train_precision,train_recall,"
            "val_precision,val_recall\n";
        char buf[256];
        for (const auto& e : epochs) {
            std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc,
                          e.train_precision, e.train_recall, e.val_precision, e.val_recall);
            out += buf;
        }
        return out;
    }
};

// Tracks the best value of a monitored quantity under strict improvement.
// With a flat sequence and patience p, training runs exactly 1 + p epochs
// and the first epoch stays the best.
class early_stopper {
   public:
    explicit early_stopper(std::size_t patience) : patience_(patience) {}

    bool observe(double value) {
        ++epoch_;
        if (value > best_) {
            best_ = value;
            best_epoch_ = epoch_;
            since_ = 0;
            return true;
        }
        ++since_;
        return false;
    }

    bool should_stop() const { return since_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_value() const { return best_; }

   private:
    std::size_t patience_;
    double best_ = -std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
    std::size_t since_ = 0;
    std::size_t epoch_ = 0;
};

namespace detail {

inline void fill_batch_row(tensor& batch, std::size_t row, const float_image& img) {
    const std::size_t stride = batch.numel() / batch.dim(0);
    if (static_cast<std::size_t>(img.width) * img.height * img.channels != stride)
        throw shape_mismatch("image " + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + " does not fit a batch row of " +
                             std::to_string(stride) + " values");
    std::copy(img.data.begin(), img.data.end(), batch.data.begin() + row * stride);
}

inline tensor batch_from_rows(const std::vector<std::vector<float>>& rows,
                              const std::vector<std::size_t>& idx,
                              const std::vector<std::size_t>& row_shape) {
    std::vector<std::size_t> shape;
    shape.push_back(idx.size());
    shape.insert(shape.end(), row_shape.begin(), row_shape.end());
    tensor out(std::move(shape));
    const std::size_t stride = out.numel() / out.dim(0);
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto& row = rows[idx[b]];
        if (row.size() != stride)
            throw shape_mismatch("sample " + std::to_string(idx[b]) + " holds " +
                                 std::to_string(row.size()) + " values, expected " +
                                 std::to_string(stride));
        std::copy(row.begin(), row.end(), out.data.begin() + b * stride);
    }
    return out;
}

// Longest prefix of layers that backward never needs to descend into: every
// parameterized layer in it is frozen, and it stops at the first trainable
// parameters. With no augmentation, activations at this boundary can be
// computed once and reused every epoch.
inline std::size_t static_prefix(const model& m) {
    std::size_t b = 0;
    while (b < m.layers.size() && (!m.layers[b].has_params() || m.layers[b].frozen)) ++b;
    return b;
}

}  // namespace detail

inline double predict(const model& m, const float_image& img) {
    tensor x({1, static_cast<std::size_t>(img.channels), static_cast<std::size_t>(img.height),
              static_cast<std::size_t>(img.width)});
    detail::fill_batch_row(x, 0, img);
    auto rec = m.forward(x);
    if (rec.output().numel() != 1)
        throw shape_mismatch("model emits " + std::to_string(rec.output().numel()) +
                             " outputs, expected a single probability");
    return rec.output()[0];
}

inline std::vector<double> predict_batch(const model& m, const std::vector<float_image>& imgs,
                                         std::size_t batch_size = 32) {
    std::vector<double> out;
    out.reserve(imgs.size());
    for (std::size_t start = 0; start < imgs.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, imgs.size() - start);
        const auto& first = imgs[start];
        tensor x({n, static_cast<std::size_t>(first.channels),
                  static_cast<std::size_t>(first.height), static_cast<std::size_t>(first.width)});
        for (std::size_t b = 0; b < n; ++b) detail::fill_batch_row(x, b, imgs[start + b]);
        auto rec = m.forward(x);
        const auto& y = rec.output();
        if (y.numel() != n)
            throw shape_mismatch("model emits " + std::to_string(y.numel() / n) +
                                 " outputs per sample, expected 1");
        for (std::size_t b = 0; b < n; ++b) out.push_back(y[b]);
    }
    return out;
}

// Mini-batch training with seeded shuffling, per-epoch validation at the
// configured threshold, early stopping on validation accuracy and best-epoch
// weight restoration. When the leading layers are frozen and no augmentation
// is requested, their activations are computed once up front and only the
// trainable tail runs per epoch.
inline train_log train(model& m, const std::vector<labeled_image>& train_set,
                       const std::vector<labeled_image>& val_set, const train_config& cfg) {
    cfg.validate();
    if (train_set.empty()) throw empty_dataset("training set is empty");
    if (val_set.empty()) throw empty_dataset("validation set is empty");
    if (detail::static_prefix(m) == m.layers.size())
        throw error("model has no trainable parameters");

    train_log log;
    auto one_class = [](const std::vector<labeled_image>& s) {
        for (const auto& e : s)
            if (e.label != s.front().label) return false;
        return true;
    };
    if (one_class(val_set))
        log.warnings.push_back(
            "validation set holds a single class; validation accuracy is degenerate");
    if (one_class(train_set))
        log.warnings.push_back("training set holds a single class");

    const std::size_t prefix = detail::static_prefix(m);
    const bool cached = prefix > 0 && !cfg.augment;
    const std::size_t n_train = train_set.size();

    model head = cached ? m.slice(prefix, m.layers.size()) : m;
    model stem = cached ? m.slice(0, prefix) : model{};

    // Per-sample flattened inputs to `head`: cached stem activations, or the
    // unit-interval images themselves when nothing can be cached. Under
    // augmentation the training rows are rebuilt every epoch.
    std::vector<std::vector<float>> train_rows(n_train), val_rows(val_set.size());
    auto image_row = [](const gray_image8& g) {
        auto f = to_unit_interval(g);
        return std::move(f.data);
    };
    auto stem_rows = [&](const std::vector<labeled_image>& set,
                         std::vector<std::vector<float>>& rows) {
        for (std::size_t start = 0; start < set.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, set.size() - start);
            tensor x({n, 1, static_cast<std::size_t>(set[start].image.height),
                      static_cast<std::size_t>(set[start].image.width)});
            for (std::size_t b = 0; b < n; ++b)
                detail::fill_batch_row(x, b, to_unit_interval(set[start + b].image));
            auto rec = stem.forward(x);
            const auto& y = rec.output();
            const std::size_t stride = y.numel() / n;
            for (std::size_t b = 0; b < n; ++b)
                rows[start + b].assign(y.data.begin() + b * stride,
                                       y.data.begin() + (b + 1) * stride);
        }
    };
    if (cached) {
        stem_rows(train_set, train_rows);
        stem_rows(val_set, val_rows);
    } else {
        for (std::size_t i = 0; i < val_set.size(); ++i) val_rows[i] = image_row(val_set[i].image);
        if (!cfg.augment)
            for (std::size_t i = 0; i < n_train; ++i) train_rows[i] = image_row(train_set[i].image);
    }
    const std::vector<std::size_t> row_shape = head.input_shape;

    basic_adam<float> opt(head, cfg.optimizer);
    early_stopper stopper(cfg.patience);
    std::vector<std::uint8_t> best_weights = serialize_model_weights(head);

    std::vector<int> train_labels(n_train), val_labels(val_set.size());
    for (std::size_t i = 0; i < n_train; ++i) train_labels[i] = train_set[i].label;
    for (std::size_t i = 0; i < val_set.size(); ++i) val_labels[i] = val_set[i].label;

    const std::uint64_t shuffle_root = derive_seed(cfg.seed, "shuffle");
    const std::uint64_t exclusion_root =
        cfg.augment ? derive_seed(cfg.augment->seed, "exclusion") : 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (cfg.augment) {
            for (std::size_t i = 0; i < n_train; ++i) {
                const std::uint64_t draw = (epoch - 1) * n_train + i;
                gray_image8 g = train_set[i].image;
                if (cfg.augment->exterior_exclusion_prob > 0.0) {
                    rng64 r(derive_seed(exclusion_root, draw));
                    if (r.bernoulli(cfg.augment->exterior_exclusion_prob))
                        g = exterior_exclusion(g, cfg.exclusion).image;
                }
                train_rows[i] = augment(to_unit_interval(g), *cfg.augment, draw).data;
            }
        }

        std::vector<std::size_t> order(n_train);
        for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
        rng64 shuffle_rng(derive_seed(shuffle_root, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n_train; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0.0;
        std::vector<double> train_scores(n_train, 0.0);
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, n_train - start);
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + n);
            tensor x = detail::batch_from_rows(train_rows, idx, row_shape);
            tensor y({n});
            for (std::size_t b = 0; b < n; ++b) y[b] = static_cast<float>(train_labels[idx[b]]);
            auto rec = head.forward(x);
            auto bl = bce_batch(rec.output(), y);
            loss_sum += static_cast<double>(bl.loss) * static_cast<double>(n);
            for (std::size_t b = 0; b < n; ++b) train_scores[idx[b]] = rec.output()[b];
            auto grads = head.backward(rec, bl.grad);
            opt.step(head, grads);
        }

        epoch_stats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(n_train);
        {
            auto cm = confusion_at(train_scores, train_labels, cfg.threshold);
            auto sm = metrics_from(cm);
            st.train_acc = sm.accuracy;
            st.train_precision = sm.precision;
            st.train_recall = sm.recall;
        }

        std::vector<double> val_scores(val_set.size(), 0.0);
        double val_loss_sum = 0.0;
        for (std::size_t start = 0; start < val_set.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, val_set.size() - start);
            std::vector<std::size_t> idx(n);
            for (std::size_t b = 0; b < n; ++b) idx[b] = start + b;
            tensor x = detail::batch_from_rows(val_rows, idx, row_shape);
            auto rec = head.forward(x);
            for (std::size_t b = 0; b < n; ++b) {
                const float p = rec.output()[b];
                val_scores[start + b] = p;
                val_loss_sum += static_cast<double>(
                    bce_loss(p, static_cast<float>(val_labels[start + b])));
            }
        }
        st.val_loss = val_loss_sum / static_cast<double>(val_set.size());
        {
            auto cm = confusion_at(val_scores, val_labels, cfg.threshold);
            auto sm = metrics_from(cm);
            st.val_acc = sm.accuracy;
            st.val_precision = sm.precision;
            st.val_recall = sm.recall;
        }
        log.epochs.push_back(st);

        if (stopper.observe(st.val_acc)) best_weights = serialize_model_weights(head);
        if (cfg.on_epoch_end) {
            if (cached) {
                model snapshot = m;
                snapshot.adopt_params(head, prefix);
                cfg.on_epoch_end(epoch, serialize_model_weights(snapshot));
            } else {
                cfg.on_epoch_end(epoch, serialize_model_weights(head));
            }
        }
        if (stopper.should_stop()) {
            log.stopped_early = true;
            break;
        }
    }

    log.best_epoch = stopper.best_epoch();
    log.best_val_accuracy = stopper.best_value();
    load_model_weights(best_weights, head);
    if (cached)
        m.adopt_params(head, prefix);
    else
        m = std::move(head);
    return log;
}

}  // namespace ctx
