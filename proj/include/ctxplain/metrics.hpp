#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ctxplain/error.hpp"

namespace ctx {

struct confusion {
    std::size_t tn = 0, fp = 0, fn = 0, tp = 0;
    std::size_t total() const { return tn + fp + fn + tp; }
};

// A sample is predicted positive when its score is >= threshold.
inline confusion confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold = 0.5) {
    if (scores.size() != labels.size())
        throw shape_mismatch("scores and labels differ in length");
    if (scores.empty()) throw empty_set("cannot build a confusion matrix from zero samples");
    confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool pos = labels[i] != 0;
        if (pred && pos)
            ++c.tp;
        else if (pred && !pos)
            ++c.fp;
        else if (!pred && pos)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

struct scalar_metrics {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

// Harmonic mean of precision and recall; 0 when both are 0.
inline double f1_score(double precision, double recall) {
    return (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// Degenerate denominators resolve to zero rather than NaN: an empty
// predicted-positive set has precision 0, an empty positive class has
// recall 0, and f1 is 0 whenever precision + recall is.
inline scalar_metrics metrics_from(const confusion& c) {
    scalar_metrics m;
    const std::size_t n = c.total();
    if (n == 0) throw empty_set("confusion matrix is empty");
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
    m.precision = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

namespace detail {

struct tie_group {
    double score;
    std::size_t pos;  // positives at exactly this score
    std::size_t neg;
};

// Distinct scores in descending order with per-score class counts. Samples
// sharing a score enter or leave the predicted-positive set together.
inline std::vector<tie_group> tie_groups(const std::vector<double>& scores,
                                         const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw shape_mismatch("scores and labels differ in length");
    if (scores.empty()) throw empty_set("cannot rank zero samples");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<tie_group> groups;
    for (std::size_t i : order) {
        if (groups.empty() || groups.back().score != scores[i])
            groups.push_back({scores[i], 0, 0});
        if (labels[i] != 0)
            ++groups.back().pos;
        else
            ++groups.back().neg;
    }
    return groups;
}

}  // namespace detail

struct pr_point {
    double threshold = 0;
    double recall = 0;
    double precision = 0;
};

struct pr_result {
    std::vector<pr_point> points;
    double average_precision = 0;
};

// One operating point per distinct score, descending. Average precision is
// the step-function sum  AP = sum_n (R_n - R_{n-1}) P_n  with R_0 = 0.
inline pr_result pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    auto groups = detail::tie_groups(scores, labels);
    std::size_t total_pos = 0;
    for (const auto& g : groups) total_pos += g.pos;
    if (total_pos == 0) throw no_positives("average precision needs at least one positive sample");
    pr_result out;
    std::size_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    for (const auto& g : groups) {
        tp += g.pos;
        fp += g.neg;
        pr_point pt;
        pt.threshold = g.score;
        pt.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        out.average_precision += (pt.recall - prev_recall) * pt.precision;
        prev_recall = pt.recall;
        out.points.push_back(pt);
    }
    return out;
}

struct roc_point {
    double fpr = 0;
    double tpr = 0;
};

struct roc_result {
    std::vector<roc_point> points;
    double auc = 0;
};

// ROC with an explicit (0, 0) anchor and one point per distinct score,
// descending; the area is the trapezoidal integral over FPR.
inline roc_result roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    auto groups = detail::tie_groups(scores, labels);
    std::size_t total_pos = 0, total_neg = 0;
    for (const auto& g : groups) {
        total_pos += g.pos;
        total_neg += g.neg;
    }
    if (total_pos == 0 || total_neg == 0)
        throw one_class_only("ROC needs both a positive and a negative sample");
    roc_result out;
    out.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (const auto& g : groups) {
        tp += g.pos;
        fp += g.neg;
        roc_point pt;
        pt.fpr = static_cast<double>(fp) / static_cast<double>(total_neg);
        pt.tpr = static_cast<double>(tp) / static_cast<double>(total_pos);
        out.auc += (pt.fpr - out.points.back().fpr) * (pt.tpr + out.points.back().tpr) / 2.0;
        out.points.push_back(pt);
    }
    return out;
}

struct eval_report {
    confusion cm;
    scalar_metrics scalars;
    double average_precision = 0;
    double roc_auc = 0;
};

inline eval_report evaluate_scores(const std::vector<double>& scores,
                                   const std::vector<int>& labels, double threshold = 0.5) {
    eval_report r;
    r.cm = confusion_at(scores, labels, threshold);
    r.scalars = metrics_from(r.cm);
    r.average_precision = pr_curve(scores, labels).average_precision;
    r.roc_auc = roc_curve(scores, labels).auc;
    return r;
}

}  // namespace ctx
