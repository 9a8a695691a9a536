#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "flashgan/error.hpp"

namespace flashgan {

inline void check_scores_labels(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ContractError("metrics: " + std::to_string(scores.size()) + " scores vs " +
                            std::to_string(labels.size()) + " labels");
    if (scores.empty()) throw DomainError("metrics: empty input");
    for (int l : labels)
        if (l != 0 && l != 1) throw ContractError("metrics: labels must be 0/1");
}

// Rank statistic: probability a random positive outranks a random negative,
// ties counted one half. Computed from mid-ranks of the positives.
inline double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_scores_labels(scores, labels);
    const long n = static_cast<long>(scores.size());
    long n_pos = 0;
    for (int l : labels) n_pos += l;
    const long n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DomainError("auc_roc undefined: only one class present");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        long tied_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tied_pos += labels[order[j]];
            ++j;
        }
        const double mid_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j)); // 1-based
        rank_sum_pos += mid_rank * static_cast<double>(tied_pos);
        i = j;
    }
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Area under the precision-recall step curve: descending threshold sweep with
// tied scores admitted as one group, summing precision weighted by the recall
// gained at each step.
inline double auc_prc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_scores_labels(scores, labels);
    long n_pos = 0;
    for (int l : labels) n_pos += l;
    if (n_pos == 0) throw DomainError("auc_prc undefined: no positives");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });

    double area = 0.0;
    long tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        long dtp = 0, dfp = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            dtp += labels[order[j]];
            dfp += 1 - labels[order[j]];
            ++j;
        }
        tp += dtp;
        fp += dfp;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += static_cast<double>(dtp) / static_cast<double>(n_pos) * precision;
        i = j;
    }
    return area;
}

struct ThresholdMetrics {
    double f_score = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Confusion-matrix metrics at a fixed decision threshold; predictions are
// score > tau. Zero-denominator precision, recall, and F are 0.
inline ThresholdMetrics threshold_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                                          double tau = 0.5) {
    check_scores_labels(scores, labels);
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > tau;
        if (pred && labels[i] == 1)
            ++tp;
        else if (pred)
            ++fp;
        else if (labels[i] == 1)
            ++fn;
        else
            ++tn;
    }
    ThresholdMetrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(tp + fp + fn + tn);
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f_score = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

} // namespace flashgan
