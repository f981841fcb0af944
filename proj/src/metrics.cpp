#include "itsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "itsc/common.hpp"

namespace itsc::metrics {

namespace {

void require_paired(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) {
        throw DataError("metrics: " + std::to_string(labels.size()) + " labels vs " +
                        std::to_string(scores.size()) + " scores");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw DataError("metrics: labels must be 0 or 1, got " + std::to_string(y));
        }
    }
}

}  // namespace

std::vector<int> predict(const std::vector<double>& scores, double threshold) {
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        preds[i] = scores[i] >= threshold ? 1 : 0;
    }
    return preds;
}

ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                          double threshold) {
    require_paired(labels, scores);
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pos = scores[i] >= threshold;
        if (labels[i] == 1) {
            pos ? ++c.tp : ++c.fn;
        } else {
            pos ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

MetricSet compute_metrics(const ConfusionCounts& c) {
    auto ratio = [](std::size_t num, std::size_t den) -> Metric {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };

    MetricSet m;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.tpr = ratio(c.tp, c.tp + c.fn);
    m.tnr = ratio(c.tn, c.tn + c.fp);
    m.fpr = ratio(c.fp, c.fp + c.tn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    if (m.precision && m.tpr && (*m.precision + *m.tpr) > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.tpr / (*m.precision + *m.tpr);
    }
    if (m.tpr && m.tnr) {
        m.gmean = std::sqrt(*m.tpr * *m.tnr);
    }
    return m;
}

Metric roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    require_paired(labels, scores);
    const std::size_t n = labels.size();
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y);
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average rank within each tied block, 1-based ranks.
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == 1) pos_rank_sum += rank[k];
    }
    const double p = static_cast<double>(pos);
    const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

Metric pr_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    require_paired(labels, scores);
    const std::size_t n = labels.size();
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y);
    if (pos == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[order[k]] == 1) {
            ++tp;
            const double precision_at_k =
                static_cast<double>(tp) / static_cast<double>(k + 1);
            ap += precision_at_k / static_cast<double>(pos);
        }
    }
    return ap;
}

AggregateStats aggregate_folds(const std::vector<Metric>& values) {
    AggregateStats s;
    double sum = 0.0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++s.defined_count;
        }
    }
    if (s.defined_count == 0) return s;
    const double mean = sum / static_cast<double>(s.defined_count);
    double ss = 0.0;
    for (const auto& v : values) {
        if (v) {
            const double d = *v - mean;
            ss += d * d;
        }
    }
    s.mean = mean;
    s.stddev = std::sqrt(ss / static_cast<double>(s.defined_count));
    return s;
}

}  // namespace itsc::metrics
