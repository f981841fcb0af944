#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace itsc::metrics {

/// Binary confusion counts; class 1 is the positive (minority) class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fn + fp + tn; }
};

/// A metric value, or empty when its denominator is zero.
using Metric = std::optional<double>;

/// Thresholded predictions: positive iff score >= threshold.
std::vector<int> predict(const std::vector<double>& scores, double threshold);

ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                          double threshold);

struct MetricSet {
    Metric accuracy;
    Metric tpr;        // recall / sensitivity
    Metric tnr;        // specificity
    Metric fpr;
    Metric precision;
    Metric f1;
    Metric gmean;      // sqrt(tpr * tnr)
};

MetricSet compute_metrics(const ConfusionCounts& c);

/// Rank-statistic ROC AUC with average ranks on tied scores. Empty when
/// either class is absent.
Metric roc_auc(const std::vector<int>& labels, const std::vector<double>& scores);

/// Average precision: sum over ranked positives of (recall step) * precision,
/// scores sorted descending with a stable sort. Empty when no positives.
Metric pr_auc(const std::vector<int>& labels, const std::vector<double>& scores);

struct AggregateStats {
    Metric mean;
    Metric stddev;              // population standard deviation
    std::size_t defined_count = 0;
};

/// Mean and population std over the defined entries only.
AggregateStats aggregate_folds(const std::vector<Metric>& values);

}  // namespace itsc::metrics
