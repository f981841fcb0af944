#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "itsc/adam.hpp"
#include "itsc/dataset.hpp"
#include "itsc/metrics.hpp"
#include "itsc/models.hpp"
#include "itsc/resampling.hpp"

namespace itsc::harness {

enum class TrainMode { kPlain, kSampled, kCostSensitive, kFixedCost };

TrainMode mode_from_string(const std::string& name);
std::string to_string(TrainMode mode);

struct TrainConfig {
    TrainMode mode = TrainMode::kPlain;
    std::optional<resample::SamplerConfig> sampler;  // required iff mode is sampled
    std::size_t epochs = 1;
    std::size_t batch_size = 512;
    nn::AdamConfig adam;
    std::uint64_t seed = 0;
    double threshold = 0.5;  // evaluation threshold; batch statistics use 0.5
};

/// Throws ConfigError on out-of-range fields or a sampler/mode mismatch.
void validate(const TrainConfig& config);

struct BatchRecord {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    double loss = 0.0;
    double lambda_minority = 1.0;
    double lambda_majority = 1.0;
    metrics::Metric gmean;  // batch statistics, cost-sensitive mode only
    metrics::Metric acc;
};

struct TrainLog {
    std::vector<double> epoch_loss;    // mean batch loss per epoch
    std::vector<BatchRecord> batches;  // one record per completed batch
    std::size_t empty_class_batches = 0;
    double wall_seconds = 0.0;
};

/// One full training run on an already-normalized dataset. The adaptive mode
/// recomputes the minority weight every batch from the global imbalance
/// ratio and that batch's thresholded G_mean/accuracy; the weight is a plain
/// constant in the gradient. fixed_cost applies a constant minority weight
/// equal to the imbalance ratio under a plain batch mean; sampled resamples
/// the training data once up front and then trains exactly like plain mode.
TrainLog train(models::Model& model, const data::Dataset& train_data, const TrainConfig& config);

struct MetricRecord {
    metrics::ConfusionCounts counts;
    metrics::Metric recall;  // same value as tpr, kept under both names
    metrics::Metric precision;
    metrics::Metric f1;
    metrics::Metric gmean;
    metrics::Metric roc_auc;
    metrics::Metric pr_auc;
    metrics::Metric tpr;
    metrics::Metric tnr;
    metrics::Metric fpr;
    metrics::Metric accuracy;
};

/// Scores the dataset with the model (must be in eval mode) and computes the
/// full metric battery at the threshold.
MetricRecord evaluate(models::Model& model, const data::Dataset& data, double threshold);

/// Stable (name, value) ordering used for aggregation and reports.
std::vector<std::pair<std::string, metrics::Metric>> named_metrics(const MetricRecord& record);

struct FoldRecord {
    std::size_t fold_index = 0;
    MetricRecord metrics;
    metrics::Metric validation_ir;  // imbalance ratio of the evaluated split
    metrics::Metric raw_fold_ir;    // same indices measured on the raw data
    data::NormStats stats;          // normalization fitted on the train split
    TrainLog log;
};

struct ExperimentReport {
    std::string model;
    TrainConfig config;
    std::map<std::string, double> overrides;
    std::size_t folds_requested = 0;
    std::vector<FoldRecord> folds;
    std::map<std::string, metrics::AggregateStats> aggregates;
    std::string version;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

/// Stratified k-fold protocol: per fold, fit normalization on the train
/// split, optionally resample the train split only, train a freshly seeded
/// model, and evaluate on the untouched validation split. Folds may run
/// concurrently; results are identical to the serial order.
ExperimentReport run_cross_validation(const data::Dataset& raw, models::ModelKind kind,
                                      const std::map<std::string, double>& overrides,
                                      const TrainConfig& config, std::size_t k_folds,
                                      bool concurrent_folds = false);

struct BenchCell {
    models::ModelKind model = models::ModelKind::kCnn;
    TrainMode mode = TrainMode::kPlain;
    std::optional<resample::Method> sampler;  // set iff mode is sampled
};

/// Cross product of models and modes, with the sampled mode expanded once
/// per sampler method.
std::vector<BenchCell> enumerate_cells(const std::vector<models::ModelKind>& kinds,
                                       const std::vector<TrainMode>& modes,
                                       const std::vector<resample::Method>& samplers);

/// One report per cell with independent seeds derived from the base seed and
/// cell index. A failing cell is recorded as failed and does not abort the
/// others.
std::vector<ExperimentReport> run_benchmark(const data::Dataset& raw,
                                            const std::vector<BenchCell>& cells,
                                            const std::map<std::string, double>& overrides,
                                            const TrainConfig& base, std::size_t k_folds,
                                            bool concurrent_folds = false);

/// Per-batch trajectory (loss, minority weight, batch stats) as CSV text;
/// undefined statistics render as nan.
std::string lambda_trajectory_csv(const TrainLog& log);

}  // namespace itsc::harness
