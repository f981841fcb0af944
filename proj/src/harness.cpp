#include "itsc/harness.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "itsc/common.hpp"
#include "itsc/cost_loss.hpp"

namespace itsc::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

data::Dataset subset(const data::Dataset& data, const std::vector<std::size_t>& indices) {
    data::Dataset out;
    out.channel_count = data.channel_count;
    out.length = data.length;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(data.samples[i]);
    return out;
}

metrics::Metric safe_ir(const data::Dataset& data) {
    const std::size_t pos = data::count_positive(data);
    if (pos == 0 || pos == data.size()) return std::nullopt;
    return static_cast<double>(data.size() - pos) / static_cast<double>(pos);
}

void require_both_classes(const data::Dataset& data, const char* where) {
    const std::size_t pos = data::count_positive(data);
    if (pos == 0 || pos == data.size())
        throw DataError(std::string(where) + ": both classes must be present");
}

std::string format_metric(const metrics::Metric& m) {
    if (!m) return "nan";
    std::ostringstream out;
    out.precision(17);
    out << *m;
    return out.str();
}

}  // namespace

TrainMode mode_from_string(const std::string& name) {
    if (name == "plain") return TrainMode::kPlain;
    if (name == "sampled") return TrainMode::kSampled;
    if (name == "cost_sensitive") return TrainMode::kCostSensitive;
    if (name == "fixed_cost") return TrainMode::kFixedCost;
    throw ConfigError("unknown training mode: " + name);
}

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::kPlain: return "plain";
        case TrainMode::kSampled: return "sampled";
        case TrainMode::kCostSensitive: return "cost_sensitive";
        case TrainMode::kFixedCost: return "fixed_cost";
    }
    throw ConfigError("unknown training mode enum value");
}

void validate(const TrainConfig& config) {
    if (config.epochs == 0) throw ConfigError("train config: epochs must be at least 1");
    if (config.batch_size == 0) throw ConfigError("train config: batch_size must be at least 1");
    if (config.sampler.has_value() != (config.mode == TrainMode::kSampled))
        throw ConfigError("train config: a sampler is required exactly when mode is sampled");
    if (!(config.threshold > 0.0) || !(config.threshold < 1.0))
        throw ConfigError("train config: threshold must lie in (0, 1)");
    if (!(config.adam.learning_rate > 0.0))
        throw ConfigError("train config: learning rate must be positive");
    if (config.adam.beta1 < 0.0 || config.adam.beta1 >= 1.0 || config.adam.beta2 < 0.0 ||
        config.adam.beta2 >= 1.0)
        throw ConfigError("train config: betas must lie in [0, 1)");
    if (!(config.adam.epsilon > 0.0)) throw ConfigError("train config: epsilon must be positive");
}

TrainLog train(models::Model& model, const data::Dataset& train_data, const TrainConfig& config) {
    validate(config);
    data::validate(train_data);
    const auto start = Clock::now();

    const data::Dataset* working = &train_data;
    data::Dataset resampled;
    if (config.mode == TrainMode::kSampled) {
        resampled = resample::resample_dataset(train_data, *config.sampler);
        working = &resampled;
    }

    double ir = 1.0;
    if (config.mode == TrainMode::kCostSensitive || config.mode == TrainMode::kFixedCost) {
        require_both_classes(*working, "train");
        ir = data::imbalance_ratio(*working);
    }

    model.set_mode(nn::Mode::kTrain);
    auto params = model.params();
    TrainLog log;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto plan =
            data::shuffled_minibatches(working->size(), config.batch_size, config.seed, epoch);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < plan.batches.size(); ++b) {
            const auto [batch, labels] = data::make_batch(*working, plan.batches[b]);
            model.zero_grad();
            const auto probs = model.forward(batch);

            BatchRecord rec;
            rec.epoch = epoch;
            rec.batch = b;
            std::size_t batch_pos = 0;
            for (int label : labels) batch_pos += static_cast<std::size_t>(label == 1);
            if (batch_pos == 0 || batch_pos == labels.size()) log.empty_class_batches += 1;

            double loss = 0.0;
            std::vector<double> grad;
            switch (config.mode) {
                case TrainMode::kCostSensitive: {
                    // Batch statistics come from the same forward pass,
                    // thresholded at 0.5, before any weight update.
                    const auto counts = metrics::confusion(labels, probs, 0.5);
                    const auto batch_stats = metrics::compute_metrics(counts);
                    const auto state =
                        cost::update_lambda(ir, batch_stats.gmean, batch_stats.accuracy.value());
                    std::vector<double> losses(probs.size());
                    for (std::size_t i = 0; i < probs.size(); ++i)
                        losses[i] = cost::weighted_bce(probs[i], labels[i], state);
                    loss = cost::class_balanced_loss(losses, labels);
                    grad = cost::loss_gradient(probs, labels, state);
                    rec.lambda_minority = state.lambda_minority;
                    rec.lambda_majority = state.lambda_majority;
                    rec.gmean = batch_stats.gmean;
                    rec.acc = batch_stats.accuracy;
                    break;
                }
                case TrainMode::kFixedCost: {
                    loss = cost::weighted_mean_bce(probs, labels, ir);
                    grad = cost::weighted_mean_bce_gradient(probs, labels, ir);
                    rec.lambda_minority = ir;
                    break;
                }
                case TrainMode::kPlain:
                case TrainMode::kSampled: {
                    loss = cost::weighted_mean_bce(probs, labels, 1.0);
                    grad = cost::weighted_mean_bce_gradient(probs, labels, 1.0);
                    break;
                }
            }
            if (!std::isfinite(loss)) throw NumericError("train: non-finite batch loss");
            model.backward_from_logits(grad);
            nn::adam_step_all(params, config.adam);

            rec.loss = loss;
            log.batches.push_back(rec);
            loss_sum += loss;
        }
        log.epoch_loss.push_back(loss_sum / static_cast<double>(plan.batches.size()));
    }
    log.wall_seconds = seconds_since(start);
    return log;
}

MetricRecord evaluate(models::Model& model, const data::Dataset& data, double threshold) {
    const auto [scores, preds] = models::predict(model, data, threshold);
    (void)preds;
    std::vector<int> labels;
    labels.reserve(data.size());
    for (const auto& sample : data.samples) labels.push_back(sample.label);

    const auto counts = metrics::confusion(labels, scores, threshold);
    const auto m = metrics::compute_metrics(counts);
    MetricRecord record;
    record.counts = counts;
    record.recall = m.tpr;
    record.precision = m.precision;
    record.f1 = m.f1;
    record.gmean = m.gmean;
    record.roc_auc = metrics::roc_auc(labels, scores);
    record.pr_auc = metrics::pr_auc(labels, scores);
    record.tpr = m.tpr;
    record.tnr = m.tnr;
    record.fpr = m.fpr;
    record.accuracy = m.accuracy;
    return record;
}

std::vector<std::pair<std::string, metrics::Metric>> named_metrics(const MetricRecord& record) {
    return {
        {"recall", record.recall},   {"precision", record.precision},
        {"f1", record.f1},           {"gmean", record.gmean},
        {"roc_auc", record.roc_auc}, {"pr_auc", record.pr_auc},
        {"tpr", record.tpr},         {"tnr", record.tnr},
        {"fpr", record.fpr},         {"accuracy", record.accuracy},
    };
}

ExperimentReport run_cross_validation(const data::Dataset& raw, models::ModelKind kind,
                                      const std::map<std::string, double>& overrides,
                                      const TrainConfig& config, std::size_t k_folds,
                                      bool concurrent_folds) {
    validate(config);
    data::validate(raw);
    const auto start = Clock::now();
    const auto splits = data::stratified_kfold(raw, k_folds, derive_seed(config.seed, 7));

    ExperimentReport report;
    report.model = models::to_string(kind);
    report.config = config;
    report.overrides = overrides;
    report.folds_requested = k_folds;
    report.version = kVersion;
    report.folds.resize(splits.size());

    auto run_fold = [&](std::size_t f) {
        const auto& split = splits[f];
        const data::Dataset train_raw = subset(raw, split.train_indices);
        const data::Dataset val_raw = subset(raw, split.validation_indices);
        auto [train_norm, stats] = data::zscore_fit_transform(train_raw);
        const data::Dataset val_norm = data::zscore_apply(val_raw, stats);

        TrainConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, 100 + split.fold_index);
        if (fold_config.sampler)
            fold_config.sampler->seed = derive_seed(config.seed, 200 + split.fold_index);

        models::Model model(kind, raw.channel_count, raw.length, overrides,
                            derive_seed(config.seed, 300 + split.fold_index));
        FoldRecord& fold = report.folds[f];
        fold.fold_index = split.fold_index;
        fold.log = train(model, train_norm, fold_config);
        model.set_mode(nn::Mode::kEval);
        fold.metrics = evaluate(model, val_norm, config.threshold);
        fold.validation_ir = safe_ir(val_norm);
        fold.raw_fold_ir = safe_ir(val_raw);
        fold.stats = stats;
    };

    if (concurrent_folds) {
        std::vector<std::exception_ptr> errors(splits.size());
        std::vector<std::thread> workers;
        workers.reserve(splits.size());
        for (std::size_t f = 0; f < splits.size(); ++f) {
            workers.emplace_back([&, f] {
                try {
                    run_fold(f);
                } catch (...) {
                    errors[f] = std::current_exception();
                }
            });
        }
        for (auto& worker : workers) worker.join();
        for (const auto& error : errors)
            if (error) std::rethrow_exception(error);
    } else {
        for (std::size_t f = 0; f < splits.size(); ++f) run_fold(f);
    }

    const auto names = named_metrics(report.folds.front().metrics);
    for (std::size_t m = 0; m < names.size(); ++m) {
        std::vector<metrics::Metric> values;
        values.reserve(report.folds.size());
        for (const auto& fold : report.folds)
            values.push_back(named_metrics(fold.metrics)[m].second);
        report.aggregates[names[m].first] = metrics::aggregate_folds(values);
    }
    report.wall_seconds = seconds_since(start);
    return report;
}

std::vector<BenchCell> enumerate_cells(const std::vector<models::ModelKind>& kinds,
                                       const std::vector<TrainMode>& modes,
                                       const std::vector<resample::Method>& samplers) {
    std::vector<BenchCell> cells;
    for (models::ModelKind kind : kinds) {
        for (TrainMode mode : modes) {
            if (mode == TrainMode::kSampled) {
                for (resample::Method method : samplers) {
                    BenchCell cell;
                    cell.model = kind;
                    cell.mode = mode;
                    cell.sampler = method;
                    cells.push_back(cell);
                }
            } else {
                BenchCell cell;
                cell.model = kind;
                cell.mode = mode;
                cells.push_back(cell);
            }
        }
    }
    return cells;
}

std::vector<ExperimentReport> run_benchmark(const data::Dataset& raw,
                                            const std::vector<BenchCell>& cells,
                                            const std::map<std::string, double>& overrides,
                                            const TrainConfig& base, std::size_t k_folds,
                                            bool concurrent_folds) {
    std::vector<ExperimentReport> reports;
    reports.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const BenchCell& cell = cells[i];
        TrainConfig cell_config = base;
        cell_config.mode = cell.mode;
        cell_config.seed = derive_seed(base.seed, 500 + i);
        if (cell.mode == TrainMode::kSampled) {
            resample::SamplerConfig sampler;
            sampler.method = *cell.sampler;
            sampler.k_neighbors = resample::default_k(sampler.method);
            sampler.seed = derive_seed(cell_config.seed, 1);
            cell_config.sampler = sampler;
        } else {
            cell_config.sampler.reset();
        }
        try {
            reports.push_back(
                run_cross_validation(raw, cell.model, overrides, cell_config, k_folds,
                                     concurrent_folds));
        } catch (const std::exception& error) {
            ExperimentReport failed;
            failed.model = models::to_string(cell.model);
            failed.config = cell_config;
            failed.overrides = overrides;
            failed.folds_requested = k_folds;
            failed.version = kVersion;
            failed.failed = true;
            failed.error = error.what();
            reports.push_back(std::move(failed));
        }
    }
    return reports;
}

std::string lambda_trajectory_csv(const TrainLog& log) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,batch,loss,lambda_minority,lambda_majority,gmean,acc\n";
    for (const auto& rec : log.batches) {
        out << rec.epoch << ',' << rec.batch << ',' << rec.loss << ',' << rec.lambda_minority
            << ',' << rec.lambda_majority << ',' << format_metric(rec.gmean) << ','
            << format_metric(rec.acc) << '\n';
    }
    return out.str();
}

}  // namespace itsc::harness
