#include "itsc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "itsc/common.hpp"

namespace itsc::data {

void validate(const Dataset& data) {
    const std::size_t expected = data.channel_count * data.length;
    if (data.channel_count == 0 || data.length == 0) {
        throw DataError("dataset: channel count and length must be positive");
    }
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        if (s.values.size() != expected) {
            throw DataError("dataset: sample " + std::to_string(i) + " has " +
                            std::to_string(s.values.size()) + " values, expected " +
                            std::to_string(expected));
        }
        if (s.label != 0 && s.label != 1) {
            throw DataError("dataset: sample " + std::to_string(i) + " has label " +
                            std::to_string(s.label));
        }
        for (double v : s.values) {
            if (!std::isfinite(v)) {
                throw DataError("dataset: sample " + std::to_string(i) +
                                " contains a non-finite value");
            }
        }
    }
}

std::size_t count_positive(const Dataset& data) {
    std::size_t pos = 0;
    for (const auto& s : data.samples) pos += static_cast<std::size_t>(s.label);
    return pos;
}

double imbalance_ratio(const Dataset& data) {
    const std::size_t pos = count_positive(data);
    const std::size_t neg = data.size() - pos;
    if (pos == 0 || neg == 0) {
        throw DataError("imbalance_ratio: need both classes, got " + std::to_string(pos) +
                        " positive and " + std::to_string(neg) + " negative");
    }
    return static_cast<double>(neg) / static_cast<double>(pos);
}

std::pair<Dataset, NormStats> zscore_fit_transform(const Dataset& train) {
    if (train.samples.empty()) throw DataError("zscore_fit_transform: empty dataset");
    const std::size_t channels = train.channel_count;
    const std::size_t l = train.length;
    const double n = static_cast<double>(train.size() * l);

    NormStats stats;
    stats.mean.assign(channels, 0.0);
    stats.stddev.assign(channels, 1.0);

    for (std::size_t c = 0; c < channels; ++c) {
        double sum = 0.0;
        for (const auto& s : train.samples) {
            for (std::size_t t = 0; t < l; ++t) sum += s.values[c * l + t];
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& s : train.samples) {
            for (std::size_t t = 0; t < l; ++t) {
                const double d = s.values[c * l + t] - mean;
                ss += d * d;
            }
        }
        const double sd = std::sqrt(ss / n);
        if (sd < 1e-12) {
            // degenerate channel: leave it untouched
            stats.mean[c] = 0.0;
            stats.stddev[c] = 1.0;
        } else {
            stats.mean[c] = mean;
            stats.stddev[c] = sd;
        }
    }
    return {zscore_apply(train, stats), stats};
}

Dataset zscore_apply(const Dataset& data, const NormStats& stats) {
    if (stats.mean.size() != data.channel_count || stats.stddev.size() != data.channel_count) {
        throw DataError("zscore_apply: stats cover " + std::to_string(stats.mean.size()) +
                        " channels, dataset has " + std::to_string(data.channel_count));
    }
    Dataset out = data;
    const std::size_t l = data.length;
    for (auto& s : out.samples) {
        for (std::size_t c = 0; c < data.channel_count; ++c) {
            const double mean = stats.mean[c];
            const double inv = 1.0 / stats.stddev[c];
            for (std::size_t t = 0; t < l; ++t) {
                s.values[c * l + t] = (s.values[c * l + t] - mean) * inv;
            }
        }
    }
    return out;
}

std::vector<FoldSplit> stratified_kfold(const Dataset& data, std::size_t k,
                                        std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_kfold: k must be at least 2");

    std::vector<std::size_t> pos_idx, neg_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (data.samples[i].label == 1 ? pos_idx : neg_idx).push_back(i);
    }
    if (pos_idx.size() < k || neg_idx.size() < k) {
        throw DataError("stratified_kfold: each class needs at least k=" + std::to_string(k) +
                        " members, got " + std::to_string(pos_idx.size()) + " positive and " +
                        std::to_string(neg_idx.size()) + " negative");
    }

    std::mt19937_64 pos_rng(derive_seed(seed, 1));
    std::mt19937_64 neg_rng(derive_seed(seed, 0));
    std::shuffle(pos_idx.begin(), pos_idx.end(), pos_rng);
    std::shuffle(neg_idx.begin(), neg_idx.end(), neg_rng);

    std::vector<FoldSplit> folds(k);
    for (std::size_t f = 0; f < k; ++f) folds[f].fold_index = f;
    for (std::size_t i = 0; i < pos_idx.size(); ++i) {
        folds[i % k].validation_indices.push_back(pos_idx[i]);
    }
    for (std::size_t i = 0; i < neg_idx.size(); ++i) {
        folds[i % k].validation_indices.push_back(neg_idx[i]);
    }
    for (auto& fold : folds) {
        std::sort(fold.validation_indices.begin(), fold.validation_indices.end());
        std::vector<char> in_val(data.size(), 0);
        for (std::size_t i : fold.validation_indices) in_val[i] = 1;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!in_val[i]) fold.train_indices.push_back(i);
        }
    }
    return folds;
}

MinibatchPlan shuffled_minibatches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                   std::uint64_t epoch) {
    if (n == 0) throw ConfigError("shuffled_minibatches: n must be positive");
    if (batch_size == 0) throw ConfigError("shuffled_minibatches: batch size must be positive");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, epoch));
    std::shuffle(perm.begin(), perm.end(), rng);

    MinibatchPlan plan;
    plan.batch_size = batch_size;
    plan.seed = seed;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        plan.batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                  perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return plan;
}

namespace {

TimeSeriesSample synth_sample(const SynthConfig& cfg, int label, std::size_t index) {
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(label), index));
    std::normal_distribution<double> noise(0.0, cfg.noise_std);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

    TimeSeriesSample s;
    s.label = label;
    s.id = (label == 1 ? "pos" : "neg") + std::to_string(index);
    s.values.assign(cfg.channels * cfg.length, 0.0);
    if (cfg.noise_std > 0.0) {
        for (double& v : s.values) v = noise(rng);
    }
    if (label == 1) {
        const std::size_t window = std::max<std::size_t>(4, cfg.length / 4);
        const std::size_t max_onset = cfg.length > window ? cfg.length - window : 0;
        std::uniform_int_distribution<std::size_t> onset_dist(0, max_onset);
        const std::size_t onset = onset_dist(rng);
        const double phase = phase_dist(rng);
        for (std::size_t c = 0; c < cfg.channels; ++c) {
            for (std::size_t j = 0; j < window && onset + j < cfg.length; ++j) {
                const double u = static_cast<double>(j) / static_cast<double>(window);
                const double hann = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * u));
                const double burst =
                    hann * std::sin(4.0 * std::numbers::pi * u + phase);
                s.values[c * cfg.length + onset + j] += burst;
            }
        }
    }
    return s;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
    if (cfg.n_pos == 0 || cfg.n_neg == 0 || cfg.channels == 0 || cfg.length == 0) {
        throw ConfigError("synth_generate: counts, channels and length must be positive");
    }
    if (cfg.noise_std < 0.0) throw ConfigError("synth_generate: noise_std must be nonnegative");

    Dataset data;
    data.channel_count = cfg.channels;
    data.length = cfg.length;
    data.samples.reserve(cfg.n_pos + cfg.n_neg);
    for (std::size_t i = 0; i < cfg.n_neg; ++i) data.samples.push_back(synth_sample(cfg, 0, i));
    for (std::size_t i = 0; i < cfg.n_pos; ++i) data.samples.push_back(synth_sample(cfg, 1, i));
    return data;
}

std::pair<nn::Tensor, std::vector<int>> make_batch(const Dataset& data,
                                                   const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw DataError("make_batch: empty index list");
    nn::Tensor x({indices.size(), data.channel_count, data.length});
    std::vector<int> labels(indices.size());
    const std::size_t per_sample = data.channel_count * data.length;
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& s = data.samples.at(indices[b]);
        std::copy_n(s.values.begin(), per_sample, x.data.begin() + b * per_sample);
        labels[b] = s.label;
    }
    return {std::move(x), labels};
}

}  // namespace itsc::data
