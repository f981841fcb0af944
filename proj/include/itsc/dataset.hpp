#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itsc/tensor.hpp"

namespace itsc::data {

/// One multichannel series with a binary label. values is row-major
/// channels x length; label 1 is the positive (minority) class.
struct TimeSeriesSample {
    std::vector<double> values;
    int label = 0;
    std::string id;
};

/// Per-channel normalization parameters fitted on a training split.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct Dataset {
    std::vector<TimeSeriesSample> samples;
    std::size_t channel_count = 0;
    std::size_t length = 0;

    std::size_t size() const { return samples.size(); }
    double value(std::size_t sample, std::size_t channel, std::size_t t) const {
        return samples[sample].values[channel * length + t];
    }
};

/// Throws DataError if any sample deviates from the declared geometry, holds
/// a non-finite value, or carries a label outside {0, 1}.
void validate(const Dataset& data);

struct FoldSplit {
    std::size_t fold_index = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> validation_indices;
};

struct MinibatchPlan {
    std::size_t batch_size = 0;
    std::vector<std::vector<std::size_t>> batches;
    std::uint64_t seed = 0;
};

/// n_negative / n_positive. Throws DataError when either class is absent.
double imbalance_ratio(const Dataset& data);

std::size_t count_positive(const Dataset& data);

/// Fits per-channel mean/std over every sample and timestep of the training
/// set and standardizes it in place of a copy. Channels with std below 1e-12
/// pass through unchanged and record std 1.
std::pair<Dataset, NormStats> zscore_fit_transform(const Dataset& train);
Dataset zscore_apply(const Dataset& data, const NormStats& stats);

/// Stratified k folds: indices of each class are shuffled under the seed and
/// dealt round-robin, so per-fold class counts differ by at most one.
std::vector<FoldSplit> stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed);

/// A fresh uniform permutation of [0, n) per (seed, epoch), chunked into
/// batches of size B with a possibly short final batch.
MinibatchPlan shuffled_minibatches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                   std::uint64_t epoch);

struct SynthConfig {
    std::size_t n_pos = 1;
    std::size_t n_neg = 1;
    std::size_t channels = 1;
    std::size_t length = 16;
    double noise_std = 1.0;
    std::uint64_t seed = 0;
};

/// Synthetic binary problem: negatives are Gaussian noise; positives add a
/// Hann-windowed sinusoid burst with per-sample random onset and phase. Each
/// sample's content depends only on (seed, class, index), so changing one
/// class count leaves the other class's samples intact.
Dataset synth_generate(const SynthConfig& config);

/// Gathers samples into a batch_size x channels x length tensor plus labels.
std::pair<nn::Tensor, std::vector<int>> make_batch(const Dataset& data,
                                                   const std::vector<std::size_t>& indices);

}  // namespace itsc::data
