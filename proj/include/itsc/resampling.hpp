#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itsc/dataset.hpp"

namespace itsc::resample {

/// Provenance of one feature-matrix row: either an original row (index into
/// the source matrix) or a synthetic point interpolated between two recorded
/// parent rows as parent_a + gap * (parent_b - parent_a).
struct Origin {
    bool synthetic = false;
    std::size_t index = 0;
    std::size_t parent_a = 0;
    std::size_t parent_b = 0;
    double gap = 0.0;
};

/// Flattened view of a dataset: one row of channels*length features per
/// sample, plus labels and per-row provenance.
struct FeatureMatrix {
    std::size_t cols = 0;
    std::vector<double> values;  // row-major, size() == rows() * cols
    std::vector<int> labels;
    std::vector<Origin> origin;

    std::size_t rows() const { return labels.size(); }
    const double* row(std::size_t i) const { return values.data() + i * cols; }
    double* row(std::size_t i) { return values.data() + i * cols; }
};

enum class Method {
    kRos,
    kRus,
    kSmote,
    kSmoteB1,
    kSmoteB2,
    kAdasyn,
    kNearmiss1,
    kTomek,
    kEnn,
    kOss,
    kNcr,
    kSmoteEnn,
    kSmoteTl,
};

Method method_from_string(const std::string& name);
std::string to_string(Method method);

/// Method-specific neighbor-count default: 3 for the edited-neighbor
/// cleaners (enn, ncr), 5 elsewhere.
std::size_t default_k(Method method);

struct SamplerConfig {
    Method method = Method::kRos;
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // desired n_pos / n_neg where applicable
    std::uint64_t seed = 0;
};

/// Exact Euclidean k-nearest-neighbor indices among `candidates` for one
/// query row; distance ties break toward the lower row index.
std::vector<std::size_t> knn_of(const FeatureMatrix& x, std::size_t query,
                                const std::vector<std::size_t>& candidates, std::size_t k);

/// k nearest neighbors over all rows for each query row.
std::vector<std::vector<std::size_t>> knn_indices(const FeatureMatrix& x,
                                                  const std::vector<std::size_t>& queries,
                                                  std::size_t k, bool exclude_self);

FeatureMatrix random_over_sample(const FeatureMatrix& x, const SamplerConfig& config);
FeatureMatrix random_under_sample(const FeatureMatrix& x, const SamplerConfig& config);

enum class SmoteVariant { kPlain, kBorderline1, kBorderline2 };
FeatureMatrix smote(const FeatureMatrix& x, const SamplerConfig& config, SmoteVariant variant);

FeatureMatrix adasyn(const FeatureMatrix& x, const SamplerConfig& config);
FeatureMatrix nearmiss1(const FeatureMatrix& x, const SamplerConfig& config);
FeatureMatrix tomek_links(const FeatureMatrix& x, const SamplerConfig& config);
FeatureMatrix enn(const FeatureMatrix& x, const SamplerConfig& config);
FeatureMatrix oss(const FeatureMatrix& x, const SamplerConfig& config);
FeatureMatrix ncr(const FeatureMatrix& x, const SamplerConfig& config);

enum class Cleaner { kEnn, kTomek };
/// Plain SMOTE to the target ratio, then the cleaner applied to the union.
/// In this post-SMOTE step only, the cleaner may remove rows of either class.
FeatureMatrix combined(const FeatureMatrix& x, const SamplerConfig& config, Cleaner cleaner);

FeatureMatrix flatten(const data::Dataset& data);

/// Rebuild a dataset from a resampled matrix. Original rows keep the id of
/// the source sample they point at; synthetic rows get ids "syn0", "syn1", ...
data::Dataset unflatten(const FeatureMatrix& x, const data::Dataset& source);

/// Flatten, dispatch on config.method, un-flatten. Intended for training
/// folds only; never apply to validation data.
data::Dataset resample_dataset(const data::Dataset& data, const SamplerConfig& config);

}  // namespace itsc::resample
