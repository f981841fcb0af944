#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "itsc/dataset.hpp"
#include "itsc/layers.hpp"
#include "itsc/tensor.hpp"

namespace itsc::models {

enum class ModelKind { kMlp, kCnn, kFcn, kResnet, kLstmFcn };

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

/// One of the five binary time-series classifiers. Every architecture ends in
/// a 1-unit dense head followed by a sigmoid; forward() returns the positive
/// class probability per batch row. Hyperparameters are overridable by name;
/// unknown names are rejected.
class Model {
public:
    Model(ModelKind kind, std::size_t channels, std::size_t length,
          const std::map<std::string, double>& overrides, std::uint64_t seed);

    ModelKind kind() const { return kind_; }
    std::size_t channels() const { return channels_; }
    std::size_t length() const { return length_; }
    nn::Mode mode() const { return mode_; }
    void set_mode(nn::Mode m) { mode_ = m; }

    /// Probabilities in (0,1) for a batch x channels x length tensor.
    std::vector<double> forward(const nn::Tensor& batch);

    /// Backpropagates d(loss)/d(logit), one entry per row of the last
    /// forward batch, accumulating parameter gradients.
    void backward_from_logits(const std::vector<double>& grad_logits);

    /// Backpropagates d(loss)/d(probability) by chaining the sigmoid
    /// derivative at the cached outputs.
    void backward_from_probs(const std::vector<double>& grad_probs);

    std::vector<nn::Param*> params();
    void zero_grad();
    std::size_t parameter_count();

    /// Sets every parameter to zero (keeps running statistics); with a zero
    /// head the model outputs exactly 0.5 everywhere.
    void zero_params();

    /// Full numeric state: parameters plus batch-norm running statistics.
    std::map<std::string, nn::Tensor> state();
    void load_state(const std::map<std::string, nn::Tensor>& st);

    const std::map<std::string, double>& hyperparams() const { return hyper_; }

private:
    ModelKind kind_;
    std::size_t channels_;
    std::size_t length_;
    nn::Mode mode_ = nn::Mode::kTrain;
    std::map<std::string, double> hyper_;
    std::vector<std::unique_ptr<nn::Layer>> stages_;
    std::unique_ptr<nn::Layer> head_;
    std::vector<double> cached_probs_;

    void build(std::uint64_t seed);
};

/// Eval-mode scoring of a whole dataset in chunks. Throws unless the model
/// is in eval mode. labels[i] = 1 iff scores[i] >= threshold.
std::pair<std::vector<double>, std::vector<int>> predict(Model& model,
                                                         const data::Dataset& data,
                                                         double threshold,
                                                         std::size_t batch_size = 512);

}  // namespace itsc::models
