#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "itsc/tensor.hpp"

namespace itsc::nn {

enum class Mode { kTrain, kEval };
enum class Padding { kValid, kSame };

/// Branch-form logistic; output clamped strictly inside (0, 1) for all finite x.
double stable_sigmoid(double x);

/// Fan-in-scaled uniform init on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_uniform_fan_in(Tensor& t, std::size_t fan_in, std::mt19937_64& rng);

/// Elementwise sum; shapes must match exactly.
Tensor residual_add(const Tensor& x, const Tensor& y);
Tensor residual_add_backward_x(const Tensor& grad_out);
Tensor residual_add_backward_y(const Tensor& grad_out);

/// Concatenation along the feature axis of two batch x F tensors, x first.
Tensor concat_features(const Tensor& x, const Tensor& y);
void split_features(const Tensor& grad_out, std::size_t a_features, Tensor& grad_x,
                    Tensor& grad_y);

/// One forward/backward-capable network stage. forward() caches whatever the
/// matching backward() needs; backward() returns the gradient w.r.t. the last
/// forward input and accumulates parameter gradients in place.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& input, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<Param*>& /*out*/) {}
    /// Named non-parameter state (e.g. batch-norm running statistics) for
    /// checkpointing.
    virtual void collect_state(std::map<std::string, std::vector<double>*>& /*out*/) {}
    virtual const char* kind() const = 0;
};

/// 1-D cross-correlation over batch x C_in x l inputs (no kernel flip).
class Conv1d : public Layer {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size,
           std::size_t stride, Padding padding, std::mt19937_64& rng,
           const std::string& name_prefix);

    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;
    const char* kind() const override { return "conv1d"; }

    std::size_t output_length(std::size_t input_length) const;
    std::size_t out_channels() const { return out_channels_; }

    Param kernels;  // C_out x C_in x k
    Param bias;     // C_out

private:
    std::size_t in_channels_;
    std::size_t out_channels_;
    std::size_t kernel_size_;
    std::size_t stride_;
    Padding padding_;
    std::size_t pad_left(std::size_t) const;
    Tensor cached_input_;
};

class MaxPool1d : public Layer {
public:
    MaxPool1d(std::size_t pool, std::size_t stride);

    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "max_pool1d"; }

    std::size_t output_length(std::size_t input_length) const;

private:
    std::size_t pool_;
    std::size_t stride_;
    std::vector<std::size_t> input_shape_;
    std::vector<std::size_t> argmax_;  // flat input index per output element
};

class GlobalAvgPool1d : public Layer {
public:
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "global_avg_pool1d"; }

private:
    std::vector<std::size_t> input_shape_;
};

/// Per-channel normalization over (batch, time) with running statistics.
class BatchNorm1d : public Layer {
public:
    BatchNorm1d(std::size_t channels, double momentum, double epsilon,
                const std::string& name_prefix);

    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_state(std::map<std::string, std::vector<double>*>& out) override;
    const char* kind() const override { return "batch_norm1d"; }

    Param gamma;
    Param beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;

private:
    std::string name_;
    std::size_t channels_;
    double momentum_;
    double epsilon_;
    Mode cached_mode_ = Mode::kTrain;
    std::vector<std::size_t> input_shape_;
    std::vector<double> xhat_;
    std::vector<double> invstd_;  // per channel, for the mode used in forward
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "relu"; }

private:
    Tensor cached_input_;
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "sigmoid"; }

private:
    Tensor cached_output_;
};

/// Inverted dropout: eval mode is the identity, train mode scales survivors
/// by 1/(1-rate) so expected activations match between modes.
class Dropout : public Layer {
public:
    Dropout(double rate, std::uint64_t seed);

    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "dropout"; }

private:
    double rate_;
    std::mt19937_64 rng_;
    std::vector<double> mask_;  // 0 or 1/(1-rate) per element of the last train forward
    bool identity_pass_ = true;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "flatten"; }

private:
    std::vector<std::size_t> input_shape_;
};

/// Affine map on batch x F inputs.
class Dense : public Layer {
public:
    Dense(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng,
          const std::string& name_prefix);

    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;
    const char* kind() const override { return "dense"; }

    Param weights;  // F x U
    Param bias;     // U

private:
    std::size_t in_features_;
    std::size_t out_features_;
    Tensor cached_input_;
};

/// Single LSTM layer consuming batch x C x l and returning the last hidden
/// state batch x H. Gates: input/forget/output sigmoid, candidate tanh, zero
/// initial state. Backward is full backpropagation through time.
class Lstm : public Layer {
public:
    Lstm(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng,
         const std::string& name_prefix);

    Tensor forward(const Tensor& input, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<Param*>& out) override;
    const char* kind() const override { return "lstm"; }

    std::size_t hidden_size() const { return hidden_size_; }

    Param w_input;   // 4H x C, gate row blocks ordered [i, f, g, o]
    Param w_hidden;  // 4H x H
    Param bias;      // 4H

private:
    std::size_t input_size_;
    std::size_t hidden_size_;
    Tensor cached_input_;
    // Per-step caches, each batch*H, indexed [t][b*H + h].
    std::vector<std::vector<double>> gate_i_, gate_f_, gate_g_, gate_o_;
    std::vector<std::vector<double>> cell_, tanh_cell_, hidden_prev_;
};

}  // namespace itsc::nn
