#include "itsc/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "itsc/common.hpp"

namespace itsc::nn {

namespace {

constexpr double kSigmoidCeil = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

void require_rank(const Tensor& t, std::size_t rank, const char* who) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(who) + ": expected rank " + std::to_string(rank) +
                         " input, got shape " + t.shape_str());
    }
}

void require_dim(const Tensor& t, std::size_t axis, std::size_t want, const char* who) {
    if (t.dim(axis) != want) {
        throw ShapeError(std::string(who) + ": expected dimension " + std::to_string(axis) +
                         " to be " + std::to_string(want) + ", got shape " + t.shape_str());
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

}  // namespace

double stable_sigmoid(double x) {
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    if (s < std::numeric_limits<double>::min()) s = std::numeric_limits<double>::min();
    if (s > kSigmoidCeil) s = kSigmoidCeil;
    return s;
}

void init_uniform_fan_in(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
    if (fan_in == 0) throw ShapeError("init_uniform_fan_in: fan_in must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
}

Tensor residual_add(const Tensor& x, const Tensor& y) {
    require_same_shape(x, y, "residual_add");
    Tensor out(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] + y.data[i];
    return out;
}

Tensor residual_add_backward_x(const Tensor& grad_out) { return grad_out; }
Tensor residual_add_backward_y(const Tensor& grad_out) { return grad_out; }

Tensor concat_features(const Tensor& x, const Tensor& y) {
    require_rank(x, 2, "concat_features");
    require_rank(y, 2, "concat_features");
    require_dim(y, 0, x.dim(0), "concat_features");
    const std::size_t batch = x.dim(0);
    const std::size_t fx = x.dim(1);
    const std::size_t fy = y.dim(1);
    Tensor out({batch, fx + fy});
    for (std::size_t b = 0; b < batch; ++b) {
        std::copy_n(x.data.begin() + b * fx, fx, out.data.begin() + b * (fx + fy));
        std::copy_n(y.data.begin() + b * fy, fy, out.data.begin() + b * (fx + fy) + fx);
    }
    return out;
}

void split_features(const Tensor& grad_out, std::size_t a_features, Tensor& grad_x,
                    Tensor& grad_y) {
    require_rank(grad_out, 2, "split_features");
    if (a_features > grad_out.dim(1)) {
        throw ShapeError("split_features: split point past feature dimension");
    }
    const std::size_t batch = grad_out.dim(0);
    const std::size_t total = grad_out.dim(1);
    const std::size_t b_features = total - a_features;
    grad_x = Tensor({batch, a_features});
    grad_y = Tensor({batch, b_features});
    for (std::size_t b = 0; b < batch; ++b) {
        std::copy_n(grad_out.data.begin() + b * total, a_features,
                    grad_x.data.begin() + b * a_features);
        std::copy_n(grad_out.data.begin() + b * total + a_features, b_features,
                    grad_y.data.begin() + b * b_features);
    }
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size,
               std::size_t stride, Padding padding, std::mt19937_64& rng,
               const std::string& name_prefix)
    : kernels(name_prefix + ".kernels", Tensor({out_channels, in_channels, kernel_size})),
      bias(name_prefix + ".bias", Tensor({out_channels})),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_size_(kernel_size),
      stride_(stride),
      padding_(padding) {
    if (in_channels == 0 || out_channels == 0 || kernel_size == 0 || stride == 0) {
        throw ShapeError("Conv1d: channels, kernel size and stride must be positive");
    }
    init_uniform_fan_in(kernels.value, in_channels * kernel_size, rng);
    init_uniform_fan_in(bias.value, in_channels * kernel_size, rng);
}

std::size_t Conv1d::output_length(std::size_t input_length) const {
    if (padding_ == Padding::kSame) {
        return (input_length + stride_ - 1) / stride_;
    }
    if (input_length < kernel_size_) {
        throw ShapeError("Conv1d: input length " + std::to_string(input_length) +
                         " shorter than kernel " + std::to_string(kernel_size_));
    }
    return (input_length - kernel_size_) / stride_ + 1;
}

std::size_t Conv1d::pad_left(std::size_t input_length) const {
    if (padding_ == Padding::kValid) return 0;
    const std::size_t out_l = (input_length + stride_ - 1) / stride_;
    const long long total = static_cast<long long>((out_l - 1) * stride_ + kernel_size_) -
                            static_cast<long long>(input_length);
    return total > 0 ? static_cast<std::size_t>(total) / 2 : 0;
}

Tensor Conv1d::forward(const Tensor& input, Mode) {
    require_rank(input, 3, "Conv1d");
    require_dim(input, 1, in_channels_, "Conv1d");
    cached_input_ = input;

    const std::size_t batch = input.dim(0);
    const std::size_t l = input.dim(2);
    const std::size_t out_l = output_length(l);
    const long long pad = static_cast<long long>(pad_left(l));

    Tensor out({batch, out_channels_, out_l});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t co = 0; co < out_channels_; ++co) {
            double* orow = &out.at(b, co, 0);
            std::fill_n(orow, out_l, bias.value.data[co]);
            for (std::size_t ci = 0; ci < in_channels_; ++ci) {
                const double* irow = &input.at(b, ci, 0);
                for (std::size_t j = 0; j < kernel_size_; ++j) {
                    const double w = kernels.value.at(co, ci, j);
                    const long long off = static_cast<long long>(j) - pad;
                    // Output positions whose input index t*stride+off lands in [0, l).
                    std::size_t t0 = 0;
                    if (off < 0) {
                        t0 = static_cast<std::size_t>(
                            (-off + static_cast<long long>(stride_) - 1) /
                            static_cast<long long>(stride_));
                    }
                    const long long hi = static_cast<long long>(l) - 1 - off;
                    if (hi < 0) continue;
                    const std::size_t t1 =
                        std::min(out_l - 1, static_cast<std::size_t>(hi) / stride_);
                    const double* ishift = irow + off;
                    for (std::size_t t = t0; t <= t1; ++t) {
                        orow[t] += w * ishift[t * stride_];
                    }
                }
            }
        }
    }
    return out;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    if (cached_input_.size() == 0) throw Error("Conv1d: backward before forward");
    const Tensor& input = cached_input_;
    const std::size_t batch = input.dim(0);
    const std::size_t l = input.dim(2);
    const std::size_t out_l = output_length(l);
    require_rank(grad_out, 3, "Conv1d backward");
    require_dim(grad_out, 0, batch, "Conv1d backward");
    require_dim(grad_out, 1, out_channels_, "Conv1d backward");
    require_dim(grad_out, 2, out_l, "Conv1d backward");

    const long long pad = static_cast<long long>(pad_left(l));
    Tensor grad_in(input.shape);

    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t co = 0; co < out_channels_; ++co) {
            const double* grow = &grad_out.at(b, co, 0);
            double gb = 0.0;
            for (std::size_t t = 0; t < out_l; ++t) gb += grow[t];
            bias.value.grad[co] += gb;
            for (std::size_t ci = 0; ci < in_channels_; ++ci) {
                const double* irow = &input.at(b, ci, 0);
                double* dirow = &grad_in.at(b, ci, 0);
                for (std::size_t j = 0; j < kernel_size_; ++j) {
                    const long long off = static_cast<long long>(j) - pad;
                    std::size_t t0 = 0;
                    if (off < 0) {
                        t0 = static_cast<std::size_t>(
                            (-off + static_cast<long long>(stride_) - 1) /
                            static_cast<long long>(stride_));
                    }
                    const long long hi = static_cast<long long>(l) - 1 - off;
                    if (hi < 0) continue;
                    const std::size_t t1 =
                        std::min(out_l - 1, static_cast<std::size_t>(hi) / stride_);
                    const double w = kernels.value.at(co, ci, j);
                    const double* ishift = irow + off;
                    double* dishift = dirow + off;
                    double dw = 0.0;
                    for (std::size_t t = t0; t <= t1; ++t) {
                        dw += grow[t] * ishift[t * stride_];
                        dishift[t * stride_] += w * grow[t];
                    }
                    kernels.value.grad[(co * in_channels_ + ci) * kernel_size_ + j] += dw;
                }
            }
        }
    }
    return grad_in;
}

void Conv1d::collect_params(std::vector<Param*>& out) {
    out.push_back(&kernels);
    out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// MaxPool1d

MaxPool1d::MaxPool1d(std::size_t pool, std::size_t stride) : pool_(pool), stride_(stride) {
    if (pool == 0 || stride == 0) {
        throw ShapeError("MaxPool1d: pool and stride must be positive");
    }
}

std::size_t MaxPool1d::output_length(std::size_t input_length) const {
    if (input_length < pool_) {
        throw ShapeError("MaxPool1d: input length " + std::to_string(input_length) +
                         " shorter than pool " + std::to_string(pool_));
    }
    return (input_length - pool_) / stride_ + 1;
}

Tensor MaxPool1d::forward(const Tensor& input, Mode) {
    require_rank(input, 3, "MaxPool1d");
    const std::size_t batch = input.dim(0);
    const std::size_t channels = input.dim(1);
    const std::size_t l = input.dim(2);
    const std::size_t out_l = output_length(l);

    input_shape_ = input.shape;
    Tensor out({batch, channels, out_l});
    argmax_.assign(out.size(), 0);

    std::size_t oi = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* irow = &input.at(b, c, 0);
            const std::size_t row_base = (b * channels + c) * l;
            for (std::size_t t = 0; t < out_l; ++t, ++oi) {
                const std::size_t start = t * stride_;
                std::size_t best = start;
                double best_v = irow[start];
                for (std::size_t j = 1; j < pool_; ++j) {
                    if (irow[start + j] > best_v) {
                        best_v = irow[start + j];
                        best = start + j;
                    }
                }
                out.data[oi] = best_v;
                argmax_[oi] = row_base + best;
            }
        }
    }
    return out;
}

Tensor MaxPool1d::backward(const Tensor& grad_out) {
    if (input_shape_.empty()) throw Error("MaxPool1d: backward before forward");
    if (grad_out.size() != argmax_.size()) {
        throw ShapeError("MaxPool1d backward: gradient shape mismatch " + grad_out.shape_str());
    }
    Tensor grad_in(input_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i) {
        grad_in.data[argmax_[i]] += grad_out.data[i];
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool1d

Tensor GlobalAvgPool1d::forward(const Tensor& input, Mode) {
    require_rank(input, 3, "GlobalAvgPool1d");
    input_shape_ = input.shape;
    const std::size_t batch = input.dim(0);
    const std::size_t channels = input.dim(1);
    const std::size_t l = input.dim(2);
    if (l == 0) throw ShapeError("GlobalAvgPool1d: empty time axis");

    Tensor out({batch, channels});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* irow = &input.at(b, c, 0);
            double s = 0.0;
            for (std::size_t t = 0; t < l; ++t) s += irow[t];
            out.at(b, c) = s / static_cast<double>(l);
        }
    }
    return out;
}

Tensor GlobalAvgPool1d::backward(const Tensor& grad_out) {
    if (input_shape_.empty()) throw Error("GlobalAvgPool1d: backward before forward");
    const std::size_t batch = input_shape_[0];
    const std::size_t channels = input_shape_[1];
    const std::size_t l = input_shape_[2];
    require_rank(grad_out, 2, "GlobalAvgPool1d backward");
    require_dim(grad_out, 0, batch, "GlobalAvgPool1d backward");
    require_dim(grad_out, 1, channels, "GlobalAvgPool1d backward");

    Tensor grad_in(input_shape_);
    const double inv = 1.0 / static_cast<double>(l);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double g = grad_out.at(b, c) * inv;
            double* row = &grad_in.at(b, c, 0);
            for (std::size_t t = 0; t < l; ++t) row[t] = g;
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(std::size_t channels, double momentum, double epsilon,
                         const std::string& name_prefix)
    : gamma(name_prefix + ".gamma", Tensor({channels})),
      beta(name_prefix + ".beta", Tensor({channels})),
      running_mean(channels, 0.0),
      running_var(channels, 1.0),
      name_(name_prefix),
      channels_(channels),
      momentum_(momentum),
      epsilon_(epsilon) {
    if (channels == 0) throw ShapeError("BatchNorm1d: channels must be positive");
    std::fill(gamma.value.data.begin(), gamma.value.data.end(), 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& input, Mode mode) {
    require_rank(input, 3, "BatchNorm1d");
    require_dim(input, 1, channels_, "BatchNorm1d");
    const std::size_t batch = input.dim(0);
    const std::size_t l = input.dim(2);
    const std::size_t n = batch * l;
    if (n == 0) throw ShapeError("BatchNorm1d: empty batch");

    input_shape_ = input.shape;
    cached_mode_ = mode;
    xhat_.assign(input.size(), 0.0);
    invstd_.assign(channels_, 0.0);

    Tensor out(input.shape);
    for (std::size_t c = 0; c < channels_; ++c) {
        double mean, var;
        if (mode == Mode::kTrain) {
            double s = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* row = &input.at(b, c, 0);
                for (std::size_t t = 0; t < l; ++t) s += row[t];
            }
            mean = s / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* row = &input.at(b, c, 0);
                for (std::size_t t = 0; t < l; ++t) {
                    const double d = row[t] - mean;
                    ss += d * d;
                }
            }
            var = ss / static_cast<double>(n);
            running_mean[c] = momentum_ * running_mean[c] + (1.0 - momentum_) * mean;
            running_var[c] = momentum_ * running_var[c] + (1.0 - momentum_) * var;
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double inv = 1.0 / std::sqrt(var + epsilon_);
        invstd_[c] = inv;
        const double g = gamma.value.data[c];
        const double bta = beta.value.data[c];
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &input.at(b, c, 0);
            double* orow = &out.at(b, c, 0);
            double* xrow = &xhat_[(b * channels_ + c) * l];
            for (std::size_t t = 0; t < l; ++t) {
                const double xh = (row[t] - mean) * inv;
                xrow[t] = xh;
                orow[t] = g * xh + bta;
            }
        }
    }
    return out;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
    if (input_shape_.empty()) throw Error("BatchNorm1d: backward before forward");
    const std::size_t batch = input_shape_[0];
    const std::size_t l = input_shape_[2];
    const std::size_t n = batch * l;
    require_rank(grad_out, 3, "BatchNorm1d backward");
    require_dim(grad_out, 0, batch, "BatchNorm1d backward");
    require_dim(grad_out, 1, channels_, "BatchNorm1d backward");
    require_dim(grad_out, 2, l, "BatchNorm1d backward");

    Tensor grad_in(input_shape_);
    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* grow = &grad_out.at(b, c, 0);
            const double* xrow = &xhat_[(b * channels_ + c) * l];
            for (std::size_t t = 0; t < l; ++t) {
                sum_g += grow[t];
                sum_gx += grow[t] * xrow[t];
            }
        }
        gamma.value.grad[c] += sum_gx;
        beta.value.grad[c] += sum_g;

        const double g = gamma.value.data[c];
        const double inv = invstd_[c];
        if (cached_mode_ == Mode::kTrain) {
            const double scale = g * inv / static_cast<double>(n);
            for (std::size_t b = 0; b < batch; ++b) {
                const double* grow = &grad_out.at(b, c, 0);
                const double* xrow = &xhat_[(b * channels_ + c) * l];
                double* drow = &grad_in.at(b, c, 0);
                for (std::size_t t = 0; t < l; ++t) {
                    drow[t] = scale * (static_cast<double>(n) * grow[t] - sum_g -
                                       xrow[t] * sum_gx);
                }
            }
        } else {
            const double scale = g * inv;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* grow = &grad_out.at(b, c, 0);
                double* drow = &grad_in.at(b, c, 0);
                for (std::size_t t = 0; t < l; ++t) drow[t] = scale * grow[t];
            }
        }
    }
    return grad_in;
}

void BatchNorm1d::collect_params(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

void BatchNorm1d::collect_state(std::map<std::string, std::vector<double>*>& out) {
    out[name_ + ".running_mean"] = &running_mean;
    out[name_ + ".running_var"] = &running_var;
}

// ---------------------------------------------------------------------------
// Relu / Sigmoid / Dropout / Flatten

Tensor Relu::forward(const Tensor& input, Mode) {
    cached_input_ = input;
    Tensor out(input.shape);
    for (std::size_t i = 0; i < input.size(); ++i) {
        out.data[i] = input.data[i] > 0.0 ? input.data[i] : 0.0;
    }
    return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
    if (cached_input_.size() == 0) throw Error("Relu: backward before forward");
    require_same_shape(grad_out, cached_input_, "Relu backward");
    Tensor grad_in(cached_input_.shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        grad_in.data[i] = cached_input_.data[i] > 0.0 ? grad_out.data[i] : 0.0;
    }
    return grad_in;
}

Tensor Sigmoid::forward(const Tensor& input, Mode) {
    Tensor out(input.shape);
    for (std::size_t i = 0; i < input.size(); ++i) out.data[i] = stable_sigmoid(input.data[i]);
    cached_output_ = out;
    return out;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
    if (cached_output_.size() == 0) throw Error("Sigmoid: backward before forward");
    require_same_shape(grad_out, cached_output_, "Sigmoid backward");
    Tensor grad_in(cached_output_.shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const double s = cached_output_.data[i];
        grad_in.data[i] = grad_out.data[i] * s * (1.0 - s);
    }
    return grad_in;
}

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("Dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
}

Tensor Dropout::forward(const Tensor& input, Mode mode) {
    if (mode == Mode::kEval || rate_ == 0.0) {
        identity_pass_ = true;
        return input;
    }
    identity_pass_ = false;
    const double keep_scale = 1.0 / (1.0 - rate_);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    mask_.assign(input.size(), 0.0);
    Tensor out(input.shape);
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (dist(rng_) >= rate_) {
            mask_[i] = keep_scale;
            out.data[i] = input.data[i] * keep_scale;
        }
    }
    return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (identity_pass_) return grad_out;
    if (grad_out.size() != mask_.size()) {
        throw ShapeError("Dropout backward: gradient shape mismatch " + grad_out.shape_str());
    }
    Tensor grad_in(grad_out.shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        grad_in.data[i] = grad_out.data[i] * mask_[i];
    }
    return grad_in;
}

Tensor Flatten::forward(const Tensor& input, Mode) {
    require_rank(input, 3, "Flatten");
    input_shape_ = input.shape;
    Tensor out({input.dim(0), input.dim(1) * input.dim(2)});
    out.data = input.data;
    return out;
}

Tensor Flatten::backward(const Tensor& grad_out) {
    if (input_shape_.empty()) throw Error("Flatten: backward before forward");
    if (grad_out.size() != shape_product(input_shape_)) {
        throw ShapeError("Flatten backward: gradient shape mismatch " + grad_out.shape_str());
    }
    Tensor grad_in(input_shape_);
    grad_in.data = grad_out.data;
    return grad_in;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng,
             const std::string& name_prefix)
    : weights(name_prefix + ".weights", Tensor({in_features, out_features})),
      bias(name_prefix + ".bias", Tensor({out_features})),
      in_features_(in_features),
      out_features_(out_features) {
    if (in_features == 0 || out_features == 0) {
        throw ShapeError("Dense: feature counts must be positive");
    }
    init_uniform_fan_in(weights.value, in_features, rng);
    init_uniform_fan_in(bias.value, in_features, rng);
}

Tensor Dense::forward(const Tensor& input, Mode) {
    require_rank(input, 2, "Dense");
    require_dim(input, 1, in_features_, "Dense");
    cached_input_ = input;
    const std::size_t batch = input.dim(0);

    Tensor out({batch, out_features_});
    for (std::size_t b = 0; b < batch; ++b) {
        double* orow = &out.at(b, 0);
        std::copy_n(bias.value.data.begin(), out_features_, orow);
        const double* irow = &input.at(b, 0);
        for (std::size_t f = 0; f < in_features_; ++f) {
            const double x = irow[f];
            if (x == 0.0) continue;
            const double* wrow = &weights.value.at(f, 0);
            for (std::size_t u = 0; u < out_features_; ++u) orow[u] += x * wrow[u];
        }
    }
    return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
    if (cached_input_.size() == 0) throw Error("Dense: backward before forward");
    const std::size_t batch = cached_input_.dim(0);
    require_rank(grad_out, 2, "Dense backward");
    require_dim(grad_out, 0, batch, "Dense backward");
    require_dim(grad_out, 1, out_features_, "Dense backward");

    Tensor grad_in({batch, in_features_});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* grow = &grad_out.at(b, 0);
        const double* irow = &cached_input_.at(b, 0);
        double* dbias = bias.value.grad.data();
        for (std::size_t u = 0; u < out_features_; ++u) dbias[u] += grow[u];
        double* dirow = &grad_in.at(b, 0);
        for (std::size_t f = 0; f < in_features_; ++f) {
            const double* wrow = &weights.value.at(f, 0);
            double* dwrow = &weights.value.grad[f * out_features_];
            const double x = irow[f];
            double acc = 0.0;
            for (std::size_t u = 0; u < out_features_; ++u) {
                acc += wrow[u] * grow[u];
                dwrow[u] += x * grow[u];
            }
            dirow[f] = acc;
        }
    }
    return grad_in;
}

void Dense::collect_params(std::vector<Param*>& out) {
    out.push_back(&weights);
    out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// Lstm

Lstm::Lstm(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng,
           const std::string& name_prefix)
    : w_input(name_prefix + ".w_input", Tensor({4 * hidden_size, input_size})),
      w_hidden(name_prefix + ".w_hidden", Tensor({4 * hidden_size, hidden_size})),
      bias(name_prefix + ".bias", Tensor({4 * hidden_size})),
      input_size_(input_size),
      hidden_size_(hidden_size) {
    if (input_size == 0 || hidden_size == 0) {
        throw ShapeError("Lstm: input and hidden sizes must be positive");
    }
    const std::size_t fan_in = input_size + hidden_size;
    init_uniform_fan_in(w_input.value, fan_in, rng);
    init_uniform_fan_in(w_hidden.value, fan_in, rng);
    init_uniform_fan_in(bias.value, fan_in, rng);
}

Tensor Lstm::forward(const Tensor& input, Mode) {
    require_rank(input, 3, "Lstm");
    require_dim(input, 1, input_size_, "Lstm");
    cached_input_ = input;

    const std::size_t batch = input.dim(0);
    const std::size_t steps = input.dim(2);
    const std::size_t h = hidden_size_;
    if (steps == 0) throw ShapeError("Lstm: empty time axis");

    gate_i_.assign(steps, std::vector<double>(batch * h));
    gate_f_.assign(steps, std::vector<double>(batch * h));
    gate_g_.assign(steps, std::vector<double>(batch * h));
    gate_o_.assign(steps, std::vector<double>(batch * h));
    cell_.assign(steps, std::vector<double>(batch * h));
    tanh_cell_.assign(steps, std::vector<double>(batch * h));
    hidden_prev_.assign(steps, std::vector<double>(batch * h));

    std::vector<double> hidden(batch * h, 0.0);
    std::vector<double> cell(batch * h, 0.0);
    std::vector<double> pre(4 * h);

    for (std::size_t t = 0; t < steps; ++t) {
        hidden_prev_[t] = hidden;
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy(bias.value.data.begin(), bias.value.data.end(), pre.begin());
            for (std::size_t c = 0; c < input_size_; ++c) {
                const double x = input.at(b, c, t);
                if (x == 0.0) continue;
                for (std::size_t r = 0; r < 4 * h; ++r) {
                    pre[r] += w_input.value.data[r * input_size_ + c] * x;
                }
            }
            const double* hprev = &hidden_prev_[t][b * h];
            for (std::size_t c = 0; c < h; ++c) {
                const double hv = hprev[c];
                if (hv == 0.0) continue;
                for (std::size_t r = 0; r < 4 * h; ++r) {
                    pre[r] += w_hidden.value.data[r * h + c] * hv;
                }
            }
            for (std::size_t u = 0; u < h; ++u) {
                const double gi = stable_sigmoid(pre[u]);
                const double gf = stable_sigmoid(pre[h + u]);
                const double gg = std::tanh(pre[2 * h + u]);
                const double go = stable_sigmoid(pre[3 * h + u]);
                const double c_new = gf * cell[b * h + u] + gi * gg;
                const double tc = std::tanh(c_new);
                gate_i_[t][b * h + u] = gi;
                gate_f_[t][b * h + u] = gf;
                gate_g_[t][b * h + u] = gg;
                gate_o_[t][b * h + u] = go;
                cell_[t][b * h + u] = c_new;
                tanh_cell_[t][b * h + u] = tc;
                cell[b * h + u] = c_new;
                hidden[b * h + u] = go * tc;
            }
        }
    }

    Tensor out({batch, h});
    out.data = hidden;
    return out;
}

Tensor Lstm::backward(const Tensor& grad_out) {
    if (cached_input_.size() == 0) throw Error("Lstm: backward before forward");
    const std::size_t batch = cached_input_.dim(0);
    const std::size_t steps = cached_input_.dim(2);
    const std::size_t h = hidden_size_;
    require_rank(grad_out, 2, "Lstm backward");
    require_dim(grad_out, 0, batch, "Lstm backward");
    require_dim(grad_out, 1, h, "Lstm backward");

    Tensor grad_in(cached_input_.shape);
    std::vector<double> dh(grad_out.data);
    std::vector<double> dc(batch * h, 0.0);
    std::vector<double> dpre(4 * h);

    for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t u = 0; u < h; ++u) {
                const std::size_t idx = b * h + u;
                const double gi = gate_i_[t][idx];
                const double gf = gate_f_[t][idx];
                const double gg = gate_g_[t][idx];
                const double go = gate_o_[t][idx];
                const double tc = tanh_cell_[t][idx];
                const double c_prev = t > 0 ? cell_[t - 1][idx] : 0.0;

                const double dho = dh[idx];
                const double dcell = dc[idx] + dho * go * (1.0 - tc * tc);
                dpre[u] = dcell * gg * gi * (1.0 - gi);
                dpre[h + u] = dcell * c_prev * gf * (1.0 - gf);
                dpre[2 * h + u] = dcell * gi * (1.0 - gg * gg);
                dpre[3 * h + u] = dho * tc * go * (1.0 - go);
                dc[idx] = dcell * gf;
            }

            for (std::size_t r = 0; r < 4 * h; ++r) bias.value.grad[r] += dpre[r];

            double* dhrow = &dh[b * h];
            const double* hprev = &hidden_prev_[t][b * h];
            std::fill_n(dhrow, h, 0.0);
            for (std::size_t r = 0; r < 4 * h; ++r) {
                const double d = dpre[r];
                if (d == 0.0) continue;
                double* dwrow = &w_hidden.value.grad[r * h];
                const double* wrow = &w_hidden.value.data[r * h];
                for (std::size_t c = 0; c < h; ++c) {
                    dwrow[c] += d * hprev[c];
                    dhrow[c] += d * wrow[c];
                }
            }
            for (std::size_t r = 0; r < 4 * h; ++r) {
                const double d = dpre[r];
                if (d == 0.0) continue;
                double* dwrow = &w_input.value.grad[r * input_size_];
                const double* wrow = &w_input.value.data[r * input_size_];
                for (std::size_t c = 0; c < input_size_; ++c) {
                    dwrow[c] += d * cached_input_.at(b, c, t);
                    grad_in.at(b, c, t) += d * wrow[c];
                }
            }
        }
    }
    return grad_in;
}

void Lstm::collect_params(std::vector<Param*>& out) {
    out.push_back(&w_input);
    out.push_back(&w_hidden);
    out.push_back(&bias);
}

}  // namespace itsc::nn
