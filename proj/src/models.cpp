#include "itsc/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "itsc/common.hpp"
#include "itsc/metrics.hpp"

namespace itsc::models {

using nn::BatchNorm1d;
using nn::Conv1d;
using nn::Dense;
using nn::Dropout;
using nn::Flatten;
using nn::GlobalAvgPool1d;
using nn::Lstm;
using nn::MaxPool1d;
using nn::Mode;
using nn::Padding;
using nn::Param;
using nn::Relu;
using nn::Tensor;

namespace {

/// conv k8 -> bn -> relu -> conv k5 -> bn -> relu -> conv k3 -> bn, plus a
/// k=1 projection shortcut when the channel count changes, relu after the sum.
class ResidualBlock final : public nn::Layer {
public:
    ResidualBlock(std::size_t in_ch, std::size_t filters, std::mt19937_64& rng,
                  const std::string& prefix)
        : conv1_(in_ch, filters, 8, 1, Padding::kSame, rng, prefix + ".conv1"),
          bn1_(filters, 0.9, 1e-5, prefix + ".bn1"),
          conv2_(filters, filters, 5, 1, Padding::kSame, rng, prefix + ".conv2"),
          bn2_(filters, 0.9, 1e-5, prefix + ".bn2"),
          conv3_(filters, filters, 3, 1, Padding::kSame, rng, prefix + ".conv3"),
          bn3_(filters, 0.9, 1e-5, prefix + ".bn3") {
        if (in_ch != filters) {
            proj_ = std::make_unique<Conv1d>(in_ch, filters, 1, 1, Padding::kSame, rng,
                                             prefix + ".proj");
        }
    }

    Tensor forward(const Tensor& x, Mode mode) override {
        Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x, mode), mode), mode);
        h = relu2_.forward(bn2_.forward(conv2_.forward(h, mode), mode), mode);
        Tensor m = bn3_.forward(conv3_.forward(h, mode), mode);
        Tensor s = proj_ ? proj_->forward(x, mode) : x;
        return relu_out_.forward(nn::residual_add(m, s), mode);
    }

    Tensor backward(const Tensor& g) override {
        Tensor g1 = relu_out_.backward(g);
        Tensor gm = conv1_.backward(bn1_.backward(relu1_.backward(
            conv2_.backward(bn2_.backward(relu2_.backward(conv3_.backward(bn3_.backward(g1))))))));
        Tensor gs = proj_ ? proj_->backward(g1) : g1;
        return nn::residual_add(gm, gs);
    }

    void collect_params(std::vector<Param*>& out) override {
        conv1_.collect_params(out);
        bn1_.collect_params(out);
        conv2_.collect_params(out);
        bn2_.collect_params(out);
        conv3_.collect_params(out);
        bn3_.collect_params(out);
        if (proj_) proj_->collect_params(out);
    }

    void collect_state(std::map<std::string, std::vector<double>*>& out) override {
        bn1_.collect_state(out);
        bn2_.collect_state(out);
        bn3_.collect_state(out);
    }

    const char* kind() const override { return "residual_block"; }

private:
    Conv1d conv1_;
    BatchNorm1d bn1_;
    Conv1d conv2_;
    BatchNorm1d bn2_;
    Conv1d conv3_;
    BatchNorm1d bn3_;
    std::unique_ptr<Conv1d> proj_;
    Relu relu1_, relu2_, relu_out_;
};

/// Runs two layer chains on the same input and concatenates their feature
/// outputs; gradients add where the branches rejoin the input.
class ParallelBranches final : public nn::Layer {
public:
    ParallelBranches(std::vector<std::unique_ptr<nn::Layer>> a,
                     std::vector<std::unique_ptr<nn::Layer>> b)
        : branch_a_(std::move(a)), branch_b_(std::move(b)) {}

    Tensor forward(const Tensor& x, Mode mode) override {
        Tensor fa = x;
        for (auto& layer : branch_a_) fa = layer->forward(fa, mode);
        Tensor fb = x;
        for (auto& layer : branch_b_) fb = layer->forward(fb, mode);
        a_features_ = fa.dim(1);
        return nn::concat_features(fa, fb);
    }

    Tensor backward(const Tensor& g) override {
        Tensor ga, gb;
        nn::split_features(g, a_features_, ga, gb);
        for (auto it = branch_a_.rbegin(); it != branch_a_.rend(); ++it) {
            ga = (*it)->backward(ga);
        }
        for (auto it = branch_b_.rbegin(); it != branch_b_.rend(); ++it) {
            gb = (*it)->backward(gb);
        }
        return nn::residual_add(ga, gb);
    }

    void collect_params(std::vector<Param*>& out) override {
        for (auto& layer : branch_a_) layer->collect_params(out);
        for (auto& layer : branch_b_) layer->collect_params(out);
    }

    void collect_state(std::map<std::string, std::vector<double>*>& out) override {
        for (auto& layer : branch_a_) layer->collect_state(out);
        for (auto& layer : branch_b_) layer->collect_state(out);
    }

    const char* kind() const override { return "parallel_branches"; }

private:
    std::vector<std::unique_ptr<nn::Layer>> branch_a_;
    std::vector<std::unique_ptr<nn::Layer>> branch_b_;
    std::size_t a_features_ = 0;
};

std::map<std::string, double> default_hyperparams(ModelKind kind) {
    switch (kind) {
        case ModelKind::kMlp:
            return {{"hidden1", 32}, {"hidden2", 32}, {"hidden3", 64}};
        case ModelKind::kCnn:
            return {{"filters1", 32}, {"filters2", 64}, {"filters3", 64}, {"kernel1", 5},
                    {"kernel2", 5},  {"kernel3", 3},  {"pool", 2},      {"dense", 64},
                    {"dropout", 0.5}};
        case ModelKind::kFcn:
            return {{"filters1", 128}, {"filters2", 256}, {"filters3", 128},
                    {"kernel1", 8},    {"kernel2", 5},    {"kernel3", 3}};
        case ModelKind::kResnet:
            return {{"filters1", 64}, {"filters2", 128}, {"filters3", 128}};
        case ModelKind::kLstmFcn:
            return {{"filters1", 128}, {"filters2", 256}, {"filters3", 128}, {"kernel1", 8},
                    {"kernel2", 5},    {"kernel3", 3},    {"lstm_hidden", 8},
                    {"lstm_dropout", 0.8}};
    }
    throw ConfigError("unknown model kind");
}

std::size_t int_param(const std::map<std::string, double>& h, const std::string& key) {
    const double v = h.at(key);
    if (v < 1.0 || v != std::floor(v)) {
        throw ConfigError("model hyperparameter " + key + " must be a positive integer, got " +
                          std::to_string(v));
    }
    return static_cast<std::size_t>(v);
}

double rate_param(const std::map<std::string, double>& h, const std::string& key) {
    const double v = h.at(key);
    if (v < 0.0 || v >= 1.0) {
        throw ConfigError("model hyperparameter " + key + " must lie in [0, 1), got " +
                          std::to_string(v));
    }
    return v;
}

}  // namespace

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "mlp") return ModelKind::kMlp;
    if (name == "cnn") return ModelKind::kCnn;
    if (name == "fcn") return ModelKind::kFcn;
    if (name == "resnet") return ModelKind::kResnet;
    if (name == "lstm_fcn") return ModelKind::kLstmFcn;
    throw ConfigError("unknown model kind \"" + name +
                      "\" (expected mlp, cnn, fcn, resnet or lstm_fcn)");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kMlp: return "mlp";
        case ModelKind::kCnn: return "cnn";
        case ModelKind::kFcn: return "fcn";
        case ModelKind::kResnet: return "resnet";
        case ModelKind::kLstmFcn: return "lstm_fcn";
    }
    throw ConfigError("unknown model kind");
}

Model::Model(ModelKind kind, std::size_t channels, std::size_t length,
             const std::map<std::string, double>& overrides, std::uint64_t seed)
    : kind_(kind), channels_(channels), length_(length) {
    if (channels == 0 || length == 0) {
        throw ConfigError("model input shape must be positive, got " + std::to_string(channels) +
                          " x " + std::to_string(length));
    }
    hyper_ = default_hyperparams(kind);
    for (const auto& [key, value] : overrides) {
        auto it = hyper_.find(key);
        if (it == hyper_.end()) {
            throw ConfigError("model " + to_string(kind) + " has no hyperparameter \"" + key +
                              "\"");
        }
        it->second = value;
    }
    build(seed);
}

void Model::build(std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, 0));
    std::size_t head_in = 0;

    auto fcn_trunk = [&](const std::string& prefix) {
        std::vector<std::unique_ptr<nn::Layer>> trunk;
        const std::size_t f1 = int_param(hyper_, "filters1");
        const std::size_t f2 = int_param(hyper_, "filters2");
        const std::size_t f3 = int_param(hyper_, "filters3");
        trunk.push_back(std::make_unique<Conv1d>(channels_, f1, int_param(hyper_, "kernel1"), 1,
                                                 Padding::kSame, rng, prefix + "conv1"));
        trunk.push_back(std::make_unique<BatchNorm1d>(f1, 0.9, 1e-5, prefix + "bn1"));
        trunk.push_back(std::make_unique<Relu>());
        trunk.push_back(std::make_unique<Conv1d>(f1, f2, int_param(hyper_, "kernel2"), 1,
                                                 Padding::kSame, rng, prefix + "conv2"));
        trunk.push_back(std::make_unique<BatchNorm1d>(f2, 0.9, 1e-5, prefix + "bn2"));
        trunk.push_back(std::make_unique<Relu>());
        trunk.push_back(std::make_unique<Conv1d>(f2, f3, int_param(hyper_, "kernel3"), 1,
                                                 Padding::kSame, rng, prefix + "conv3"));
        trunk.push_back(std::make_unique<BatchNorm1d>(f3, 0.9, 1e-5, prefix + "bn3"));
        trunk.push_back(std::make_unique<Relu>());
        trunk.push_back(std::make_unique<GlobalAvgPool1d>());
        return trunk;
    };

    switch (kind_) {
        case ModelKind::kMlp: {
            const std::size_t h1 = int_param(hyper_, "hidden1");
            const std::size_t h2 = int_param(hyper_, "hidden2");
            const std::size_t h3 = int_param(hyper_, "hidden3");
            stages_.push_back(std::make_unique<Flatten>());
            stages_.push_back(std::make_unique<Dense>(channels_ * length_, h1, rng, "dense1"));
            stages_.push_back(std::make_unique<Relu>());
            stages_.push_back(std::make_unique<Dense>(h1, h2, rng, "dense2"));
            stages_.push_back(std::make_unique<Relu>());
            stages_.push_back(std::make_unique<Dense>(h2, h3, rng, "dense3"));
            stages_.push_back(std::make_unique<Relu>());
            head_in = h3;
            break;
        }
        case ModelKind::kCnn: {
            const std::size_t f1 = int_param(hyper_, "filters1");
            const std::size_t f2 = int_param(hyper_, "filters2");
            const std::size_t f3 = int_param(hyper_, "filters3");
            const std::size_t pool = int_param(hyper_, "pool");
            const std::size_t dense = int_param(hyper_, "dense");
            if (length_ < pool * pool) {
                throw ConfigError("cnn needs input length >= " + std::to_string(pool * pool) +
                                  " for two pooling stages, got " + std::to_string(length_));
            }
            const std::size_t l1 = (length_ - pool) / pool + 1;
            const std::size_t l2 = (l1 - pool) / pool + 1;
            stages_.push_back(std::make_unique<Conv1d>(channels_, f1,
                                                       int_param(hyper_, "kernel1"), 1,
                                                       Padding::kSame, rng, "conv1"));
            stages_.push_back(std::make_unique<Relu>());
            stages_.push_back(std::make_unique<MaxPool1d>(pool, pool));
            stages_.push_back(std::make_unique<Conv1d>(f1, f2, int_param(hyper_, "kernel2"), 1,
                                                       Padding::kSame, rng, "conv2"));
            stages_.push_back(std::make_unique<Relu>());
            stages_.push_back(std::make_unique<MaxPool1d>(pool, pool));
            stages_.push_back(std::make_unique<Conv1d>(f2, f3, int_param(hyper_, "kernel3"), 1,
                                                       Padding::kSame, rng, "conv3"));
            stages_.push_back(std::make_unique<Relu>());
            stages_.push_back(
                std::make_unique<Dropout>(rate_param(hyper_, "dropout"), derive_seed(seed, 101)));
            stages_.push_back(std::make_unique<Flatten>());
            stages_.push_back(std::make_unique<Dense>(f3 * l2, dense, rng, "dense1"));
            head_in = dense;
            break;
        }
        case ModelKind::kFcn: {
            for (auto& layer : fcn_trunk("")) stages_.push_back(std::move(layer));
            head_in = int_param(hyper_, "filters3");
            break;
        }
        case ModelKind::kResnet: {
            const std::size_t f1 = int_param(hyper_, "filters1");
            const std::size_t f2 = int_param(hyper_, "filters2");
            const std::size_t f3 = int_param(hyper_, "filters3");
            stages_.push_back(std::make_unique<ResidualBlock>(channels_, f1, rng, "block1"));
            stages_.push_back(std::make_unique<ResidualBlock>(f1, f2, rng, "block2"));
            stages_.push_back(std::make_unique<ResidualBlock>(f2, f3, rng, "block3"));
            stages_.push_back(std::make_unique<GlobalAvgPool1d>());
            head_in = f3;
            break;
        }
        case ModelKind::kLstmFcn: {
            const std::size_t hidden = int_param(hyper_, "lstm_hidden");
            std::vector<std::unique_ptr<nn::Layer>> lstm_branch;
            lstm_branch.push_back(std::make_unique<Lstm>(channels_, hidden, rng, "lstm"));
            lstm_branch.push_back(std::make_unique<Dropout>(rate_param(hyper_, "lstm_dropout"),
                                                            derive_seed(seed, 102)));
            stages_.push_back(std::make_unique<ParallelBranches>(fcn_trunk("fcn."),
                                                                 std::move(lstm_branch)));
            head_in = int_param(hyper_, "filters3") + hidden;
            break;
        }
    }
    head_ = std::make_unique<Dense>(head_in, 1, rng, "head");
}

std::vector<double> Model::forward(const Tensor& batch) {
    if (batch.rank() != 3 || batch.dim(1) != channels_ || batch.dim(2) != length_) {
        throw ShapeError("model expects batch x " + std::to_string(channels_) + " x " +
                         std::to_string(length_) + ", got " + batch.shape_str());
    }
    Tensor h = batch;
    for (auto& stage : stages_) h = stage->forward(h, mode_);
    Tensor logits = head_->forward(h, mode_);

    cached_probs_.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        cached_probs_[i] = nn::stable_sigmoid(logits.data[i]);
    }
    return cached_probs_;
}

void Model::backward_from_logits(const std::vector<double>& grad_logits) {
    if (grad_logits.size() != cached_probs_.size() || cached_probs_.empty()) {
        throw ShapeError("model backward: expected one gradient per row of the last forward");
    }
    Tensor g({grad_logits.size(), 1});
    g.data = grad_logits;
    Tensor gx = head_->backward(g);
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
        gx = (*it)->backward(gx);
    }
}

void Model::backward_from_probs(const std::vector<double>& grad_probs) {
    if (grad_probs.size() != cached_probs_.size() || cached_probs_.empty()) {
        throw ShapeError("model backward: expected one gradient per row of the last forward");
    }
    std::vector<double> grad_logits(grad_probs.size());
    for (std::size_t i = 0; i < grad_probs.size(); ++i) {
        const double p = cached_probs_[i];
        grad_logits[i] = grad_probs[i] * p * (1.0 - p);
    }
    backward_from_logits(grad_logits);
}

std::vector<Param*> Model::params() {
    std::vector<Param*> out;
    for (auto& stage : stages_) stage->collect_params(out);
    head_->collect_params(out);
    return out;
}

void Model::zero_grad() {
    for (Param* p : params()) p->value.zero_grad();
}

std::size_t Model::parameter_count() {
    std::size_t n = 0;
    for (Param* p : params()) n += p->value.size();
    return n;
}

void Model::zero_params() {
    for (Param* p : params()) {
        std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    }
}

std::map<std::string, nn::Tensor> Model::state() {
    std::map<std::string, nn::Tensor> st;
    for (Param* p : params()) {
        Tensor copy(p->value.shape);
        copy.data = p->value.data;
        st.emplace(p->name, std::move(copy));
    }
    std::map<std::string, std::vector<double>*> extra;
    for (auto& stage : stages_) stage->collect_state(extra);
    head_->collect_state(extra);
    for (const auto& [name, vec] : extra) {
        st.emplace(name, Tensor({vec->size()}, *vec));
    }
    return st;
}

void Model::load_state(const std::map<std::string, nn::Tensor>& st) {
    std::size_t consumed = 0;
    for (Param* p : params()) {
        auto it = st.find(p->name);
        if (it == st.end()) throw DataError("load_state: missing tensor " + p->name);
        if (it->second.shape != p->value.shape) {
            throw DataError("load_state: shape mismatch for " + p->name);
        }
        p->value.data = it->second.data;
        ++consumed;
    }
    std::map<std::string, std::vector<double>*> extra;
    for (auto& stage : stages_) stage->collect_state(extra);
    head_->collect_state(extra);
    for (auto& [name, vec] : extra) {
        auto it = st.find(name);
        if (it == st.end()) throw DataError("load_state: missing tensor " + name);
        if (it->second.size() != vec->size()) {
            throw DataError("load_state: size mismatch for " + name);
        }
        *vec = it->second.data;
        ++consumed;
    }
    if (consumed != st.size()) {
        throw DataError("load_state: state holds " + std::to_string(st.size()) +
                        " tensors, model expects " + std::to_string(consumed));
    }
}

std::pair<std::vector<double>, std::vector<int>> predict(Model& model,
                                                         const data::Dataset& data,
                                                         double threshold,
                                                         std::size_t batch_size) {
    if (model.mode() != Mode::kEval) {
        throw Error("predict: model must be in eval mode");
    }
    if (batch_size == 0) throw ConfigError("predict: batch size must be positive");

    std::vector<double> scores;
    scores.reserve(data.size());
    std::vector<std::size_t> chunk;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t end = std::min(data.size(), start + batch_size);
        chunk.resize(end - start);
        for (std::size_t i = start; i < end; ++i) chunk[i - start] = i;
        auto [x, labels] = data::make_batch(data, chunk);
        (void)labels;
        for (double p : model.forward(x)) scores.push_back(p);
    }
    return {scores, metrics::predict(scores, threshold)};
}

}  // namespace itsc::models
