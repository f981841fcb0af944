#include "itsc/cost_loss.hpp"

#include <algorithm>
#include <cmath>

#include "itsc/common.hpp"

namespace itsc::cost {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void require_labels(const std::vector<int>& labels) {
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw DataError("loss: labels must be 0 or 1, got " + std::to_string(y));
        }
    }
}

}  // namespace

LambdaState update_lambda(double ir_overall, std::optional<double> gmean_batch,
                          double acc_batch) {
    if (!(ir_overall > 0.0)) {
        throw ConfigError("update_lambda: imbalance ratio must be positive, got " +
                          std::to_string(ir_overall));
    }
    const double g = gmean_batch.value_or(0.0);
    if (g < 0.0 || g > 1.0 || acc_batch < 0.0 || acc_batch > 1.0) {
        throw ConfigError("update_lambda: batch statistics must lie in [0, 1]");
    }
    LambdaState s;
    s.ir_overall = ir_overall;
    s.gmean_batch = gmean_batch;
    s.acc_batch = acc_batch;
    s.lambda_minority = ir_overall * std::exp(-g / 2.0) * std::exp(-acc_batch / 2.0);
    s.lambda_majority = 1.0;
    return s;
}

double weighted_bce(double prob, int label, double lambda_pos, double lambda_neg) {
    const double p = clamp_prob(prob);
    if (label == 1) return lambda_pos * -std::log(p);
    if (label == 0) return lambda_neg * -std::log(1.0 - p);
    throw DataError("weighted_bce: label must be 0 or 1, got " + std::to_string(label));
}

double weighted_bce(double prob, int label, const LambdaState& s) {
    return weighted_bce(prob, label, s.lambda_minority, s.lambda_majority);
}

double class_balanced_loss(const std::vector<double>& losses, const std::vector<int>& labels) {
    if (losses.size() != labels.size()) {
        throw DataError("class_balanced_loss: losses and labels misaligned");
    }
    if (losses.empty()) throw DataError("class_balanced_loss: empty batch");
    require_labels(labels);

    double pos_sum = 0.0, neg_sum = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (labels[i] == 1) {
            pos_sum += losses[i];
            ++n_pos;
        } else {
            neg_sum += losses[i];
            ++n_neg;
        }
    }
    double total = 0.0;
    if (n_pos > 0) total += pos_sum / static_cast<double>(n_pos);
    if (n_neg > 0) total += neg_sum / static_cast<double>(n_neg);
    return total;
}

std::vector<double> loss_gradient(const std::vector<double>& probs,
                                  const std::vector<int>& labels, double lambda_pos,
                                  double lambda_neg) {
    if (probs.size() != labels.size()) {
        throw DataError("loss_gradient: probs and labels misaligned");
    }
    if (probs.empty()) throw DataError("loss_gradient: empty batch");
    require_labels(labels);

    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    const std::size_t n_neg = labels.size() - n_pos;

    std::vector<double> grad(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (labels[i] == 1) {
            grad[i] = lambda_pos * (probs[i] - 1.0) / static_cast<double>(n_pos);
        } else {
            grad[i] = lambda_neg * probs[i] / static_cast<double>(n_neg);
        }
    }
    return grad;
}

std::vector<double> loss_gradient(const std::vector<double>& probs,
                                  const std::vector<int>& labels, const LambdaState& s) {
    return loss_gradient(probs, labels, s.lambda_minority, s.lambda_majority);
}

double weighted_mean_bce(const std::vector<double>& probs, const std::vector<int>& labels,
                         double pos_weight) {
    if (probs.size() != labels.size()) {
        throw DataError("weighted_mean_bce: probs and labels misaligned");
    }
    if (probs.empty()) throw DataError("weighted_mean_bce: empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        sum += weighted_bce(probs[i], labels[i], pos_weight, 1.0);
    }
    return sum / static_cast<double>(probs.size());
}

std::vector<double> weighted_mean_bce_gradient(const std::vector<double>& probs,
                                               const std::vector<int>& labels,
                                               double pos_weight) {
    if (probs.size() != labels.size()) {
        throw DataError("weighted_mean_bce_gradient: probs and labels misaligned");
    }
    if (probs.empty()) throw DataError("weighted_mean_bce_gradient: empty batch");
    require_labels(labels);
    const double inv_n = 1.0 / static_cast<double>(probs.size());
    std::vector<double> grad(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double w = labels[i] == 1 ? pos_weight : 1.0;
        grad[i] = w * (probs[i] - static_cast<double>(labels[i])) * inv_n;
    }
    return grad;
}

CostMatrix fixed_cost_matrix(double ir) {
    if (!(ir > 0.0)) {
        throw ConfigError("fixed_cost_matrix: imbalance ratio must be positive");
    }
    return CostMatrix{{{1.0, ir}, {ir, 1.0}}};
}

std::pair<double, double> expected_risk(const std::pair<double, double>& posteriors,
                                        const CostMatrix& cost) {
    const double p0 = posteriors.first;
    const double p1 = posteriors.second;
    if (p0 < 0.0 || p1 < 0.0 || std::abs(p0 + p1 - 1.0) > 1e-9) {
        throw DataError("expected_risk: posteriors must be nonnegative and sum to 1");
    }
    return {p0 * cost.c[0][0] + p1 * cost.c[1][0], p0 * cost.c[0][1] + p1 * cost.c[1][1]};
}

}  // namespace itsc::cost
