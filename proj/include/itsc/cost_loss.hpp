#pragma once

#include <optional>
#include <vector>

namespace itsc::cost {

/// Adaptive per-batch weighting state. lambda_minority scales the loss of
/// positive (minority) instances; lambda_majority is fixed at 1. With defined
/// batch statistics, lambda_minority stays within [ir/e, ir].
struct LambdaState {
    double ir_overall = 1.0;
    std::optional<double> gmean_batch;  // empty when the batch had one class
    double acc_batch = 0.0;
    double lambda_minority = 1.0;
    double lambda_majority = 1.0;
};

/// Recomputes lambda from the global imbalance ratio and the current batch's
/// gmean/accuracy. An undefined gmean counts as 0 (the most protective
/// weight). The result is a plain value: no gradient flows through it.
LambdaState update_lambda(double ir_overall, std::optional<double> gmean_batch,
                          double acc_batch);

/// Cross-entropy of one instance with independent class weights. prob is
/// clamped to [1e-12, 1 - 1e-12] before the logarithm.
double weighted_bce(double prob, int label, double lambda_pos, double lambda_neg);
double weighted_bce(double prob, int label, const LambdaState& s);

/// Sum of the per-class means of per-instance losses. A class absent from
/// the batch contributes zero; throws if the batch is empty.
double class_balanced_loss(const std::vector<double>& losses, const std::vector<int>& labels);

/// d(class_balanced_loss of weighted_bce of sigmoid)/d(logit), per instance.
/// label 1: lambda_pos * (prob - 1) / n_pos; label 0: lambda_neg * prob / n_neg.
std::vector<double> loss_gradient(const std::vector<double>& probs,
                                  const std::vector<int>& labels, double lambda_pos,
                                  double lambda_neg);
std::vector<double> loss_gradient(const std::vector<double>& probs,
                                  const std::vector<int>& labels, const LambdaState& s);

/// Plain unweighted binary cross-entropy, averaged over the batch, and its
/// logit gradient (prob - label)/n. pos_weight scales positive instances;
/// 1 gives the standard mean.
double weighted_mean_bce(const std::vector<double>& probs, const std::vector<int>& labels,
                         double pos_weight);
std::vector<double> weighted_mean_bce_gradient(const std::vector<double>& probs,
                                               const std::vector<int>& labels,
                                               double pos_weight);

/// Fixed misclassification costs: 1 on the diagonal, ir off it.
struct CostMatrix {
    double c[2][2];
};

CostMatrix fixed_cost_matrix(double ir);

/// Expected risk of predicting each class given posteriors P(j|S):
/// R(i|S) = sum_j P(j|S) * C[j][i].
std::pair<double, double> expected_risk(const std::pair<double, double>& posteriors,
                                        const CostMatrix& cost);

}  // namespace itsc::cost
