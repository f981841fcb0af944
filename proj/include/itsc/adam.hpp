#pragma once

#include <vector>

#include "itsc/tensor.hpp"

namespace itsc::nn {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update on a single parameter, consuming the
/// gradient accumulated in p.value.grad. Throws NumericError on non-finite
/// gradient entries. Does not clear the gradient; call zero_grad() between
/// steps.
void adam_step(Param& p, const AdamConfig& cfg);

/// Applies adam_step to every parameter in order.
void adam_step_all(std::vector<Param*>& params, const AdamConfig& cfg);

}  // namespace itsc::nn
