#include "itsc/adam.hpp"

#include <cmath>

#include "itsc/common.hpp"

namespace itsc::nn {

void adam_step(Param& p, const AdamConfig& cfg) {
    const std::size_t n = p.value.size();
    if (p.value.grad.size() != n) {
        throw ShapeError("adam_step: parameter " + p.name + " has no gradient buffer");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p.value.grad[i])) {
            throw NumericError("adam_step: non-finite gradient in " + p.name);
        }
    }

    p.step_count += 1;
    const double t = static_cast<double>(p.step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    for (std::size_t i = 0; i < n; ++i) {
        const double g = p.value.grad[i];
        p.first_moment[i] = cfg.beta1 * p.first_moment[i] + (1.0 - cfg.beta1) * g;
        p.second_moment[i] = cfg.beta2 * p.second_moment[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = p.first_moment[i] / bc1;
        const double v_hat = p.second_moment[i] / bc2;
        p.value.data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

void adam_step_all(std::vector<Param*>& params, const AdamConfig& cfg) {
    for (Param* p : params) adam_step(*p, cfg);
}

}  // namespace itsc::nn
