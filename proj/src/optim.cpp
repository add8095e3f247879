#include "trendkern/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trendkern::num {

void LrSchedule::validate() const {
    if (lr0 <= 0.0) throw std::invalid_argument("LrSchedule: lr must be > 0");
    if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("LrSchedule: lr_decay_gamma must be in (0, 1]");
    if (decay_interval < 1) throw std::invalid_argument("LrSchedule: lr_decay_interval must be >= 1");
}

double lr_at_epoch(const LrSchedule& schedule, int epoch) {
    if (epoch < 1) throw std::invalid_argument("lr_at_epoch: epochs are 1-based");
    if (!schedule.enabled) return schedule.lr0;
    const int steps = (epoch - 1) / schedule.decay_interval;
    return schedule.lr0 * std::pow(schedule.gamma, steps);
}

AdamState make_adam_state(const std::vector<const Tensor*>& params, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    state.first_moment.reserve(params.size());
    state.second_moment.reserve(params.size());
    for (const Tensor* p : params) {
        state.first_moment.push_back(Tensor::zeros(p->shape()));
        state.second_moment.push_back(Tensor::zeros(p->shape()));
    }
    return state;
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    }
    state.step_count += 1;
    const double bias1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.step_count));
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& w = *params[p];
        const Tensor& g = *grads[p];
        Tensor& m = state.first_moment[p];
        Tensor& v = state.second_moment[p];
        if (!w.same_shape(g) || !w.same_shape(m)) {
            throw std::invalid_argument("adam_step: shape mismatch at parameter " + std::to_string(p) + ": " +
                                        shape_str(w.shape()) + " vs " + shape_str(g.shape()));
        }
        for (size_t i = 0; i < w.numel(); ++i) {
            const double gi = g.data()[i];
            if (!std::isfinite(gi)) {
                throw std::runtime_error("adam_step: non-finite gradient at parameter " + std::to_string(p));
            }
            m.data()[i] = AdamState::kBeta1 * m.data()[i] + (1.0 - AdamState::kBeta1) * gi;
            v.data()[i] = AdamState::kBeta2 * v.data()[i] + (1.0 - AdamState::kBeta2) * gi * gi;
            const double m_hat = m.data()[i] / bias1;
            const double v_hat = v.data()[i] / bias2;
            w.data()[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
        }
    }
}

}  // namespace trendkern::num
