#pragma once

#include <vector>

#include "trendkern/tensor.hpp"

namespace trendkern::num {

/// Step decay: lr0 * gamma^floor((epoch-1)/decay_interval), epochs 1-based.
struct LrSchedule {
    double lr0 = 0.001;
    int decay_interval = 10;
    double gamma = 0.1;
    bool enabled = true;

    void validate() const;
    bool operator==(const LrSchedule&) const = default;
};

double lr_at_epoch(const LrSchedule& schedule, int epoch);

/// Adam with fixed (beta1, beta2, eps) = (0.9, 0.999, 1e-8) and bias
/// correction. The learning rate is owned by the state and set per epoch.
struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    long step_count = 0;
    double learning_rate = 0.001;
};

AdamState make_adam_state(const std::vector<const Tensor*>& params, double learning_rate);

/// One bias-corrected update in place. Shapes must match the state;
/// any non-finite gradient aborts with a diagnostic.
void adam_step(AdamState& state, const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

}  // namespace trendkern::num
