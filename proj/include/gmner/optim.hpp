#pragma once

#include "gmner/autodiff.hpp"

#include <cstdint>
#include <vector>

namespace gmner::optim {

/// Adam over a fixed parameter list. Frozen parameters are skipped entirely:
/// no value update and no moment update, so they stay bit-identical for as
/// long as the freeze lasts.
class Adam {
public:
    explicit Adam(std::vector<ad::Param*> params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    /// One update from the accumulated gradients, which are scaled by
    /// grad_scale (1/batch) and then cleared.
    void step(double lr, double grad_scale);

    int64_t steps() const { return t_; }
    const std::vector<ad::Param*>& params() const { return params_; }

    struct Slot {
        Mat m, v;
    };
    const std::vector<Slot>& slots() const { return slots_; }
    void restore(int64_t t, const std::vector<Slot>& slots);

private:
    std::vector<ad::Param*> params_;
    std::vector<Slot> slots_;
    int64_t t_ = 0;
    double beta1_, beta2_, eps_;
};

/// Linear warmup to the peak rate, then linear decay to zero over the rest of
/// training. `step` counts from 0.
double warmup_linear_lr(double peak_lr, int64_t step, int64_t total_steps, double warmup_ratio);

} // namespace gmner::optim
