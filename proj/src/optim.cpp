#include "gmner/optim.hpp"

#include "gmner/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gmner::optim {

Adam::Adam(std::vector<ad::Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    slots_.reserve(params_.size());
    for (const ad::Param* p : params_) {
        Slot s;
        s.m = Mat(p->value.rows, p->value.cols);
        s.v = Mat(p->value.rows, p->value.cols);
        slots_.push_back(std::move(s));
    }
}

void Adam::step(double lr, double grad_scale) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        ad::Param* p = params_[i];
        p->ensure_grad();
        if (p->frozen) {
            p->grad.zero();
            continue;
        }
        Slot& s = slots_[i];
        for (size_t j = 0; j < p->value.size(); ++j) {
            const double g = p->grad.a[j] * grad_scale;
            s.m.a[j] = beta1_ * s.m.a[j] + (1.0 - beta1_) * g;
            s.v.a[j] = beta2_ * s.v.a[j] + (1.0 - beta2_) * g * g;
            const double mhat = s.m.a[j] / bc1;
            const double vhat = s.v.a[j] / bc2;
            p->value.a[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
        p->grad.zero();
    }
}

void Adam::restore(int64_t t, const std::vector<Slot>& slots) {
    if (slots.size() != slots_.size())
        throw InvalidInputError("adam restore: slot count mismatch");
    t_ = t;
    slots_ = slots;
}

double warmup_linear_lr(double peak_lr, int64_t step, int64_t total_steps, double warmup_ratio) {
    const int64_t warm = std::max<int64_t>(1, static_cast<int64_t>(warmup_ratio * total_steps));
    if (step < warm) return peak_lr * static_cast<double>(step + 1) / static_cast<double>(warm);
    if (total_steps <= warm) return peak_lr;
    const double remaining = static_cast<double>(total_steps - step);
    return peak_lr * std::max(0.0, remaining / static_cast<double>(total_steps - warm));
}

} // namespace gmner::optim
