#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gmner::selftest {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Assignment solver vs. exhaustive permutation minimum, random and tie-heavy
/// matrices, sizes 2..7. Exact cost and permutation equality.
CheckResult check_hungarian_oracle(int trials_per_size, uint64_t seed);

/// set_loss under the full pipeline is invariant to gold-list order.
CheckResult check_loss_permutation_invariance(int instances, uint64_t seed);

/// set_loss under the loss-matched assignment never exceeds the fixed-order
/// loss, and beats it strictly on a constructed adversarial instance.
CheckResult check_loss_dominance(int instances, uint64_t seed);

/// Whole-model analytic gradients vs. central finite differences on the tiny
/// configuration (h=8, u=4, p=2, n=6, k=3, single fusion layer).
CheckResult check_gradients(uint64_t seed);

/// Permuting query rows together with their type labels leaves the decoded
/// quadruple set unchanged.
CheckResult check_query_equivariance(int instances, uint64_t seed);

/// Hand-built scoring fixtures, the exact-0.5 IoU boundary, and the
/// correctness subsumption property.
CheckResult check_metric_fixtures();

struct SelfTestResult {
    std::vector<CheckResult> checks;
    bool all_pass = false;
    double seconds = 0.0;
};

/// The full property suite. With corrupt_solver set, the solver output is
/// deliberately damaged so callers can verify the oracle comparison bites.
SelfTestResult run_all(bool corrupt_solver = false);

std::string format(const SelfTestResult& r);

} // namespace gmner::selftest
