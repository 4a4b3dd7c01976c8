#pragma once

#include "gmner/core.hpp"
#include "gmner/heads.hpp"

#include <optional>
#include <vector>

namespace gmner::matching {

/// One gold entity prepared for training: the quadruple plus the active rows
/// of its region-target vector (columns of the region probability matrix).
struct GoldEntry {
    Quadruple quad;
    std::vector<int> region_rows;
};

/// Padded gold list: exactly m real entries, the rest null labels.
using PaddedEntry = std::optional<GoldEntry>;
using PaddedGold = std::vector<PaddedEntry>;

enum class PadMode {
    NullLabels, ///< gold entries first, then null labels
    Duplicate,  ///< cycle the gold entries until the list reaches u
};

/// Builds a GoldEntry by mapping the gold region onto candidate indices.
GoldEntry make_gold_entry(const Quadruple& gold, const std::vector<CandidateRegion>& regions,
                          double iou_threshold);

/// Throws CapacityError when the gold set exceeds the query budget u.
PaddedGold pad_gold(const std::vector<GoldEntry>& gold, int u, PadMode mode = PadMode::NullLabels);

/// Cross-type assignments get this additive penalty so any all-compatible
/// assignment is cheaper than any incompatible one (valid while u < M/4).
constexpr double kTypeMismatchPenalty = 1e4;

/// Raw-probability matching cost: 0 for null labels, the penalty band for a
/// type mismatch, otherwise -(pc + ps[start] + pe[end] + mean pr[targets]).
double pair_cost(const PaddedEntry& entry, int q, const heads::PredictionBundle& bundle,
                 const std::vector<int>& type_of);

/// Log-space cost whose per-pair terms equal the training loss terms exactly;
/// under this cost the solved assignment minimizes the total loss itself.
double pair_cost_log(const PaddedEntry& entry, int q, const heads::PredictionBundle& bundle,
                     const std::vector<int>& type_of);

Mat build_cost_matrix(const PaddedGold& padded, const heads::PredictionBundle& bundle,
                      const std::vector<int>& type_of, bool log_cost = false);

struct Assignment {
    std::vector<int> query_of; ///< padded position i -> query index
    double cost = 0.0;
};

/// Exact minimum-cost assignment on a square finite matrix. Among all optimal
/// permutations, returns the lexicographically smallest (found by restricting
/// to the zero-reduced-cost graph of the optimal duals and matching rows to
/// their smallest feasible column in order).
Assignment solve_hungarian(const Mat& cost);

/// Exhaustive oracle for small sizes; lexicographically-first minimizer.
Assignment solve_brute_force(const Mat& cost);

/// Test hook: corrupt the solver output (swaps two assignments) so negative
/// controls can verify that the oracle comparison actually bites.
void set_solver_corruption_for_tests(bool on);

/// Probability clamp applied inside every log term.
constexpr double kProbClamp = 1e-7;

/// Negative log-likelihood of the padded gold under the given assignment:
/// null positions contribute -log(1 - pc), real positions add the boundary
/// terms and the mean region term.
double set_loss(const PaddedGold& padded, const heads::PredictionBundle& bundle,
                const Assignment& assignment);

/// Same terms under the identity assignment with gold sorted by
/// (start, end, type).
double fixed_order_loss(const PaddedGold& padded, const heads::PredictionBundle& bundle);

/// Training objective: set_loss plus, for every matched gold, the complement
/// terms of its rows (-log(1 - p) at non-target boundary positions and region
/// slots). The positive-only terms alone leave the off-target probabilities
/// unconstrained, so they drift toward 1 and argmax decoding collapses; the
/// complements make each matched row a proper one-hot/multi-hot target.
double training_loss(const PaddedGold& padded, const heads::PredictionBundle& bundle,
                     const Assignment& assignment, bool with_negatives = true);

/// Identity assignment over start-sorted gold, as used by fixed_order_loss.
Assignment fixed_order_assignment(const PaddedGold& padded, PaddedGold& sorted_out);

/// Differentiable versions built on the bundle's graph nodes. The assignment
/// is treated as a constant.
ad::Node set_loss_node(ad::Graph& g, const heads::BundleNodes& nodes, const PaddedGold& padded,
                       const Assignment& assignment);
ad::Node fixed_order_loss_node(ad::Graph& g, const heads::BundleNodes& nodes,
                               const PaddedGold& padded);
ad::Node training_loss_node(ad::Graph& g, const heads::BundleNodes& nodes,
                            const PaddedGold& padded, const Assignment& assignment,
                            bool with_negatives = true);
ad::Node fixed_order_training_loss_node(ad::Graph& g, const heads::BundleNodes& nodes,
                                        const PaddedGold& padded, bool with_negatives = true);

} // namespace gmner::matching
