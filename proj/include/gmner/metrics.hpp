#pragma once

#include "gmner/core.hpp"
#include "gmner/heads.hpp"

#include <map>
#include <string>
#include <vector>

namespace gmner::metrics {

enum class Task { GMNER, MNER, EEG };

const char* task_name(Task t);

/// A prediction prepared for scoring: the region is resolved to either the
/// ungroundable label or a concrete box (never a candidate index).
struct ScoredPrediction {
    Quadruple quad;
    double confidence = 0.0;
};

/// Resolves a decoded prediction against its example's candidate list.
ScoredPrediction resolve(const heads::Prediction& pred, const Example& ex);

/// Span/type/region correctness for one (prediction, gold) pair. Region
/// correctness holds when both sides are ungroundable or when the predicted
/// box clears IoU > 0.5 against at least one gold box (strict inequality).
bool correctness(const ScoredPrediction& pred, const Quadruple& gold, Task task);

struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long correct = 0;
    long predict = 0;
    long gold = 0;
};

MetricReport from_counts(long correct, long predict, long gold);

/// Micro-averaged corpus scores. Within an example, predictions pair with
/// gold one-to-one: in descending confidence order each prediction claims the
/// first still-unmatched gold it is correct against.
MetricReport score(const std::vector<std::vector<ScoredPrediction>>& predictions,
                   const std::vector<std::vector<Quadruple>>& golds, Task task);

/// Same scoring restricted per entity type, plus the overall row under "All".
std::map<std::string, MetricReport> per_type_report(
    const std::vector<std::vector<ScoredPrediction>>& predictions,
    const std::vector<std::vector<Quadruple>>& golds, Task task, const TypeSchema& schema);

} // namespace gmner::metrics
