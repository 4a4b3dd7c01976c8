#pragma once

#include "gmner/matching.hpp"
#include "gmner/metrics.hpp"
#include "gmner/model.hpp"
#include "gmner/optim.hpp"

#include <map>
#include <string>
#include <vector>

namespace gmner::train {

struct EpochLog {
    double mean_loss = 0.0;
    double dev_f1 = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> history;
    double best_f1 = 0.0;
    int best_epoch = -1;
};

/// Prepared training targets for one example.
struct TrainTargets {
    std::vector<matching::GoldEntry> gold;
};

/// Precomputes gold region targets; throws CapacityError naming the offending
/// example when its gold set exceeds u.
std::vector<TrainTargets> prepare_targets(const std::vector<Example>& data, const RunConfig& cfg);

/// Loss over one example: forward, match (or fixed order when the bipartite
/// matching loss is ablated), backward. Returns the scalar loss.
double train_step_example(Model& model, ad::Graph& g, const Example& ex,
                          const TrainTargets& targets);

/// Full training loop: epoch shuffling, warmup/decay schedule, encoder
/// freezing for the first freeze_epochs, per-epoch dev scoring, best-dev
/// checkpointing to cfg.checkpoint_path (when nonempty).
TrainResult run_training(Model& model, const std::vector<Example>& train_set,
                         const std::vector<Example>& dev_set, bool verbose);

struct EvalOutputs {
    std::map<metrics::Task, metrics::MetricReport> tasks;
    std::map<metrics::Task, std::map<std::string, metrics::MetricReport>> per_type;
    std::vector<std::vector<heads::Prediction>> predictions;
};

EvalOutputs evaluate(Model& model, const std::vector<Example>& dataset, bool per_type);

double dev_gmner_f1(Model& model, const std::vector<Example>& dataset);

std::string report_to_json(const EvalOutputs& outputs, bool include_per_type);

} // namespace gmner::train
