#include "gmner/train.hpp"

#include "gmner/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace gmner::train {

std::vector<TrainTargets> prepare_targets(const std::vector<Example>& data, const RunConfig& cfg) {
    std::vector<TrainTargets> out;
    out.reserve(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        const Example& ex = data[i];
        validate_example(ex, cfg.p());
        if (static_cast<int>(ex.gold.size()) > cfg.u)
            throw CapacityError("example " + std::to_string(i) + " has " +
                                std::to_string(ex.gold.size()) + " gold entities but u=" +
                                std::to_string(cfg.u) + "; increase u");
        TrainTargets t;
        for (const Quadruple& q : ex.gold)
            t.gold.push_back(matching::make_gold_entry(q, ex.regions, cfg.iou_threshold));
        out.push_back(std::move(t));
    }
    return out;
}

double train_step_example(Model& model, ad::Graph& g, const Example& ex,
                          const TrainTargets& targets) {
    const RunConfig& cfg = model.config();
    g.clear();
    heads::BundleNodes nodes = model.forward(g, ex);
    const heads::PredictionBundle bundle = heads::bundle_values(nodes);

    const matching::PaddedGold padded = matching::pad_gold(
        targets.gold, cfg.u,
        cfg.pad_duplicate ? matching::PadMode::Duplicate : matching::PadMode::NullLabels);

    ad::Node loss;
    if (cfg.ablations.bml) {
        const Mat cost =
            matching::build_cost_matrix(padded, bundle, model.type_map(), cfg.matching_log_cost);
        const matching::Assignment assignment = matching::solve_hungarian(cost);
        loss = matching::training_loss_node(g, nodes, padded, assignment, cfg.loss_negatives);
    } else {
        loss = matching::fixed_order_training_loss_node(g, nodes, padded, cfg.loss_negatives);
    }
    g.backward(loss);
    return loss.value().a[0];
}

TrainResult run_training(Model& model, const std::vector<Example>& train_set,
                         const std::vector<Example>& dev_set, bool verbose) {
    const RunConfig& cfg = model.config();
    if (train_set.empty()) throw InvalidInputError("train: empty training set");

    const std::vector<TrainTargets> targets = prepare_targets(train_set, cfg);
    if (!dev_set.empty()) prepare_targets(dev_set, cfg);

    std::vector<ad::Param*> params;
    for (const auto& p : model.params().all()) params.push_back(p.get());
    optim::Adam adam(params);

    const int n = static_cast<int>(train_set.size());
    const int64_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const int64_t total_steps = batches_per_epoch * cfg.epochs;

    Rng shuffle_rng(cfg.seed ^ 0x7261696e5f726eULL);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    ad::Graph g;
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        model.set_encoders_frozen(epoch < cfg.freeze_epochs);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (int64_t b = 0; b < batches_per_epoch; ++b) {
            const int begin = static_cast<int>(b) * cfg.batch_size;
            const int end = std::min(n, begin + cfg.batch_size);
            for (int i = begin; i < end; ++i) {
                const int idx = order[i];
                loss_sum += train_step_example(model, g, train_set[idx], targets[idx]);
            }
            const double lr =
                optim::warmup_linear_lr(cfg.learning_rate, step, total_steps, cfg.warmup_ratio);
            adam.step(lr, 1.0 / static_cast<double>(end - begin));
            ++step;
        }

        EpochLog log;
        log.mean_loss = loss_sum / n;
        log.dev_f1 = dev_set.empty() ? 0.0 : dev_gmner_f1(model, dev_set);
        result.history.push_back(log);

        if (result.best_epoch < 0 || log.dev_f1 > result.best_f1) {
            result.best_f1 = log.dev_f1;
            result.best_epoch = epoch;
            if (!cfg.checkpoint_path.empty())
                checkpoint::save(cfg.checkpoint_path, model, &adam, epoch, &shuffle_rng,
                                 result.best_f1);
        }
        if (verbose)
            std::printf("epoch %3d  loss %9.4f  dev GMNER F1 %.4f\n", epoch, log.mean_loss,
                        log.dev_f1);
    }
    model.set_encoders_frozen(false);
    return result;
}

EvalOutputs evaluate(Model& model, const std::vector<Example>& dataset, bool per_type) {
    EvalOutputs out;
    std::vector<std::vector<metrics::ScoredPrediction>> scored(dataset.size());
    std::vector<std::vector<Quadruple>> golds(dataset.size());
    out.predictions.resize(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        out.predictions[i] = model.predict(dataset[i]);
        for (const heads::Prediction& p : out.predictions[i])
            scored[i].push_back(metrics::resolve(p, dataset[i]));
        golds[i] = dataset[i].gold;
    }
    const TypeSchema schema = model.config().schema();
    for (metrics::Task task : {metrics::Task::GMNER, metrics::Task::MNER, metrics::Task::EEG}) {
        out.tasks[task] = metrics::score(scored, golds, task);
        if (per_type) out.per_type[task] = metrics::per_type_report(scored, golds, task, schema);
    }
    return out;
}

double dev_gmner_f1(Model& model, const std::vector<Example>& dataset) {
    std::vector<std::vector<metrics::ScoredPrediction>> scored(dataset.size());
    std::vector<std::vector<Quadruple>> golds(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        for (const heads::Prediction& p : model.predict(dataset[i]))
            scored[i].push_back(metrics::resolve(p, dataset[i]));
        golds[i] = dataset[i].gold;
    }
    return metrics::score(scored, golds, metrics::Task::GMNER).f1;
}

std::string report_to_json(const EvalOutputs& outputs, bool include_per_type) {
    using nlohmann::json;
    auto row = [](const char* task, const std::string& type, const metrics::MetricReport& r) {
        return json{{"task", task},           {"type", type},
                    {"precision", r.precision}, {"recall", r.recall},
                    {"f1", r.f1},             {"correct", r.correct},
                    {"predict", r.predict},   {"gold", r.gold}};
    };
    json rows = json::array();
    for (const auto& [task, report] : outputs.tasks)
        rows.push_back(row(metrics::task_name(task), "All", report));
    if (include_per_type) {
        for (const auto& [task, table] : outputs.per_type)
            for (const auto& [type_name, report] : table)
                if (type_name != "All") rows.push_back(row(metrics::task_name(task), type_name, report));
    }
    return rows.dump(2);
}

} // namespace gmner::train
