#include "gmner/metrics.hpp"

#include <algorithm>

namespace gmner::metrics {

const char* task_name(Task t) {
    switch (t) {
        case Task::GMNER: return "GMNER";
        case Task::MNER: return "MNER";
        case Task::EEG: return "EEG";
    }
    return "?";
}

ScoredPrediction resolve(const heads::Prediction& pred, const Example& ex) {
    ScoredPrediction out;
    out.quad = pred.quad;
    out.confidence = pred.confidence;
    if (const auto* ci = std::get_if<CandidateIndex>(&pred.quad.region)) {
        if (ci->index == 0) {
            out.quad.region = Ungroundable{};
        } else {
            const int r = ci->index - 1;
            if (r < 0 || r >= static_cast<int>(ex.regions.size()))
                throw InvalidInputError("resolve: candidate index out of range");
            out.quad.region = GoldBoxes{{ex.regions[r].box}};
        }
    }
    return out;
}

namespace {
bool region_correct(const RegionLabel& pred, const RegionLabel& gold) {
    const bool pred_none = is_ungroundable(pred);
    const bool gold_none = is_ungroundable(gold);
    if (pred_none || gold_none) return pred_none && gold_none;
    const auto& pb = std::get<GoldBoxes>(pred).boxes;
    const auto& gb = std::get<GoldBoxes>(gold).boxes;
    double best = 0.0;
    for (const BoundingBox& p : pb)
        for (const BoundingBox& g : gb) best = std::max(best, iou(p, g));
    return best > 0.5;
}
} // namespace

bool correctness(const ScoredPrediction& pred, const Quadruple& gold, Task task) {
    const bool ce = pred.quad.start == gold.start && pred.quad.end == gold.end;
    const bool ct = pred.quad.type_id == gold.type_id;
    switch (task) {
        case Task::MNER: return ce && ct;
        case Task::EEG: return ce && region_correct(pred.quad.region, gold.region);
        case Task::GMNER: return ce && ct && region_correct(pred.quad.region, gold.region);
    }
    return false;
}

MetricReport from_counts(long correct, long predict, long gold) {
    MetricReport r;
    r.correct = correct;
    r.predict = predict;
    r.gold = gold;
    r.precision = predict > 0 ? static_cast<double>(correct) / predict : 0.0;
    r.recall = gold > 0 ? static_cast<double>(correct) / gold : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

namespace {
long count_matches(const std::vector<ScoredPrediction>& preds, const std::vector<Quadruple>& gold,
                   Task task) {
    std::vector<int> order(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return preds[a].confidence > preds[b].confidence;
    });
    std::vector<char> taken(gold.size(), 0);
    long correct = 0;
    for (int idx : order) {
        for (size_t gi = 0; gi < gold.size(); ++gi) {
            if (taken[gi]) continue;
            if (correctness(preds[idx], gold[gi], task)) {
                taken[gi] = 1;
                ++correct;
                break;
            }
        }
    }
    return correct;
}
} // namespace

MetricReport score(const std::vector<std::vector<ScoredPrediction>>& predictions,
                   const std::vector<std::vector<Quadruple>>& golds, Task task) {
    if (predictions.size() != golds.size())
        throw InvalidInputError("score: prediction and gold lists are misaligned");
    long correct = 0, predict = 0, gold = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        correct += count_matches(predictions[i], golds[i], task);
        predict += static_cast<long>(predictions[i].size());
        gold += static_cast<long>(golds[i].size());
    }
    return from_counts(correct, predict, gold);
}

std::map<std::string, MetricReport> per_type_report(
    const std::vector<std::vector<ScoredPrediction>>& predictions,
    const std::vector<std::vector<Quadruple>>& golds, Task task, const TypeSchema& schema) {
    std::map<std::string, MetricReport> out;
    for (int t = 0; t < schema.count(); ++t) {
        std::vector<std::vector<ScoredPrediction>> p(predictions.size());
        std::vector<std::vector<Quadruple>> g(golds.size());
        for (size_t i = 0; i < predictions.size(); ++i) {
            for (const ScoredPrediction& sp : predictions[i])
                if (sp.quad.type_id == t) p[i].push_back(sp);
            for (const Quadruple& q : golds[i])
                if (q.type_id == t) g[i].push_back(q);
        }
        out[schema.names[t]] = score(p, g, task);
    }
    out["All"] = score(predictions, golds, task);
    return out;
}

} // namespace gmner::metrics
