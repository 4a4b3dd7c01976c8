#include "gmner/selftest.hpp"

#include "gmner/matching.hpp"
#include "gmner/metrics.hpp"
#include "gmner/model.hpp"
#include "gmner/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gmner::selftest {

namespace {

bool region_index_of(const RegionLabel& r, int& out) {
    if (is_ungroundable(r)) {
        out = 0;
        return true;
    }
    if (const auto* ci = std::get_if<CandidateIndex>(&r)) {
        out = ci->index;
        return true;
    }
    return false;
}

heads::PredictionBundle random_bundle(int u, int n, int k, Rng& rng) {
    heads::PredictionBundle b;
    auto fill = [&](Mat& m, int rows, int cols) {
        m = Mat(rows, cols);
        for (double& x : m.a) x = 1.0 / (1.0 + std::exp(-2.0 * rng.normal()));
    };
    fill(b.ps, u, n);
    fill(b.pe, u, n);
    fill(b.pr, u, k + 1);
    fill(b.pc, u, 1);
    return b;
}

std::vector<matching::GoldEntry> random_gold(int m, int n, int k, int p, Rng& rng) {
    std::vector<matching::GoldEntry> gold;
    for (int i = 0; i < m; ++i) {
        matching::GoldEntry e;
        e.quad.start = rng.uniform_int(n);
        e.quad.end = e.quad.start + rng.uniform_int(n - e.quad.start);
        e.quad.type_id = rng.uniform_int(p);
        if (rng.uniform() < 0.3) {
            e.quad.region = Ungroundable{};
            e.region_rows = {0};
        } else {
            const int first = 1 + rng.uniform_int(k);
            e.region_rows.push_back(first);
            if (rng.uniform() < 0.3 && first < k) e.region_rows.push_back(first + 1);
            e.quad.region = GoldBoxes{{BoundingBox{0, 0, 1, 1}}};
        }
        gold.push_back(std::move(e));
    }
    return gold;
}

std::vector<int> alternating_type_map(int u, int p) {
    std::vector<int> map(u);
    for (int q = 0; q < u; ++q) map[q] = q % p;
    return map;
}

double pipeline_set_loss(const std::vector<matching::GoldEntry>& gold,
                         const heads::PredictionBundle& bundle, int u,
                         const std::vector<int>& type_map, bool log_cost) {
    const matching::PaddedGold padded = matching::pad_gold(gold, u);
    const Mat cost = matching::build_cost_matrix(padded, bundle, type_map, log_cost);
    const matching::Assignment a = matching::solve_hungarian(cost);
    return matching::set_loss(padded, bundle, a);
}

Example tiny_example(int n, int k, int feature_dim, Rng& rng) {
    Example ex;
    for (int i = 0; i < n; ++i) ex.tokens.push_back("tok" + std::to_string(rng.uniform_int(12)));
    for (int r = 0; r < k; ++r) {
        CandidateRegion region;
        region.box = BoundingBox{0.1 * r, 0.1 * r, 0.1 * r + 0.3, 0.1 * r + 0.3};
        region.feature.resize(feature_dim);
        for (double& x : region.feature) x = rng.normal();
        ex.regions.push_back(std::move(region));
    }
    return ex;
}

RunConfig tiny_config(uint64_t seed) {
    RunConfig cfg;
    cfg.h = 8;
    cfg.u = 4;
    cfg.type_names = {"A", "B"};
    cfg.k = 3;
    cfg.layers = 1;
    cfg.heads = 4;
    cfg.text_layers = 1;
    cfg.seed = seed;
    cfg.checkpoint_path.clear();
    return cfg;
}

} // namespace

CheckResult check_hungarian_oracle(int trials_per_size, uint64_t seed) {
    CheckResult res;
    res.name = "hungarian oracle";
    Rng rng(seed);
    long trials = 0;
    for (int n = 2; n <= 7; ++n) {
        for (int t = 0; t < trials_per_size; ++t) {
            Mat cost(n, n);
            const bool ties = (t % 3) == 2; // a third of the matrices are tie-heavy
            for (double& x : cost.a)
                x = ties ? static_cast<double>(rng.uniform_int(3)) : rng.uniform();
            const matching::Assignment fast = matching::solve_hungarian(cost);
            const matching::Assignment oracle = matching::solve_brute_force(cost);
            ++trials;
            if (fast.cost != oracle.cost || fast.query_of != oracle.query_of) {
                std::ostringstream d;
                d << "mismatch at n=" << n << " trial " << t << ": solver cost " << fast.cost
                  << " vs oracle " << oracle.cost;
                res.detail = d.str();
                return res;
            }
        }
    }
    res.pass = true;
    res.detail = std::to_string(trials) + " matrices, exact cost and permutation agreement";
    return res;
}

CheckResult check_loss_permutation_invariance(int instances, uint64_t seed) {
    CheckResult res;
    res.name = "loss permutation invariance";
    Rng rng(seed);
    const int u = 6, n = 8, k = 4, p = 2;
    const std::vector<int> type_map = alternating_type_map(u, p);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const heads::PredictionBundle bundle = random_bundle(u, n, k, rng);
        const int m = rng.uniform_int(5);
        std::vector<matching::GoldEntry> gold = random_gold(m, n, k, p, rng);
        const double base = pipeline_set_loss(gold, bundle, u, type_map, false);

        std::vector<int> order(gold.size());
        std::iota(order.begin(), order.end(), 0);
        int tested = 0;
        do {
            std::vector<matching::GoldEntry> permuted;
            for (int idx : order) permuted.push_back(gold[idx]);
            const double loss = pipeline_set_loss(permuted, bundle, u, type_map, false);
            worst = std::max(worst, std::fabs(loss - base));
            if (std::fabs(loss - base) > 1e-9) {
                std::ostringstream d;
                d << "instance " << inst << ": |delta| = " << std::fabs(loss - base);
                res.detail = d.str();
                return res;
            }
        } while (++tested < 24 && std::next_permutation(order.begin(), order.end()));
    }
    res.pass = true;
    std::ostringstream d;
    d << instances << " instances, max |delta| = " << worst;
    res.detail = d.str();
    return res;
}

CheckResult check_loss_dominance(int instances, uint64_t seed) {
    CheckResult res;
    res.name = "loss dominance over fixed order";
    Rng rng(seed);
    const int u = 6, n = 8, k = 4, p = 2;
    const std::vector<int> type_map = alternating_type_map(u, p);
    for (int inst = 0; inst < instances; ++inst) {
        const heads::PredictionBundle bundle = random_bundle(u, n, k, rng);
        const int m = rng.uniform_int(5);
        const std::vector<matching::GoldEntry> gold = random_gold(m, n, k, p, rng);
        const matching::PaddedGold padded = matching::pad_gold(gold, u);
        const Mat cost = matching::build_cost_matrix(padded, bundle, type_map, /*log_cost=*/true);
        const matching::Assignment a = matching::solve_hungarian(cost);
        const double optimal = matching::set_loss(padded, bundle, a);
        const double fixed = matching::fixed_order_loss(padded, bundle);
        if (optimal > fixed + 1e-12) {
            std::ostringstream d;
            d << "instance " << inst << ": set_loss " << optimal << " > fixed " << fixed;
            res.detail = d.str();
            return res;
        }
    }

    // Adversarial instance: the only gold entity fits query 1 far better than
    // query 0, but the fixed order pins it to query 0.
    heads::PredictionBundle b;
    b.ps = Mat(2, 3);
    b.pe = Mat(2, 3);
    b.pr = Mat(2, 2);
    b.pc = Mat(2, 1);
    std::fill(b.ps.a.begin(), b.ps.a.end(), 0.1);
    std::fill(b.pe.a.begin(), b.pe.a.end(), 0.1);
    std::fill(b.pr.a.begin(), b.pr.a.end(), 0.1);
    b.ps.at(1, 0) = b.pe.at(1, 0) = b.pr.at(1, 1) = 0.9;
    b.pc.at(0, 0) = 0.1;
    b.pc.at(1, 0) = 0.9;
    matching::GoldEntry g;
    g.quad = Quadruple{0, 0, 0, GoldBoxes{{BoundingBox{0, 0, 1, 1}}}};
    g.region_rows = {1};
    const matching::PaddedGold padded = matching::pad_gold({g}, 2);
    const std::vector<int> both_type0 = {0, 0};
    const Mat cost = matching::build_cost_matrix(padded, b, both_type0, true);
    const double optimal = matching::set_loss(padded, b, matching::solve_hungarian(cost));
    const double fixed = matching::fixed_order_loss(padded, b);
    if (!(optimal < fixed - 1e-6)) {
        res.detail = "adversarial instance not strictly better: " + std::to_string(optimal) +
                     " vs " + std::to_string(fixed);
        return res;
    }
    res.pass = true;
    std::ostringstream d;
    d << instances << " random instances dominated; adversarial margin " << (fixed - optimal);
    res.detail = d.str();
    return res;
}

CheckResult check_gradients(uint64_t seed) {
    CheckResult res;
    res.name = "gradient check";
    RunConfig cfg = tiny_config(seed);
    Rng rng(seed ^ 0xfeedULL);

    const int n = 6, k = 3, feature_dim = 3;
    Example ex = tiny_example(n, k, feature_dim, rng);
    ex.gold.push_back(Quadruple{1, 2, 0, GoldBoxes{{ex.regions[1].box}}});
    ex.gold.push_back(Quadruple{4, 4, 1, Ungroundable{}});

    Vocab vocab = Vocab::build({ex}, cfg.schema());
    Model model(cfg, vocab, feature_dim);

    std::vector<matching::GoldEntry> gold;
    for (const Quadruple& q : ex.gold)
        gold.push_back(matching::make_gold_entry(q, ex.regions, cfg.iou_threshold));
    const matching::PaddedGold padded = matching::pad_gold(gold, cfg.u);

    // Fix the assignment once; it is a constant of the differentiation.
    const heads::PredictionBundle bundle0 = model.forward_values(ex);
    const Mat cost = matching::build_cost_matrix(padded, bundle0, model.type_map(), false);
    const matching::Assignment assignment = matching::solve_hungarian(cost);

    ad::Graph g;
    heads::BundleNodes nodes = model.forward(g, ex);
    ad::Node loss = matching::set_loss_node(g, nodes, padded, assignment);
    model.params().zero_grads();
    g.backward(loss);

    const double delta = 1e-5;
    double max_rel = 0.0;
    std::string where;
    for (const auto& p : model.params().all()) {
        for (size_t j = 0; j < p->value.size(); ++j) {
            const double saved = p->value.a[j];
            p->value.a[j] = saved + delta;
            const double up = matching::set_loss(padded, model.forward_values(ex), assignment);
            p->value.a[j] = saved - delta;
            const double down = matching::set_loss(padded, model.forward_values(ex), assignment);
            p->value.a[j] = saved;
            const double fd = (up - down) / (2.0 * delta);
            const double an = p->grad.a[j];
            // Floor the denominator: below ~1e-5 the central difference is
            // dominated by roundoff (machine eps * |loss| / delta), so tiny
            // gradients are held to the equivalent absolute tolerance.
            const double rel = std::fabs(an - fd) / std::max({1e-5, std::fabs(an), std::fabs(fd)});
            if (rel > max_rel) {
                max_rel = rel;
                where = p->name + "[" + std::to_string(j) + "]";
            }
        }
    }
    res.pass = max_rel < 1e-4;
    std::ostringstream d;
    d << "max relative error " << max_rel << " at " << where;
    res.detail = d.str();
    return res;
}

CheckResult check_query_equivariance(int instances, uint64_t seed) {
    CheckResult res;
    res.name = "query permutation equivariance";
    Rng rng(seed);
    for (int inst = 0; inst < instances; ++inst) {
        RunConfig cfg = tiny_config(seed + inst + 1);
        cfg.u = 6;
        cfg.tau_c = 0.45 + 0.1 * rng.uniform();
        const int n = 4 + rng.uniform_int(5);
        const int feature_dim = 3;
        Example ex = tiny_example(n, cfg.k, feature_dim, rng);
        Vocab vocab = Vocab::build({ex}, cfg.schema());
        Model model(cfg, vocab, feature_dim);

        std::vector<int> perm(cfg.u);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);

        auto decode_set = [&](const std::vector<int>* p) {
            const heads::PredictionBundle bundle = model.forward_values(ex, p);
            const auto preds = heads::decode(bundle, model.type_map(p), cfg.tau_c);
            std::vector<std::tuple<int, int, int, int>> set;
            for (const auto& pr : preds) {
                int region = 0;
                region_index_of(pr.quad.region, region);
                set.emplace_back(pr.quad.start, pr.quad.end, pr.quad.type_id, region);
            }
            std::sort(set.begin(), set.end());
            return set;
        };

        if (decode_set(nullptr) != decode_set(&perm)) {
            res.detail = "decoded sets differ at instance " + std::to_string(inst);
            return res;
        }
    }
    res.pass = true;
    res.detail = std::to_string(instances) + " model/input pairs";
    return res;
}

CheckResult check_metric_fixtures() {
    CheckResult res;
    res.name = "metric fixtures";
    using metrics::Task;

    // Precision 2/3, recall 1/2, F1 4/7.
    {
        std::vector<Quadruple> gold;
        for (int i = 0; i < 4; ++i) gold.push_back(Quadruple{i, i, 0, Ungroundable{}});
        std::vector<metrics::ScoredPrediction> preds(3);
        preds[0].quad = Quadruple{0, 0, 0, Ungroundable{}};
        preds[1].quad = Quadruple{1, 1, 0, Ungroundable{}};
        preds[2].quad = Quadruple{3, 4, 0, Ungroundable{}}; // wrong span
        for (auto& p : preds) p.confidence = 0.9;
        const metrics::MetricReport r = metrics::score({preds}, {gold}, Task::GMNER);
        if (r.precision != 2.0 / 3.0 || r.recall != 0.5 || std::fabs(r.f1 - 4.0 / 7.0) > 1e-12) {
            res.detail = "P/R/F1 fixture failed";
            return res;
        }
    }

    // IoU exactly 0.5 must not count as region-correct (strict inequality).
    {
        const BoundingBox a{0, 0, 1, 1.5};
        const BoundingBox b{0, 0.5, 1, 2.0};
        if (iou(a, b) != 0.5) {
            res.detail = "exact-0.5 IoU fixture is not exact";
            return res;
        }
        metrics::ScoredPrediction pred;
        pred.quad = Quadruple{0, 1, 0, GoldBoxes{{a}}};
        const Quadruple gold{0, 1, 0, GoldBoxes{{b}}};
        if (metrics::correctness(pred, gold, Task::GMNER) ||
            metrics::correctness(pred, gold, Task::EEG) ||
            !metrics::correctness(pred, gold, Task::MNER)) {
            res.detail = "boundary IoU case mis-scored";
            return res;
        }
    }

    // GMNER-correct implies MNER-correct and EEG-correct.
    {
        Rng rng(99);
        for (int t = 0; t < 500; ++t) {
            metrics::ScoredPrediction pred;
            pred.quad.start = rng.uniform_int(4);
            pred.quad.end = pred.quad.start + rng.uniform_int(3);
            pred.quad.type_id = rng.uniform_int(3);
            Quadruple gold;
            gold.start = rng.uniform_int(4);
            gold.end = gold.start + rng.uniform_int(3);
            gold.type_id = rng.uniform_int(3);
            const double x = rng.uniform(0.0, 0.6);
            if (rng.uniform() < 0.4) {
                pred.quad.region = Ungroundable{};
            } else {
                pred.quad.region = GoldBoxes{{BoundingBox{x, 0, x + 1, 1}}};
            }
            if (rng.uniform() < 0.4) {
                gold.region = Ungroundable{};
            } else {
                gold.region = GoldBoxes{{BoundingBox{0, 0, 1, 1}}};
            }
            if (metrics::correctness(pred, gold, Task::GMNER) &&
                (!metrics::correctness(pred, gold, Task::MNER) ||
                 !metrics::correctness(pred, gold, Task::EEG))) {
                res.detail = "subsumption violated";
                return res;
            }
        }
    }

    // Duplicated predictions cannot raise the correct count.
    {
        const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}}};
        metrics::ScoredPrediction p;
        p.quad = gold[0];
        p.confidence = 0.8;
        const metrics::MetricReport r = metrics::score({{p, p}}, {gold}, Task::GMNER);
        if (r.correct != 1 || r.predict != 2 || r.precision != 0.5) {
            res.detail = "duplicate prediction fixture failed";
            return res;
        }
    }

    // Empty-denominator conventions.
    {
        const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}}};
        const metrics::MetricReport r = metrics::score({{}}, {gold}, Task::GMNER);
        if (r.precision != 0.0 || r.recall != 0.0 || r.f1 != 0.0) {
            res.detail = "empty prediction conventions failed";
            return res;
        }
    }

    res.pass = true;
    res.detail = "all fixtures reproduced";
    return res;
}

SelfTestResult run_all(bool corrupt_solver) {
    const auto t0 = std::chrono::steady_clock::now();
    matching::set_solver_corruption_for_tests(corrupt_solver);
    SelfTestResult r;
    r.checks.push_back(check_hungarian_oracle(1000, 11));
    r.checks.push_back(check_loss_permutation_invariance(200, 22));
    r.checks.push_back(check_loss_dominance(200, 33));
    r.checks.push_back(check_gradients(44));
    r.checks.push_back(check_query_equivariance(100, 55));
    r.checks.push_back(check_metric_fixtures());
    matching::set_solver_corruption_for_tests(false);
    r.all_pass = true;
    for (const CheckResult& c : r.checks) r.all_pass = r.all_pass && c.pass;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string format(const SelfTestResult& r) {
    std::ostringstream out;
    for (const CheckResult& c : r.checks)
        out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " -- " << c.detail << "\n";
    out << (r.all_pass ? "all checks passed" : "CHECKS FAILED") << " (" << r.seconds << "s)\n";
    return out.str();
}

} // namespace gmner::selftest
