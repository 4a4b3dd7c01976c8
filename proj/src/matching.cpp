// Assignment between padded gold entities and query predictions.
//
// The solver is the O(n^3) Kuhn-Munkres algorithm with potentials. A second
// pass makes the returned permutation the lexicographically smallest optimum:
// by complementary slackness, the optimal assignments are exactly the perfect
// matchings of the zero-reduced-cost graph under the optimal duals, so each
// row in order takes its smallest column for which the remaining rows can
// still be perfectly matched inside that graph.

#include "gmner/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gmner::matching {

namespace {
bool g_corrupt_solver = false;

double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

double nll(double p) { return -std::log(clamp_prob(p)); }
} // namespace

void set_solver_corruption_for_tests(bool on) { g_corrupt_solver = on; }

GoldEntry make_gold_entry(const Quadruple& gold, const std::vector<CandidateRegion>& regions,
                          double iou_threshold) {
    GoldEntry e;
    e.quad = gold;
    const std::vector<int> target = region_target(gold, regions, iou_threshold);
    for (size_t j = 0; j < target.size(); ++j)
        if (target[j]) e.region_rows.push_back(static_cast<int>(j));
    return e;
}

PaddedGold pad_gold(const std::vector<GoldEntry>& gold, int u, PadMode mode) {
    const int m = static_cast<int>(gold.size());
    if (m > u)
        throw CapacityError("pad_gold: " + std::to_string(m) + " gold entities exceed u=" +
                            std::to_string(u) + "; increase u");
    PaddedGold padded;
    padded.reserve(u);
    for (const GoldEntry& e : gold) padded.emplace_back(e);
    for (int i = m; i < u; ++i) {
        if (mode == PadMode::Duplicate && m > 0)
            padded.emplace_back(gold[(i - m) % m]);
        else
            padded.emplace_back(std::nullopt);
    }
    return padded;
}

namespace {
double region_mean_prob(const GoldEntry& e, const heads::PredictionBundle& b, int q) {
    double s = 0.0;
    for (int j : e.region_rows) s += b.pr.at(q, j);
    return s / static_cast<double>(e.region_rows.size());
}
} // namespace

double pair_cost(const PaddedEntry& entry, int q, const heads::PredictionBundle& bundle,
                 const std::vector<int>& type_of) {
    if (!entry.has_value()) return 0.0;
    const GoldEntry& e = *entry;
    if (type_of[q] != e.quad.type_id) return kTypeMismatchPenalty;
    return -(bundle.pc.at(q, 0) + bundle.ps.at(q, e.quad.start) + bundle.pe.at(q, e.quad.end) +
             region_mean_prob(e, bundle, q));
}

double pair_cost_log(const PaddedEntry& entry, int q, const heads::PredictionBundle& bundle,
                     const std::vector<int>& /*type_of*/) {
    if (!entry.has_value()) return nll(1.0 - bundle.pc.at(q, 0));
    const GoldEntry& e = *entry;
    double cost = nll(bundle.pc.at(q, 0)) + nll(bundle.ps.at(q, e.quad.start)) +
                  nll(bundle.pe.at(q, e.quad.end));
    double region = 0.0;
    for (int j : e.region_rows) region += nll(bundle.pr.at(q, j));
    return cost + region / static_cast<double>(e.region_rows.size());
}

Mat build_cost_matrix(const PaddedGold& padded, const heads::PredictionBundle& bundle,
                      const std::vector<int>& type_of, bool log_cost) {
    const int u = static_cast<int>(padded.size());
    // The penalty must dominate any feasible assignment total (bounded by 4u).
    if (4.0 * u >= kTypeMismatchPenalty)
        throw InvalidInputError("build_cost_matrix: u too large for the type mismatch penalty");
    Mat cost(u, u);
    for (int i = 0; i < u; ++i)
        for (int q = 0; q < u; ++q)
            cost.at(i, q) = log_cost ? pair_cost_log(padded[i], q, bundle, type_of)
                                     : pair_cost(padded[i], q, bundle, type_of);
    return cost;
}

namespace {

/// Kuhn-Munkres with potentials; O(n^3). Fills row->col and the optimal dual
/// variables (u_pot[i] + v_pot[j] <= cost[i][j], equality on matched edges).
void kuhn_munkres(const Mat& cost, std::vector<int>& row_to_col, std::vector<double>& u_pot,
                  std::vector<double>& v_pot) {
    const int n = cost.rows;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    row_to_col.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    u_pot.assign(n, 0.0);
    v_pot.assign(n, 0.0);
    for (int i = 1; i <= n; ++i) u_pot[i - 1] = u[i];
    for (int j = 1; j <= n; ++j) v_pot[j - 1] = v[j];
}

bool kuhn_augment(int row, const std::vector<std::vector<int>>& adj, std::vector<int>& match_l,
                  std::vector<int>& match_r, std::vector<char>& visited,
                  const std::vector<char>& fixed_col) {
    for (int j : adj[row]) {
        if (fixed_col[j] || visited[j]) continue;
        visited[j] = 1;
        if (match_r[j] == -1 || kuhn_augment(match_r[j], adj, match_l, match_r, visited, fixed_col)) {
            match_l[row] = j;
            match_r[j] = row;
            return true;
        }
    }
    return false;
}

} // namespace

Assignment solve_hungarian(const Mat& cost) {
    if (cost.rows != cost.cols || cost.rows == 0)
        throw InvalidInputError("solve_hungarian: cost matrix must be square and nonempty");
    if (!cost.all_finite())
        throw InvalidInputError("solve_hungarian: cost matrix has non-finite entries");
    const int n = cost.rows;

    std::vector<int> match_l;
    std::vector<double> u_pot, v_pot;
    kuhn_munkres(cost, match_l, u_pot, v_pot);

    // Every optimal assignment is a perfect matching of the zero-reduced-cost
    // graph for the optimal duals, so refining inside that graph keeps the
    // total cost unchanged while making the permutation lexicographically
    // smallest.
    double max_abs = 0.0;
    for (double x : cost.a) max_abs = std::max(max_abs, std::fabs(x));
    const double eps = 1e-9 * (1.0 + max_abs);

    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (cost.at(i, j) - u_pot[i] - v_pot[j] <= eps) adj[i].push_back(j);

    std::vector<int> match_r(n, -1);
    for (int i = 0; i < n; ++i) match_r[match_l[i]] = i;

    std::vector<char> fixed_col(n, 0);
    for (int i = 0; i < n; ++i) {
        const int current = match_l[i];
        for (int j : adj[i]) {
            if (j >= current) break;
            if (fixed_col[j]) continue;
            // Tentatively give column j to row i and try to re-match the row
            // that held it.
            const std::vector<int> saved_l = match_l;
            const std::vector<int> saved_r = match_r;
            const int displaced = match_r[j];
            match_r[match_l[i]] = -1;
            match_l[i] = j;
            match_r[j] = i;
            bool ok = true;
            if (displaced != -1) {
                std::vector<char> visited(n, 0);
                visited[j] = 1;
                ok = kuhn_augment(displaced, adj, match_l, match_r, visited, fixed_col);
            }
            if (ok) break;
            match_l = saved_l;
            match_r = saved_r;
        }
        fixed_col[match_l[i]] = 1;
    }

    Assignment a;
    a.query_of = match_l;
    a.cost = 0.0;
    for (int i = 0; i < n; ++i) a.cost += cost.at(i, a.query_of[i]);

    if (g_corrupt_solver && n >= 2) std::swap(a.query_of[0], a.query_of[1]);
    return a;
}

Assignment solve_brute_force(const Mat& cost) {
    if (cost.rows != cost.cols || cost.rows == 0)
        throw InvalidInputError("solve_brute_force: cost matrix must be square and nonempty");
    if (!cost.all_finite())
        throw InvalidInputError("solve_brute_force: cost matrix has non-finite entries");
    const int n = cost.rows;
    if (n > 10) throw InvalidInputError("solve_brute_force: size too large for enumeration");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Assignment best;
    best.cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += cost.at(i, perm[i]);
        if (c < best.cost) {
            best.cost = c;
            best.query_of = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double set_loss(const PaddedGold& padded, const heads::PredictionBundle& bundle,
                const Assignment& assignment) {
    double loss = 0.0;
    for (size_t i = 0; i < padded.size(); ++i) {
        const int q = assignment.query_of[i];
        if (!padded[i].has_value()) {
            loss += nll(1.0 - bundle.pc.at(q, 0));
            continue;
        }
        const GoldEntry& e = *padded[i];
        loss += nll(bundle.pc.at(q, 0));
        loss += nll(bundle.ps.at(q, e.quad.start));
        loss += nll(bundle.pe.at(q, e.quad.end));
        double region = 0.0;
        for (int j : e.region_rows) region += nll(bundle.pr.at(q, j));
        loss += region / static_cast<double>(e.region_rows.size());
    }
    return loss;
}

double training_loss(const PaddedGold& padded, const heads::PredictionBundle& bundle,
                     const Assignment& assignment, bool with_negatives) {
    double loss = set_loss(padded, bundle, assignment);
    if (!with_negatives) return loss;
    const int n = bundle.n();
    const int kp1 = bundle.k_plus_1();
    for (size_t i = 0; i < padded.size(); ++i) {
        if (!padded[i].has_value()) continue;
        const int q = assignment.query_of[i];
        const GoldEntry& e = *padded[i];
        if (n > 1) {
            double s = 0.0, en = 0.0;
            for (int pos = 0; pos < n; ++pos) {
                if (pos != e.quad.start) s += nll(1.0 - bundle.ps.at(q, pos));
                if (pos != e.quad.end) en += nll(1.0 - bundle.pe.at(q, pos));
            }
            loss += (s + en) / static_cast<double>(n - 1);
        }
        const int inactive = kp1 - static_cast<int>(e.region_rows.size());
        if (inactive > 0) {
            double r = 0.0;
            for (int j = 0; j < kp1; ++j) {
                bool active = false;
                for (int rr : e.region_rows) active = active || rr == j;
                if (!active) r += nll(1.0 - bundle.pr.at(q, j));
            }
            loss += r / static_cast<double>(inactive);
        }
    }
    return loss;
}

Assignment fixed_order_assignment(const PaddedGold& padded, PaddedGold& sorted_out) {
    sorted_out = padded;
    std::stable_sort(sorted_out.begin(), sorted_out.end(),
                     [](const PaddedEntry& a, const PaddedEntry& b) {
                         if (!a.has_value() || !b.has_value()) return a.has_value() && !b.has_value();
                         const Quadruple& qa = a->quad;
                         const Quadruple& qb = b->quad;
                         if (qa.start != qb.start) return qa.start < qb.start;
                         if (qa.end != qb.end) return qa.end < qb.end;
                         return qa.type_id < qb.type_id;
                     });
    Assignment a;
    a.query_of.resize(padded.size());
    std::iota(a.query_of.begin(), a.query_of.end(), 0);
    return a;
}

double fixed_order_loss(const PaddedGold& padded, const heads::PredictionBundle& bundle) {
    PaddedGold sorted;
    const Assignment identity = fixed_order_assignment(padded, sorted);
    return set_loss(sorted, bundle, identity);
}

namespace {

struct LossTerms {
    std::vector<std::pair<int, int>> s_entries, e_entries, r_entries;
    std::vector<double> r_weights;
    std::vector<std::pair<int, int>> c_pos, c_neg;
    // complement terms (-log(1-p)) over the matched rows' non-target slots,
    // averaged per row so they balance the positive term one-to-one
    std::vector<std::pair<int, int>> s_neg, e_neg, r_neg;
    std::vector<double> s_neg_w, e_neg_w, r_neg_w;
};

LossTerms build_terms(const PaddedGold& padded, const Assignment& assignment,
                      bool with_negatives = false, int n = 0, int k_plus_1 = 0) {
    LossTerms t;
    for (size_t i = 0; i < padded.size(); ++i) {
        const int q = assignment.query_of[i];
        if (!padded[i].has_value()) {
            t.c_neg.emplace_back(q, 0);
            continue;
        }
        const GoldEntry& e = *padded[i];
        t.c_pos.emplace_back(q, 0);
        t.s_entries.emplace_back(q, e.quad.start);
        t.e_entries.emplace_back(q, e.quad.end);
        const double w = 1.0 / static_cast<double>(e.region_rows.size());
        for (int j : e.region_rows) {
            t.r_entries.emplace_back(q, j);
            t.r_weights.push_back(w);
        }
        if (with_negatives) {
            if (n > 1) {
                const double sw = 1.0 / static_cast<double>(n - 1);
                for (int pos = 0; pos < n; ++pos) {
                    if (pos != e.quad.start) {
                        t.s_neg.emplace_back(q, pos);
                        t.s_neg_w.push_back(sw);
                    }
                    if (pos != e.quad.end) {
                        t.e_neg.emplace_back(q, pos);
                        t.e_neg_w.push_back(sw);
                    }
                }
            }
            const int inactive = k_plus_1 - static_cast<int>(e.region_rows.size());
            if (inactive > 0) {
                const double rw = 1.0 / static_cast<double>(inactive);
                for (int j = 0; j < k_plus_1; ++j) {
                    bool active = false;
                    for (int r : e.region_rows) active = active || r == j;
                    if (!active) {
                        t.r_neg.emplace_back(q, j);
                        t.r_neg_w.push_back(rw);
                    }
                }
            }
        }
    }
    return t;
}

ad::Node terms_to_node(ad::Graph& g, const heads::BundleNodes& nodes, const LossTerms& t) {
    const double lo = kProbClamp;
    const double hi = 1.0 - kProbClamp;
    std::vector<ad::Node> parts;

    auto nll_sum = [&](ad::Node m, const std::vector<std::pair<int, int>>& entries) {
        return g.scale(g.sum_all(g.clamped_log(g.pick(m, entries), lo, hi)), -1.0);
    };
    auto weight_column = [&](const std::vector<double>& w) {
        Mat m(static_cast<int>(w.size()), 1);
        for (size_t i = 0; i < w.size(); ++i) m.a[i] = w[i];
        return g.constant(std::move(m));
    };
    auto nll_complement_sum = [&](ad::Node m, const std::vector<std::pair<int, int>>& entries,
                                  const std::vector<double>* w) {
        Mat ones(static_cast<int>(entries.size()), 1);
        std::fill(ones.a.begin(), ones.a.end(), 1.0);
        ad::Node complement = g.add(g.constant(std::move(ones)), g.scale(g.pick(m, entries), -1.0));
        ad::Node logs = g.clamped_log(complement, lo, hi);
        if (w != nullptr) logs = g.hadamard(logs, weight_column(*w));
        return g.scale(g.sum_all(logs), -1.0);
    };

    if (!t.c_pos.empty()) parts.push_back(nll_sum(nodes.pc, t.c_pos));
    if (!t.c_neg.empty()) parts.push_back(nll_complement_sum(nodes.pc, t.c_neg, nullptr));
    if (!t.s_entries.empty()) parts.push_back(nll_sum(nodes.ps, t.s_entries));
    if (!t.e_entries.empty()) parts.push_back(nll_sum(nodes.pe, t.e_entries));
    if (!t.r_entries.empty()) {
        ad::Node logs = g.clamped_log(g.pick(nodes.pr, t.r_entries), lo, hi);
        parts.push_back(g.scale(g.sum_all(g.hadamard(logs, weight_column(t.r_weights))), -1.0));
    }
    if (!t.s_neg.empty()) parts.push_back(nll_complement_sum(nodes.ps, t.s_neg, &t.s_neg_w));
    if (!t.e_neg.empty()) parts.push_back(nll_complement_sum(nodes.pe, t.e_neg, &t.e_neg_w));
    if (!t.r_neg.empty()) parts.push_back(nll_complement_sum(nodes.pr, t.r_neg, &t.r_neg_w));

    ad::Node total = parts.front();
    for (size_t i = 1; i < parts.size(); ++i) total = g.add(total, parts[i]);
    return total;
}

} // namespace

ad::Node set_loss_node(ad::Graph& g, const heads::BundleNodes& nodes, const PaddedGold& padded,
                       const Assignment& assignment) {
    return terms_to_node(g, nodes, build_terms(padded, assignment));
}

ad::Node fixed_order_loss_node(ad::Graph& g, const heads::BundleNodes& nodes,
                               const PaddedGold& padded) {
    PaddedGold sorted;
    const Assignment identity = fixed_order_assignment(padded, sorted);
    return terms_to_node(g, nodes, build_terms(sorted, identity));
}

ad::Node training_loss_node(ad::Graph& g, const heads::BundleNodes& nodes,
                            const PaddedGold& padded, const Assignment& assignment,
                            bool with_negatives) {
    return terms_to_node(g, nodes,
                         build_terms(padded, assignment, with_negatives, nodes.ps.cols(),
                                     nodes.pr.cols()));
}

ad::Node fixed_order_training_loss_node(ad::Graph& g, const heads::BundleNodes& nodes,
                                        const PaddedGold& padded, bool with_negatives) {
    PaddedGold sorted;
    const Assignment identity = fixed_order_assignment(padded, sorted);
    return terms_to_node(g, nodes,
                         build_terms(sorted, identity, with_negatives, nodes.ps.cols(),
                                     nodes.pr.cols()));
}

} // namespace gmner::matching
