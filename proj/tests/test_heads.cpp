#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gmner/heads.hpp"

#include <cmath>
#include <set>
#include <tuple>

using namespace gmner;

namespace {

struct Setup {
    ParamStore store;
    heads::HeadParams hp;

    explicit Setup(int h, bool zero = false) {
        hp = heads::make_heads(store, h);
        Rng rng(31);
        for (const auto& p : store.all()) {
            if (zero)
                p->value.zero();
            else
                for (double& x : p->value.a) x = rng.normal(0.0, 0.3);
            p->zero_grad();
        }
    }
};

Mat random_mat(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (double& x : m.a) x = rng.normal();
    return m;
}

bool in_unit_interval(const Mat& m) {
    for (double x : m.a)
        if (!(x > 0.0 && x < 1.0)) return false;
    return true;
}

} // namespace

TEST_CASE("head output shapes and ranges") {
    Setup s(16);
    Rng rng(1);
    ad::Graph g;
    ad::Node hq = g.constant(random_mat(4, 16, rng));
    ad::Node ht = g.constant(random_mat(6, 16, rng));
    ad::Node hv = g.constant(random_mat(4, 16, rng));
    const heads::BundleNodes b = heads::run_heads(g, hq, ht, hv, s.hp);
    CHECK(b.ps.rows() == 4);
    CHECK(b.ps.cols() == 6);
    CHECK(b.pe.rows() == 4);
    CHECK(b.pr.rows() == 4);
    CHECK(b.pr.cols() == 4);
    CHECK(b.pc.rows() == 4);
    CHECK(b.pc.cols() == 1);
    CHECK(in_unit_interval(b.ps.value()));
    CHECK(in_unit_interval(b.pe.value()));
    CHECK(in_unit_interval(b.pr.value()));
    CHECK(in_unit_interval(b.pc.value()));
}

TEST_CASE("zero parameters produce the constant 0.5") {
    Setup s(16, /*zero=*/true);
    Rng rng(2);
    ad::Graph g;
    ad::Node hq = g.constant(random_mat(4, 16, rng));
    ad::Node ht = g.constant(random_mat(6, 16, rng));
    ad::Node hv = g.constant(random_mat(5, 16, rng));
    const heads::BundleNodes b = heads::run_heads(g, hq, ht, hv, s.hp);
    for (double x : b.ps.value().a) CHECK(x == 0.5);
    for (double x : b.pe.value().a) CHECK(x == 0.5);
    for (double x : b.pr.value().a) CHECK(x == 0.5);
    for (double x : b.pc.value().a) CHECK(x == 0.5);
}

TEST_CASE("duplicated text token duplicates its probability column") {
    Setup s(16);
    Rng rng(3);
    Mat ht(5, 16);
    for (double& x : ht.a) x = rng.normal();
    for (int j = 0; j < 16; ++j) ht.at(4, j) = ht.at(1, j); // token 4 duplicates token 1
    ad::Graph g;
    const auto [ps, pe] = heads::span_head(g, g.constant(random_mat(3, 16, rng)), g.constant(ht), s.hp);
    for (int q = 0; q < 3; ++q) {
        CHECK(ps.value().at(q, 1) == ps.value().at(q, 4));
        CHECK(pe.value().at(q, 1) == pe.value().at(q, 4));
    }
}

TEST_CASE("permuting region rows permutes region probability columns") {
    Setup s(16);
    Rng rng(4);
    const Mat hq = random_mat(3, 16, rng);
    Mat hv = random_mat(5, 16, rng);

    ad::Graph g;
    const Mat before = heads::region_head(g, g.constant(hq), g.constant(hv), s.hp).value();
    // swap region rows 2 and 4 (candidate rows; row 0 is the ungroundable slot)
    for (int j = 0; j < 16; ++j) std::swap(hv.at(2, j), hv.at(4, j));
    ad::Graph g2;
    const Mat after = heads::region_head(g2, g.constant(hq), g2.constant(hv), s.hp).value();
    for (int q = 0; q < 3; ++q) {
        CHECK(before.at(q, 2) == after.at(q, 4));
        CHECK(before.at(q, 4) == after.at(q, 2));
        CHECK(before.at(q, 0) == after.at(q, 0));
    }
}

TEST_CASE("existence gradient reaches the probability matrices") {
    Setup s(8);
    Rng rng(5);
    ad::Param ps_in, pe_in, pr_in;
    auto fill_prob = [&](ad::Param& p, int r, int c, const char* name) {
        p.name = name;
        p.value = Mat(r, c);
        for (double& x : p.value.a) x = 0.2 + 0.6 * rng.uniform();
        p.zero_grad();
    };
    fill_prob(ps_in, 3, 5, "ps");
    fill_prob(pe_in, 3, 5, "pe");
    fill_prob(pr_in, 3, 4, "pr");

    ad::Graph g;
    ad::Node hq = g.constant(random_mat(3, 8, rng));
    ad::Node ht = g.constant(random_mat(5, 8, rng));
    ad::Node hv = g.constant(random_mat(4, 8, rng));
    ad::Node pc = heads::class_head(g, hq, ht, hv, g.param(ps_in), g.param(pe_in), g.param(pr_in), s.hp);
    g.backward(g.sum_all(pc));

    auto grad_norm = [](const ad::Param& p) {
        double n = 0.0;
        for (double x : p.grad.a) n += std::fabs(x);
        return n;
    };
    CHECK(grad_norm(ps_in) > 0.0);
    CHECK(grad_norm(pe_in) > 0.0);
    CHECK(grad_norm(pr_in) > 0.0);
}

namespace {
heads::PredictionBundle make_bundle(int u, int n, int k) {
    heads::PredictionBundle b;
    b.ps = Mat(u, n);
    b.pe = Mat(u, n);
    b.pr = Mat(u, k + 1);
    b.pc = Mat(u, 1);
    std::fill(b.ps.a.begin(), b.ps.a.end(), 0.1);
    std::fill(b.pe.a.begin(), b.pe.a.end(), 0.1);
    std::fill(b.pr.a.begin(), b.pr.a.end(), 0.1);
    std::fill(b.pc.a.begin(), b.pc.a.end(), 0.1);
    return b;
}
} // namespace

TEST_CASE("decode: empty when existence stays below the threshold") {
    const heads::PredictionBundle b = make_bundle(3, 5, 3);
    CHECK(heads::decode(b, {0, 1, 0}, 0.5).empty());
}

TEST_CASE("decode: direct argmax readout") {
    heads::PredictionBundle b = make_bundle(1, 6, 3);
    b.pc.at(0, 0) = 0.9;
    b.ps.at(0, 2) = 0.8;
    b.pe.at(0, 4) = 0.8;
    b.pr.at(0, 0) = 0.9;
    const auto preds = heads::decode(b, {2}, 0.5);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].quad.start == 2);
    CHECK(preds[0].quad.end == 4);
    CHECK(preds[0].quad.type_id == 2);
    CHECK(is_ungroundable(preds[0].quad.region));
    CHECK(preds[0].confidence == 0.9);
}

TEST_CASE("decode: end is searched at or after the start") {
    heads::PredictionBundle b = make_bundle(1, 6, 2);
    b.pc.at(0, 0) = 0.9;
    b.ps.at(0, 4) = 0.9;
    b.pe.at(0, 1) = 0.99; // a tempting end before the start must be ignored
    b.pe.at(0, 5) = 0.3;
    const auto preds = heads::decode(b, {0}, 0.5);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].quad.start == 4);
    CHECK(preds[0].quad.end == 5);
}

TEST_CASE("decode: duplicates collapse to the highest confidence") {
    heads::PredictionBundle b = make_bundle(2, 4, 2);
    for (int q = 0; q < 2; ++q) {
        b.ps.at(q, 1) = 0.9;
        b.pe.at(q, 2) = 0.9;
        b.pr.at(q, 2) = 0.9;
    }
    b.pc.at(0, 0) = 0.6;
    b.pc.at(1, 0) = 0.8;
    const auto preds = heads::decode(b, {0, 0}, 0.5);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].confidence == 0.8);
    CHECK(preds[0].query == 1);
}

TEST_CASE("decode: raising the threshold never grows the set") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        heads::PredictionBundle b = make_bundle(6, 8, 4);
        for (double& x : b.ps.a) x = rng.uniform(0.01, 0.99);
        for (double& x : b.pe.a) x = rng.uniform(0.01, 0.99);
        for (double& x : b.pr.a) x = rng.uniform(0.01, 0.99);
        for (double& x : b.pc.a) x = rng.uniform(0.01, 0.99);
        const std::vector<int> types = {0, 1, 0, 1, 0, 1};
        size_t prev = heads::decode(b, types, 0.05).size();
        for (double tau : {0.2, 0.4, 0.6, 0.8, 0.95}) {
            const size_t cur = heads::decode(b, types, tau).size();
            CHECK(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("decode is invariant under joint query/type permutation") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        heads::PredictionBundle b = make_bundle(5, 6, 3);
        for (double& x : b.ps.a) x = rng.uniform(0.01, 0.99);
        for (double& x : b.pe.a) x = rng.uniform(0.01, 0.99);
        for (double& x : b.pr.a) x = rng.uniform(0.01, 0.99);
        for (double& x : b.pc.a) x = rng.uniform(0.01, 0.99);
        const std::vector<int> types = {0, 1, 2, 0, 1};

        std::vector<int> perm = {0, 1, 2, 3, 4};
        rng.shuffle(perm);
        heads::PredictionBundle pb = b;
        std::vector<int> ptypes(5);
        for (int i = 0; i < 5; ++i) {
            ptypes[i] = types[perm[i]];
            for (int j = 0; j < 6; ++j) {
                pb.ps.at(i, j) = b.ps.at(perm[i], j);
                pb.pe.at(i, j) = b.pe.at(perm[i], j);
            }
            for (int j = 0; j < 4; ++j) pb.pr.at(i, j) = b.pr.at(perm[i], j);
            pb.pc.at(i, 0) = b.pc.at(perm[i], 0);
        }

        auto as_set = [](const std::vector<heads::Prediction>& preds) {
            std::set<std::tuple<int, int, int, int>> s;
            for (const auto& p : preds) {
                int region = 0;
                if (const auto* ci = std::get_if<CandidateIndex>(&p.quad.region)) region = ci->index;
                s.emplace(p.quad.start, p.quad.end, p.quad.type_id, region);
            }
            return s;
        };
        CHECK(as_set(heads::decode(b, types, 0.4)) == as_set(heads::decode(pb, ptypes, 0.4)));
    }
}

TEST_CASE("decode: argmax ties break to the lowest index") {
    heads::PredictionBundle b = make_bundle(1, 4, 2);
    b.pc.at(0, 0) = 0.9;
    // everything flat: start 0, end 0, region 0
    const auto preds = heads::decode(b, {0}, 0.5);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].quad.start == 0);
    CHECK(preds[0].quad.end == 0);
    CHECK(is_ungroundable(preds[0].quad.region));
}
