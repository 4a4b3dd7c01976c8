#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gmner/queryset.hpp"

using namespace gmner;

namespace {

struct Setup {
    RunConfig cfg;
    ParamStore store;
    queryset::QuerySetParams qp;

    explicit Setup(int u, int p, int h, const std::string& layout = "tile") {
        cfg.u = u;
        cfg.h = h;
        cfg.heads = 1;
        cfg.type_names.clear();
        for (int i = 0; i < p; ++i) cfg.type_names.push_back("T" + std::to_string(i));
        cfg.query_layout = layout;
        qp = queryset::make_query_params(store, u, p, h);
        Rng rng(9);
        for (double& x : qp.type_table->value.a) x = rng.normal();
        for (double& x : qp.entity_table->value.a) x = rng.normal();
        qp.type_table->zero_grad();
        qp.entity_table->zero_grad();
    }

    Mat compose() {
        ad::Graph g;
        ad::Node type_q = g.param(*qp.type_table);
        return queryset::compose_queries(g, type_q, qp, cfg).value();
    }
};

} // namespace

TEST_CASE("type query table shapes") {
    Setup s4(4, 4, 64);
    ad::Graph g;
    encoders::TextEncoderParams unused_text;
    Vocab v;
    CHECK(queryset::build_type_queries(g, s4.qp, s4.cfg, unused_text, v).value().rows == 4);
    CHECK(queryset::build_type_queries(g, s4.qp, s4.cfg, unused_text, v).value().cols == 64);

    Setup s51(51, 51, 64);
    ad::Graph g2;
    const Mat t = queryset::build_type_queries(g2, s51.qp, s51.cfg, unused_text, v).value();
    CHECK(t.rows == 51);
    CHECK(t.cols == 64);
}

TEST_CASE("tile composition: query q = entity q + type (q mod p)") {
    Setup s(60, 4, 16);
    const Mat q = s.compose();
    CHECK(q.rows == 60);
    CHECK(q.cols == 16);
    const Mat& e = s.qp.entity_table->value;
    const Mat& t = s.qp.type_table->value;
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 16; ++j) CHECK(q.at(i, j) == e.at(i, j) + t.at(i % 4, j));
}

TEST_CASE("block composition uses q / d") {
    Setup s(8, 2, 8, "block");
    const Mat q = s.compose();
    const Mat& e = s.qp.entity_table->value;
    const Mat& t = s.qp.type_table->value;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) CHECK(q.at(i, j) == e.at(i, j) + t.at(i / 4, j));
}

TEST_CASE("identity composition at u = p with zero entity table") {
    Setup s(4, 4, 8);
    s.qp.entity_table->value.zero();
    const Mat q = s.compose();
    CHECK(q.a == s.qp.type_table->value.a);
}

TEST_CASE("u not divisible by p is a configuration error") {
    RunConfig cfg;
    cfg.u = 6;
    cfg.type_names = {"A", "B", "C", "D"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("ablations: no type part returns the entity table") {
    Setup s(8, 4, 8);
    s.cfg.ablations.ptq = false;
    const Mat q = s.compose();
    CHECK(q.a == s.qp.entity_table->value.a);
}

TEST_CASE("ablations: no entity part leaves at most p distinct rows") {
    Setup s(12, 4, 8);
    s.cfg.ablations.leq = false;
    const Mat q = s.compose();
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 8; ++j) CHECK(q.at(i, j) == s.qp.type_table->value.at(i % 4, j));
    // rows q and q+p identical
    for (int i = 0; i + 4 < 12; ++i)
        for (int j = 0; j < 8; ++j) CHECK(q.at(i, j) == q.at(i + 4, j));
}

TEST_CASE("ablating both query parts is rejected") {
    Setup s(8, 4, 8);
    s.cfg.ablations.ptq = false;
    s.cfg.ablations.leq = false;
    CHECK_THROWS_AS(s.compose(), ConfigError);
}

TEST_CASE("full composition keeps all query rows distinct") {
    Setup s(12, 4, 8);
    const Mat q = s.compose();
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j) {
            bool same = true;
            for (int c = 0; c < 8; ++c) same = same && q.at(i, c) == q.at(j, c);
            CHECK(!same);
        }
}

TEST_CASE("composition is linear under power-of-two scaling") {
    Setup s(8, 4, 8);
    const Mat base = s.compose();
    for (double& x : s.qp.type_table->value.a) x *= 2.0;
    for (double& x : s.qp.entity_table->value.a) x *= 2.0;
    const Mat scaled = s.compose();
    for (size_t i = 0; i < base.size(); ++i) CHECK(scaled.a[i] == 2.0 * base.a[i]);
}

TEST_CASE("adapter mode reads the [MASK] position and validates the template") {
    RunConfig cfg;
    cfg.h = 8;
    cfg.u = 4;
    cfg.heads = 2;
    cfg.type_names = {"A", "B"};
    cfg.type_query_mode = "adapter";
    cfg.text_layers = 0;

    ParamStore store;
    auto text = encoders::make_text_encoder(store, 32, 8, 0, 2);
    Rng rng(3);
    for (double& x : text.embedding->value.a) x = rng.normal();
    text.embedding->zero_grad();
    auto qp = queryset::make_query_params(store, 4, 2, 8);

    Vocab vocab = Vocab::build({}, cfg.schema());
    ad::Graph g;
    const Mat t = queryset::build_type_queries(g, qp, cfg, text, vocab).value();
    CHECK(t.rows == 2);
    CHECK(t.cols == 8);
    // With a depth-0 encoder the row is exactly the [MASK] embedding.
    const int mask_id = vocab.lookup("[MASK]");
    for (int j = 0; j < 8; ++j) CHECK(t.at(0, j) == text.embedding->value.at(mask_id, j));

    cfg.prompt_template = "[TYPE] has no mask slot";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    ad::Graph g2;
    CHECK_THROWS_AS(queryset::build_type_queries(g2, qp, cfg, text, vocab), ConfigError);
}
