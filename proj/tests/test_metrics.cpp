#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gmner/metrics.hpp"

using namespace gmner;
using metrics::Task;

namespace {

metrics::ScoredPrediction pred(int start, int end, int type, RegionLabel region, double conf = 0.9) {
    metrics::ScoredPrediction p;
    p.quad = Quadruple{start, end, type, std::move(region)};
    p.confidence = conf;
    return p;
}

} // namespace

TEST_CASE("correctness: identical ungroundable quadruples are correct everywhere") {
    const Quadruple gold{1, 2, 0, Ungroundable{}};
    const auto p = pred(1, 2, 0, Ungroundable{});
    CHECK(metrics::correctness(p, gold, Task::GMNER));
    CHECK(metrics::correctness(p, gold, Task::MNER));
    CHECK(metrics::correctness(p, gold, Task::EEG));
}

TEST_CASE("correctness: box with IoU 1/7 fails the region predicate") {
    const Quadruple gold{1, 2, 0, GoldBoxes{{BoundingBox{0, 0, 10, 10}}}};
    const auto p = pred(1, 2, 0, GoldBoxes{{BoundingBox{5, 5, 15, 15}}});
    CHECK(!metrics::correctness(p, gold, Task::GMNER));
    CHECK(metrics::correctness(p, gold, Task::MNER));
    CHECK(!metrics::correctness(p, gold, Task::EEG));
}

TEST_CASE("correctness: wrong type with correct span and region") {
    const Quadruple gold{1, 2, 0, GoldBoxes{{BoundingBox{0, 0, 10, 10}}}};
    const auto p = pred(1, 2, 1, GoldBoxes{{BoundingBox{0, 0, 10, 10}}});
    CHECK(!metrics::correctness(p, gold, Task::GMNER));
    CHECK(!metrics::correctness(p, gold, Task::MNER));
    CHECK(metrics::correctness(p, gold, Task::EEG));
}

TEST_CASE("correctness: mixed ungroundable predictions fail the region predicate") {
    const Quadruple gold{0, 0, 0, GoldBoxes{{BoundingBox{0, 0, 1, 1}}}};
    CHECK(!metrics::correctness(pred(0, 0, 0, Ungroundable{}), gold, Task::EEG));
    const Quadruple gold_none{0, 0, 0, Ungroundable{}};
    CHECK(!metrics::correctness(pred(0, 0, 0, GoldBoxes{{BoundingBox{0, 0, 1, 1}}}), gold_none,
                                Task::EEG));
}

TEST_CASE("correctness: any gold box above threshold suffices") {
    const Quadruple gold{0, 0, 0,
                         GoldBoxes{{BoundingBox{10, 10, 11, 11}, BoundingBox{0, 0, 1, 1}}}};
    CHECK(metrics::correctness(pred(0, 0, 0, GoldBoxes{{BoundingBox{0, 0, 1, 1}}}), gold,
                               Task::EEG));
}

TEST_CASE("score reproduces the 3-pred/2-correct/4-gold fixture") {
    std::vector<Quadruple> gold;
    for (int i = 0; i < 4; ++i) gold.push_back(Quadruple{i, i, 0, Ungroundable{}});
    std::vector<metrics::ScoredPrediction> preds = {
        pred(0, 0, 0, Ungroundable{}),
        pred(1, 1, 0, Ungroundable{}),
        pred(3, 4, 0, Ungroundable{}), // wrong span
    };
    const metrics::MetricReport r = metrics::score({preds}, {gold}, Task::GMNER);
    CHECK(r.correct == 2);
    CHECK(r.predict == 3);
    CHECK(r.gold == 4);
    CHECK(r.precision == 2.0 / 3.0);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("score: perfect predictions give all ones") {
    std::vector<Quadruple> gold = {Quadruple{0, 1, 0, Ungroundable{}},
                                   Quadruple{2, 3, 1, GoldBoxes{{BoundingBox{0, 0, 1, 1}}}}};
    std::vector<metrics::ScoredPrediction> preds = {
        pred(0, 1, 0, Ungroundable{}), pred(2, 3, 1, GoldBoxes{{BoundingBox{0, 0, 1, 1}}})};
    const metrics::MetricReport r = metrics::score({preds}, {gold}, Task::GMNER);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
}

TEST_CASE("score: empty predictions use the zero conventions") {
    const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}}};
    const metrics::MetricReport r = metrics::score({{}}, {gold}, Task::GMNER);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
}

TEST_CASE("score rejects misaligned lists") {
    CHECK_THROWS_AS(metrics::score({{}, {}}, {{}}, Task::GMNER), InvalidInputError);
}

TEST_CASE("duplicated predictions lower precision but not correct count") {
    const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}}};
    const auto p = pred(0, 0, 0, Ungroundable{});
    const metrics::MetricReport once = metrics::score({{p}}, {gold}, Task::GMNER);
    const metrics::MetricReport twice = metrics::score({{p, p}}, {gold}, Task::GMNER);
    CHECK(once.correct == 1);
    CHECK(twice.correct == 1);
    CHECK(twice.predict == 2);
    CHECK(twice.precision < once.precision);
}

TEST_CASE("one-to-one matching: a single prediction cannot cover two golds") {
    const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}},
                                         Quadruple{0, 0, 0, Ungroundable{}}};
    const metrics::MetricReport r = metrics::score({{pred(0, 0, 0, Ungroundable{})}}, {gold},
                                                   Task::GMNER);
    CHECK(r.correct == 1);
    CHECK(r.recall == 0.5);
}

TEST_CASE("per-type report: single type matches the overall row") {
    const TypeSchema schema = TypeSchema::make({"PER"}, "[TYPE] about [MASK]");
    const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}},
                                         Quadruple{1, 1, 0, Ungroundable{}}};
    std::vector<metrics::ScoredPrediction> preds = {pred(0, 0, 0, Ungroundable{})};
    const auto table = metrics::per_type_report({preds}, {gold}, Task::GMNER, schema);
    CHECK(table.at("PER").f1 == table.at("All").f1);
    CHECK(table.at("PER").gold == 2);
}

TEST_CASE("per-type report: empty bucket reports zero counts") {
    const TypeSchema schema = TypeSchema::make({"PER", "LOC"}, "[TYPE] about [MASK]");
    const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}}};
    const auto table = metrics::per_type_report({{}}, {gold}, Task::GMNER, schema);
    CHECK(table.at("LOC").gold == 0);
    CHECK(table.at("LOC").predict == 0);
    CHECK(table.at("LOC").f1 == 0.0);
}

TEST_CASE("per-type report: micro average lies strictly between a perfect and a failed type") {
    const TypeSchema schema = TypeSchema::make({"PER", "LOC"}, "[TYPE] about [MASK]");
    const std::vector<Quadruple> gold = {Quadruple{0, 0, 0, Ungroundable{}},
                                         Quadruple{1, 1, 1, Ungroundable{}}};
    std::vector<metrics::ScoredPrediction> preds = {
        pred(0, 0, 0, Ungroundable{}),
        pred(3, 3, 1, Ungroundable{}), // wrong span for the LOC gold
    };
    const auto table = metrics::per_type_report({preds}, {gold}, Task::GMNER, schema);
    CHECK(table.at("PER").f1 == 1.0);
    CHECK(table.at("LOC").f1 == 0.0);
    CHECK(table.at("All").f1 > 0.0);
    CHECK(table.at("All").f1 < 1.0);
}

TEST_CASE("resolve maps candidate indices onto boxes") {
    Example ex;
    ex.tokens = {"a"};
    CandidateRegion r;
    r.box = BoundingBox{1, 1, 2, 2};
    ex.regions.push_back(r);

    heads::Prediction p;
    p.quad = Quadruple{0, 0, 0, CandidateIndex{1}};
    p.confidence = 0.7;
    const metrics::ScoredPrediction sp = metrics::resolve(p, ex);
    const auto* gb = std::get_if<GoldBoxes>(&sp.quad.region);
    REQUIRE(gb != nullptr);
    CHECK(gb->boxes[0].x1 == 1.0);

    heads::Prediction ug;
    ug.quad = Quadruple{0, 0, 0, CandidateIndex{0}};
    CHECK(is_ungroundable(metrics::resolve(ug, ex).quad.region));

    heads::Prediction bad;
    bad.quad = Quadruple{0, 0, 0, CandidateIndex{5}};
    CHECK_THROWS_AS(metrics::resolve(bad, ex), InvalidInputError);
}
