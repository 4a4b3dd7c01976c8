#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gmner/benchmark.hpp"
#include "gmner/checkpoint.hpp"
#include "gmner/data.hpp"
#include "gmner/selftest.hpp"
#include "gmner/synth.hpp"
#include "gmner/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

using namespace gmner;

namespace {

bool examples_equal(const Example& a, const Example& b) {
    if (a.tokens != b.tokens) return false;
    if (a.regions.size() != b.regions.size()) return false;
    for (size_t i = 0; i < a.regions.size(); ++i) {
        const auto& ra = a.regions[i];
        const auto& rb = b.regions[i];
        if (ra.feature != rb.feature) return false;
        if (ra.box.x1 != rb.box.x1 || ra.box.y1 != rb.box.y1 || ra.box.x2 != rb.box.x2 ||
            ra.box.y2 != rb.box.y2)
            return false;
    }
    if (a.gold.size() != b.gold.size()) return false;
    for (size_t i = 0; i < a.gold.size(); ++i) {
        const auto& ga = a.gold[i];
        const auto& gb = b.gold[i];
        if (ga.start != gb.start || ga.end != gb.end || ga.type_id != gb.type_id) return false;
        if (is_ungroundable(ga.region) != is_ungroundable(gb.region)) return false;
        const auto* ba = std::get_if<GoldBoxes>(&ga.region);
        const auto* bb = std::get_if<GoldBoxes>(&gb.region);
        if ((ba != nullptr) != (bb != nullptr)) return false;
        if (ba != nullptr) {
            if (ba->boxes.size() != bb->boxes.size()) return false;
            for (size_t k = 0; k < ba->boxes.size(); ++k)
                if (ba->boxes[k].x1 != bb->boxes[k].x1 || ba->boxes[k].y2 != bb->boxes[k].y2)
                    return false;
        }
    }
    return true;
}

synth::SyntheticSpec small_spec() {
    synth::SyntheticSpec s;
    s.vocab_size = 60;
    s.types = 4;
    s.entities_min = 1;
    s.entities_max = 2;
    s.len_min = 6;
    s.len_max = 9;
    s.k = 4;
    s.feature_dim = 8;
    return s;
}

RunConfig small_config() {
    RunConfig cfg;
    cfg.h = 16;
    cfg.u = 8;
    cfg.k = 4;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.text_layers = 1;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.freeze_epochs = 1;
    cfg.learning_rate = 1e-3;
    cfg.checkpoint_path.clear();
    return cfg;
}

std::vector<Example> small_dataset(int count, uint64_t seed = 7) {
    return synth::generate_synthetic(small_spec(), count, seed);
}

Model small_model(const RunConfig& cfg, const std::vector<Example>& data) {
    return Model(cfg, Vocab::build(data, cfg.schema()), small_spec().feature_dim);
}

} // namespace

TEST_CASE("synthetic generation is deterministic") {
    const auto a = synth::generate_synthetic(small_spec(), 10, 7);
    const auto b = synth::generate_synthetic(small_spec(), 10, 7);
    REQUIRE(a.size() == 10);
    for (size_t i = 0; i < a.size(); ++i) CHECK(examples_equal(a[i], b[i]));
    const auto c = synth::generate_synthetic(small_spec(), 10, 8);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i) any_diff = any_diff || !examples_equal(a[i], c[i]);
    CHECK(any_diff);
}

TEST_CASE("groundable probability zero makes every gold ungroundable") {
    synth::SyntheticSpec s = small_spec();
    s.groundable_prob = 0.0;
    for (const Example& ex : synth::generate_synthetic(s, 20, 3))
        for (const Quadruple& q : ex.gold) CHECK(is_ungroundable(q.region));
}

TEST_CASE("noiseless groundable generation plants exactly one region per entity") {
    synth::SyntheticSpec s = small_spec();
    s.groundable_prob = 1.0;
    s.noise_scale = 0.0;
    const auto data = synth::generate_synthetic(s, 30, 5);
    // Same surface form + same type -> identical planted feature everywhere.
    std::map<std::pair<std::string, int>, std::vector<double>> latents;
    for (const Example& ex : data) {
        for (const Quadruple& q : ex.gold) {
            const auto* gb = std::get_if<GoldBoxes>(&q.region);
            REQUIRE(gb != nullptr);
            REQUIRE(gb->boxes.size() == 1);
            // find the candidate whose box matches the gold box; must be unique
            int hits = 0;
            std::vector<double> feature;
            for (const CandidateRegion& r : ex.regions) {
                if (r.box.x1 == gb->boxes[0].x1 && r.box.y1 == gb->boxes[0].y1 &&
                    r.box.x2 == gb->boxes[0].x2 && r.box.y2 == gb->boxes[0].y2) {
                    ++hits;
                    feature = r.feature;
                }
            }
            CHECK(hits == 1);
            const auto key = std::make_pair(ex.tokens[q.start], q.type_id);
            auto it = latents.find(key);
            if (it == latents.end())
                latents.emplace(key, feature);
            else
                CHECK(it->second == feature);
        }
    }
}

TEST_CASE("impossible synthetic specs are rejected") {
    synth::SyntheticSpec s = small_spec();
    s.entities_max = 5;
    s.len_min = 6; // 2*5 > 6: entities cannot fit
    CHECK_THROWS_AS(s.validate(), ConfigError);
    synth::SyntheticSpec s2 = small_spec();
    s2.entities_max = 5;
    s2.k = 4;
    s2.len_min = 12;
    CHECK_THROWS_AS(s2.validate(), ConfigError);
}

TEST_CASE("ambiguous surface tokens are exposed and present in data") {
    synth::SyntheticSpec s = small_spec();
    s.ambiguity_rate = 0.5;
    const auto tokens = synth::ambiguous_surface_tokens(s, 7);
    CHECK(!tokens.empty());
    // An ambiguous form must actually realize two types somewhere in a large sample.
    const auto data = synth::generate_synthetic(s, 400, 7);
    std::map<std::string, std::set<int>> seen;
    for (const Example& ex : data)
        for (const Quadruple& q : ex.gold) seen[ex.tokens[q.start]].insert(q.type_id);
    bool two_types = false;
    for (const std::string& t : tokens)
        if (seen.count(t) && seen[t].size() > 1) two_types = true;
    CHECK(two_types);
}

TEST_CASE("jsonl round trip is the identity") {
    const auto data = small_dataset(15);
    const TypeSchema schema = TypeSchema::make(synth::synthetic_type_names(4), "[TYPE] [MASK]");
    const std::string path = "roundtrip_test.jsonl";
    data::save_jsonl(path, data, schema);
    const auto loaded = data::load_jsonl(path, schema);
    REQUIRE(loaded.size() == data.size());
    for (size_t i = 0; i < data.size(); ++i) CHECK(examples_equal(data[i], loaded[i]));
    std::remove(path.c_str());
}

TEST_CASE("jsonl loader reports line numbers for malformed input") {
    const std::string path = "malformed_test.jsonl";
    {
        std::ofstream f(path);
        f << R"({"tokens": ["a"], "regions": [], "entities": []})" << "\n";
        f << "this is not json\n";
    }
    const TypeSchema schema = TypeSchema::make({"PER"}, "[TYPE] [MASK]");
    try {
        data::load_jsonl(path, schema);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("jsonl loader rejects inverted spans with a line number") {
    const std::string path = "badspan_test.jsonl";
    {
        std::ofstream f(path);
        f << R"({"tokens": ["a", "b"], "regions": [], "entities": [{"start": 1, "end": 0, "type": "PER", "boxes": null}]})"
          << "\n";
    }
    const TypeSchema schema = TypeSchema::make({"PER"}, "[TYPE] [MASK]");
    try {
        data::load_jsonl(path, schema);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("jsonl: null boxes mean ungroundable, integer types accepted") {
    const std::string path = "nullbox_test.jsonl";
    {
        std::ofstream f(path);
        f << R"({"tokens": ["a", "b"], "regions": [], "entities": [{"start": 0, "end": 1, "type": 0, "boxes": null}]})"
          << "\n";
    }
    const TypeSchema schema = TypeSchema::make({"PER"}, "[TYPE] [MASK]");
    const auto data2 = data::load_jsonl(path, schema);
    REQUIRE(data2.size() == 1);
    REQUIRE(data2[0].gold.size() == 1);
    CHECK(is_ungroundable(data2[0].gold[0].region));
    std::remove(path.c_str());
}

TEST_CASE("config json round trip preserves every field") {
    RunConfig cfg = small_config();
    cfg.ablations.qpi = false;
    cfg.query_layout = "block";
    cfg.matching_log_cost = true;
    cfg.train_path = "x.jsonl";
    const RunConfig back = RunConfig::from_json_text(cfg.to_json_text());
    CHECK(back.h == cfg.h);
    CHECK(back.u == cfg.u);
    CHECK(back.layers == cfg.layers);
    CHECK(back.ablations.qpi == false);
    CHECK(back.query_layout == "block");
    CHECK(back.matching_log_cost == true);
    CHECK(back.train_path == "x.jsonl");
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("defaults are the desk-scale setup and the reference settings parse") {
    const RunConfig d;
    CHECK(d.h == 64);
    CHECK(d.u == 12);
    CHECK(d.p() == 4);
    CHECK(d.k == 8);
    CHECK(d.layers == 3);
    CHECK(d.heads == 4);
    CHECK(d.warmup_ratio == 0.05);
    CHECK(d.freeze_epochs == 5);
    CHECK(d.batch_size == 16);

    // The full-scale reference settings must be expressible in a config file.
    const RunConfig ref = RunConfig::from_json_text(
        R"({"u": 60, "learning_rate": 2e-5, "batch_size": 16, "epochs": 50,
            "warmup_ratio": 0.05, "freeze_epochs": 5})");
    CHECK(ref.u == 60);
    CHECK(ref.learning_rate == 2e-5);
    CHECK(ref.epochs == 50);
}

TEST_CASE("invalid configs are rejected") {
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"u": 7})"), ConfigError);       // u % p != 0
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"heads": 5})"), ConfigError);   // h % heads != 0
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"tau_c": 1.5})"), ConfigError); // out of range
    CHECK_THROWS_AS(RunConfig::from_json_text("not json"), ParseError);
}

TEST_CASE("capacity errors name the offending example") {
    RunConfig cfg = small_config();
    cfg.u = 4;
    cfg.type_names = {"PER", "LOC"};
    Example ex;
    ex.tokens = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
    for (int i = 0; i < 5; ++i) ex.gold.push_back(Quadruple{i, i, 0, Ungroundable{}});
    try {
        train::prepare_targets({ex}, cfg);
        CHECK(false);
    } catch (const CapacityError& e) {
        CHECK(std::string(e.what()).find("example 0") != std::string::npos);
    }
}

TEST_CASE("one training epoch: finite loss, frozen encoders, checkpoint written") {
    const auto data = small_dataset(8);
    RunConfig cfg = small_config();
    cfg.checkpoint_path = "smoke_test.ckpt";
    Model model = small_model(cfg, data);

    std::vector<std::vector<double>> encoder_before;
    std::vector<std::string> encoder_names;
    std::vector<std::vector<double>> other_before;
    for (const auto& p : model.params().all()) {
        if (p->group == static_cast<int>(ParamGroup::TextEncoder) ||
            p->group == static_cast<int>(ParamGroup::VisionEncoder)) {
            encoder_before.push_back(p->value.a);
            encoder_names.push_back(p->name);
        } else {
            other_before.push_back(p->value.a);
        }
    }

    const train::TrainResult result = train::run_training(model, data, data, false);
    REQUIRE(result.history.size() == 1);
    CHECK(std::isfinite(result.history[0].mean_loss));

    size_t ei = 0, oi = 0;
    bool others_moved = false;
    for (const auto& p : model.params().all()) {
        if (p->group == static_cast<int>(ParamGroup::TextEncoder) ||
            p->group == static_cast<int>(ParamGroup::VisionEncoder)) {
            INFO(p->name);
            CHECK(p->value.a == encoder_before[ei++]);
        } else {
            others_moved = others_moved || p->value.a != other_before[oi++];
        }
    }
    CHECK(others_moved);

    std::ifstream ckpt(cfg.checkpoint_path);
    CHECK(ckpt.good());
    std::remove(cfg.checkpoint_path.c_str());
}

TEST_CASE("adapter-mode type queries and block layout train end to end") {
    const auto data = small_dataset(8);
    RunConfig cfg = small_config();
    cfg.type_query_mode = "adapter";
    cfg.query_layout = "block";
    cfg.freeze_epochs = 0;
    Model model = small_model(cfg, data);
    const train::TrainResult r = train::run_training(model, data, {}, false);
    CHECK(std::isfinite(r.history[0].mean_loss));

    // The prompt path must feed gradients into the embedding table when the
    // encoders are not frozen.
    ad::Param* emb = model.params().find("text.embedding");
    REQUIRE(emb != nullptr);
    bool moved = false;
    Model fresh = small_model(cfg, data);
    ad::Param* fresh_emb = fresh.params().find("text.embedding");
    for (size_t i = 0; i < emb->value.size(); ++i)
        moved = moved || emb->value.a[i] != fresh_emb->value.a[i];
    CHECK(moved);
}

TEST_CASE("training is deterministic given seed, config, and data") {
    const auto data = small_dataset(16);
    RunConfig cfg = small_config();
    cfg.epochs = 2;
    cfg.freeze_epochs = 1;

    Model m1 = small_model(cfg, data);
    const train::TrainResult r1 = train::run_training(m1, data, data, false);
    Model m2 = small_model(cfg, data);
    const train::TrainResult r2 = train::run_training(m2, data, data, false);

    REQUIRE(r1.history.size() == r2.history.size());
    for (size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].mean_loss == r2.history[i].mean_loss);
        CHECK(r1.history[i].dev_f1 == r2.history[i].dev_f1);
    }
}

TEST_CASE("checkpoint round trip reproduces forward outputs bit-exactly") {
    const auto data = small_dataset(6);
    RunConfig cfg = small_config();
    cfg.checkpoint_path = "roundtrip_model.ckpt";
    Model model = small_model(cfg, data);

    // a couple of updates so the state is not the initializer
    train::run_training(model, data, {}, false);

    const heads::PredictionBundle before = model.forward_values(data[0]);
    checkpoint::save(cfg.checkpoint_path, model, nullptr, 0, nullptr, 0.0);
    const checkpoint::CheckpointData loaded = checkpoint::load(cfg.checkpoint_path);
    auto restored = checkpoint::restore_model(loaded);
    const heads::PredictionBundle after = restored->forward_values(data[0]);

    CHECK(before.ps.a == after.ps.a);
    CHECK(before.pe.a == after.pe.a);
    CHECK(before.pr.a == after.pr.a);
    CHECK(before.pc.a == after.pc.a);
    std::remove(cfg.checkpoint_path.c_str());
}

TEST_CASE("benchmark rejects empty datasets and reports sane numbers") {
    const auto data = small_dataset(6);
    RunConfig cfg = small_config();
    Model model = small_model(cfg, data);
    CHECK_THROWS_WITH_AS(benchmark::run_benchmark(model, {}, 4), "nothing to benchmark",
                         InvalidInputError);
    const benchmark::BenchmarkReport r = benchmark::run_benchmark(model, data, 3, 1);
    CHECK(r.examples == 6);
    CHECK(r.examples_per_sec > 0.0);
    CHECK(r.mean_latency_ms > 0.0);
    CHECK(r.mean_tokens > 0.0);
}

TEST_CASE("selftest negative control: a corrupted solver fails the oracle") {
    matching::set_solver_corruption_for_tests(true);
    const selftest::CheckResult r = selftest::check_hungarian_oracle(5, 1);
    matching::set_solver_corruption_for_tests(false);
    CHECK(!r.pass);
    const selftest::CheckResult ok = selftest::check_hungarian_oracle(5, 1);
    CHECK(ok.pass);
}

TEST_CASE("evaluation reports cover all three tasks and every type") {
    const auto data = small_dataset(6);
    RunConfig cfg = small_config();
    Model model = small_model(cfg, data);
    const train::EvalOutputs out = train::evaluate(model, data, /*per_type=*/true);
    CHECK(out.tasks.size() == 3);
    for (const auto& [task, table] : out.per_type) {
        CHECK(table.size() == static_cast<size_t>(cfg.p()) + 1); // every type plus "All"
        CHECK(table.count("All") == 1);
        for (const std::string& name : cfg.type_names) CHECK(table.count(name) == 1);
    }
    const std::string json_text = train::report_to_json(out, true);
    for (const char* field : {"\"task\"", "\"type\"", "\"precision\"", "\"recall\"", "\"f1\"",
                              "\"correct\"", "\"predict\"", "\"gold\""})
        CHECK(json_text.find(field) != std::string::npos);
}

TEST_CASE("untrained model scores near zero") {
    const auto data = small_dataset(30);
    RunConfig cfg = small_config();
    Model model = small_model(cfg, data);
    const double f1 = train::dev_gmner_f1(model, data);
    CHECK(f1 < 0.3);
}
