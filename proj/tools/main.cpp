#include "gmner/benchmark.hpp"
#include "gmner/checkpoint.hpp"
#include "gmner/data.hpp"
#include "gmner/selftest.hpp"
#include "gmner/synth.hpp"
#include "gmner/train.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

namespace {

using namespace gmner;

void print_report_line(const std::string& label, const metrics::MetricReport& r) {
    std::printf("%-8s P %.4f  R %.4f  F1 %.4f  (%ld/%ld correct, %ld gold)\n", label.c_str(),
                r.precision, r.recall, r.f1, r.correct, r.predict, r.gold);
}

int cmd_train(const std::string& config_path) {
    RunConfig cfg = RunConfig::from_json_file(config_path);
    if (cfg.train_path.empty()) throw ConfigError("train: paths.train is required");
    const TypeSchema schema = cfg.schema();
    const auto train_set = data::load_jsonl(cfg.train_path, schema);
    std::vector<Example> dev_set;
    if (!cfg.dev_path.empty()) dev_set = data::load_jsonl(cfg.dev_path, schema);

    int feature_dim = 0;
    for (const Example& ex : train_set)
        if (!ex.regions.empty()) {
            feature_dim = static_cast<int>(ex.regions[0].feature.size());
            break;
        }
    if (feature_dim == 0) throw InvalidInputError("train: no example carries region features");

    Model model(cfg, Vocab::build(train_set, schema), feature_dim);
    const train::TrainResult result = train::run_training(model, train_set, dev_set, true);
    std::printf("best dev GMNER F1 %.4f at epoch %d\n", result.best_f1, result.best_epoch);
    if (!cfg.checkpoint_path.empty())
        std::printf("best checkpoint written to %s\n", cfg.checkpoint_path.c_str());
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, bool per_type,
             const std::string& report_out, const std::string& pred_out) {
    const checkpoint::CheckpointData ckpt = checkpoint::load(ckpt_path);
    auto model = checkpoint::restore_model(ckpt);
    const auto dataset = data::load_jsonl(data_path, model->config().schema());
    const train::EvalOutputs out = train::evaluate(*model, dataset, per_type);

    for (const auto& [task, report] : out.tasks) print_report_line(metrics::task_name(task), report);
    if (per_type) {
        for (const auto& [task, table] : out.per_type) {
            std::printf("\nper-type %s\n", metrics::task_name(task));
            for (const auto& [name, report] : table) print_report_line(name, report);
        }
    }
    if (!report_out.empty()) {
        std::ofstream f(report_out);
        f << train::report_to_json(out, per_type);
        std::printf("report written to %s\n", report_out.c_str());
    }
    if (!pred_out.empty()) {
        data::write_predictions(pred_out, out.predictions, dataset, model->config().schema());
        std::printf("predictions written to %s\n", pred_out.c_str());
    }
    return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& data_path,
                const std::string& out_path) {
    const checkpoint::CheckpointData ckpt = checkpoint::load(ckpt_path);
    auto model = checkpoint::restore_model(ckpt);
    const auto dataset = data::load_jsonl(data_path, model->config().schema());
    std::vector<std::vector<heads::Prediction>> preds(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) preds[i] = model->predict(dataset[i]);
    data::write_predictions(out_path, preds, dataset, model->config().schema());
    std::printf("predictions for %zu examples written to %s\n", dataset.size(), out_path.c_str());
    return 0;
}

int cmd_benchmark(const std::string& ckpt_path, const std::string& data_path, int batch) {
    const checkpoint::CheckpointData ckpt = checkpoint::load(ckpt_path);
    auto model = checkpoint::restore_model(ckpt);
    const auto dataset = data::load_jsonl(data_path, model->config().schema());
    const benchmark::BenchmarkReport report = benchmark::run_benchmark(*model, dataset, batch);
    std::fputs(benchmark::format_report(report).c_str(), stdout);
    return 0;
}

int cmd_gen_data(const std::string& spec_path, int count, uint64_t seed,
                 const std::string& out_path) {
    const synth::SyntheticSpec spec =
        spec_path.empty() ? synth::SyntheticSpec{} : synth::SyntheticSpec::from_json_file(spec_path);
    const auto examples = synth::generate_synthetic(spec, count, seed);
    const TypeSchema schema = TypeSchema::make(synth::synthetic_type_names(spec.types),
                                               "[TYPE] is an entity type about [MASK]");
    data::save_jsonl(out_path, examples, schema);
    std::printf("%d examples written to %s\n", count, out_path.c_str());
    return 0;
}

int cmd_selftest(bool negative_control) {
    const selftest::SelfTestResult r = selftest::run_all(negative_control);
    std::fputs(selftest::format(r).c_str(), stdout);
    if (negative_control) {
        // The corrupted solver must make the oracle check fail.
        const bool oracle_failed = !r.checks.empty() && !r.checks.front().pass;
        std::printf("negative control: oracle check %s\n",
                    oracle_failed ? "failed as expected" : "UNEXPECTEDLY PASSED");
        return oracle_failed ? 0 : 2;
    }
    return r.all_pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-guided multimodal set prediction for grounded NER"};
    app.require_subcommand(1);

    std::string config_path;
    auto* train_cmd = app.add_subcommand("train", "train a model from a JSON config");
    train_cmd->add_option("--config", config_path, "run configuration JSON")->required();

    std::string ckpt_path, data_path, report_out, pred_out;
    bool per_type = false;
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", data_path, "JSONL dataset")->required();
    eval_cmd->add_flag("--per-type", per_type, "also report per-type metrics");
    eval_cmd->add_option("--report", report_out, "write the JSON report here");
    eval_cmd->add_option("--pred", pred_out, "write predictions JSONL here");

    std::string p_ckpt, p_data, p_out;
    auto* predict_cmd = app.add_subcommand("predict", "write predictions for a dataset");
    predict_cmd->add_option("--checkpoint", p_ckpt)->required();
    predict_cmd->add_option("--data", p_data)->required();
    predict_cmd->add_option("--out", p_out)->required();

    std::string b_ckpt, b_data;
    int batch = 16;
    auto* bench_cmd = app.add_subcommand("benchmark", "measure inference throughput");
    bench_cmd->add_option("--checkpoint", b_ckpt)->required();
    bench_cmd->add_option("--data", b_data)->required();
    bench_cmd->add_option("--batch", batch, "batch size");

    std::string spec_path, gen_out;
    int count = 100;
    uint64_t seed = 7;
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic JSONL dataset");
    gen_cmd->add_option("--spec", spec_path, "synthetic spec JSON (defaults used when omitted)");
    gen_cmd->add_option("--count", count, "number of examples")->required();
    gen_cmd->add_option("--seed", seed, "generator seed");
    gen_cmd->add_option("--out", gen_out, "output JSONL path")->required();

    bool negative_control = false;
    auto* self_cmd = app.add_subcommand("selftest", "run the property suite");
    self_cmd->add_flag("--negative-control", negative_control,
                       "corrupt the solver to prove the oracle check bites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(config_path);
        if (eval_cmd->parsed()) return cmd_eval(ckpt_path, data_path, per_type, report_out, pred_out);
        if (predict_cmd->parsed()) return cmd_predict(p_ckpt, p_data, p_out);
        if (bench_cmd->parsed()) return cmd_benchmark(b_ckpt, b_data, batch);
        if (gen_cmd->parsed()) return cmd_gen_data(spec_path, count, seed, gen_out);
        if (self_cmd->parsed()) return cmd_selftest(negative_control);
    } catch (const gmner::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
