#include "gmner/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gmner {

using nlohmann::json;

int RunConfig::type_of(int q) const {
    const int types = p();
    if (query_layout == "block") return q / queries_per_type();
    return q % types;
}

void RunConfig::validate() const {
    const int types = p();
    if (types < 1) throw ConfigError("config: need at least one entity type");
    std::set<std::string> uniq(type_names.begin(), type_names.end());
    if (static_cast<int>(uniq.size()) != types)
        throw ConfigError("config: type names must be unique");
    if (h < 1 || u < 1 || k < 0) throw ConfigError("config: h, u must be positive and k nonnegative");
    if (u % types != 0) throw ConfigError("config: u must be a multiple of p");
    if (heads < 1 || h % heads != 0) throw ConfigError("config: h must be divisible by heads");
    if (layers < 1) throw ConfigError("config: fusion needs at least one layer");
    if (text_layers < 0) throw ConfigError("config: text_layers must be >= 0");
    if (lambda_v < 0.0 || lambda_v > 1.0) throw ConfigError("config: lambda_v must lie in [0,1]");
    if (tau_c <= 0.0 || tau_c >= 1.0) throw ConfigError("config: tau_c must lie in (0,1)");
    if (iou_threshold <= 0.0 || iou_threshold >= 1.0)
        throw ConfigError("config: iou_threshold must lie in (0,1)");
    if (learning_rate <= 0.0) throw ConfigError("config: learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("config: batch_size must be positive");
    if (epochs < 1) throw ConfigError("config: epochs must be positive");
    if (warmup_ratio < 0.0 || warmup_ratio >= 1.0)
        throw ConfigError("config: warmup_ratio must lie in [0,1)");
    if (freeze_epochs < 0) throw ConfigError("config: freeze_epochs must be >= 0");
    if (query_layout != "tile" && query_layout != "block")
        throw ConfigError("config: query_layout must be 'tile' or 'block'");
    if (type_query_mode != "toy" && type_query_mode != "adapter")
        throw ConfigError("config: type_query_mode must be 'toy' or 'adapter'");
    if (type_query_mode == "adapter" && prompt_template.find("[MASK]") == std::string::npos)
        throw ConfigError("config: adapter mode requires a [MASK] slot in the prompt template");
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    RunConfig c;
    try {
        read_if(j, "h", c.h);
        read_if(j, "u", c.u);
        read_if(j, "k", c.k);
        read_if(j, "heads", c.heads);
        read_if(j, "text_layers", c.text_layers);
        read_if(j, "lambda_v", c.lambda_v);
        read_if(j, "tau_c", c.tau_c);
        read_if(j, "iou_threshold", c.iou_threshold);
        read_if(j, "learning_rate", c.learning_rate);
        read_if(j, "batch_size", c.batch_size);
        read_if(j, "epochs", c.epochs);
        read_if(j, "warmup_ratio", c.warmup_ratio);
        read_if(j, "freeze_epochs", c.freeze_epochs);
        read_if(j, "seed", c.seed);
        read_if(j, "type_names", c.type_names);
        if (j.contains("p") && !j.contains("type_names")) {
            const int p = j.at("p").get<int>();
            if (p < 1) throw ConfigError("config: p must be positive");
            c.type_names.clear();
            static const char* base[] = {"PER", "LOC", "ORG", "OTHER"};
            for (int i = 0; i < p; ++i)
                c.type_names.push_back(i < 4 && p <= 4 ? base[i] : "TYPE" + std::to_string(i));
        }
        read_if(j, "L", c.layers);
        if (j.contains("qfnet")) {
            const json& q = j.at("qfnet");
            read_if(q, "layers", c.layers);
            read_if(q, "qct", c.ablations.qct);
            read_if(q, "qpi", c.ablations.qpi);
            read_if(q, "sag", c.ablations.sag);
            read_if(q, "text_update", c.text_update);
        }
        if (j.contains("queryset")) {
            const json& q = j.at("queryset");
            read_if(q, "ptq", c.ablations.ptq);
            read_if(q, "leq", c.ablations.leq);
            read_if(q, "layout", c.query_layout);
            read_if(q, "mode", c.type_query_mode);
            read_if(q, "prompt_template", c.prompt_template);
        }
        if (j.contains("matching")) {
            const json& m = j.at("matching");
            read_if(m, "bml", c.ablations.bml);
            read_if(m, "log_cost", c.matching_log_cost);
            read_if(m, "pad_duplicate", c.pad_duplicate);
            read_if(m, "negatives", c.loss_negatives);
        }
        if (j.contains("paths")) {
            const json& p = j.at("paths");
            read_if(p, "train", c.train_path);
            read_if(p, "dev", c.dev_path);
            read_if(p, "checkpoint", c.checkpoint_path);
            read_if(p, "report", c.report_path);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    j["h"] = h;
    j["u"] = u;
    j["p"] = p();
    j["k"] = k;
    j["heads"] = heads;
    j["text_layers"] = text_layers;
    j["lambda_v"] = lambda_v;
    j["tau_c"] = tau_c;
    j["iou_threshold"] = iou_threshold;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["warmup_ratio"] = warmup_ratio;
    j["freeze_epochs"] = freeze_epochs;
    j["seed"] = seed;
    j["type_names"] = type_names;
    j["qfnet"] = {{"layers", layers},
                  {"qct", ablations.qct},
                  {"qpi", ablations.qpi},
                  {"sag", ablations.sag},
                  {"text_update", text_update}};
    j["queryset"] = {{"ptq", ablations.ptq},
                     {"leq", ablations.leq},
                     {"layout", query_layout},
                     {"mode", type_query_mode},
                     {"prompt_template", prompt_template}};
    j["matching"] = {{"bml", ablations.bml},
                     {"log_cost", matching_log_cost},
                     {"pad_duplicate", pad_duplicate},
                     {"negatives", loss_negatives}};
    j["paths"] = {{"train", train_path},
                  {"dev", dev_path},
                  {"checkpoint", checkpoint_path},
                  {"report", report_path}};
    return j.dump(2);
}

} // namespace gmner
