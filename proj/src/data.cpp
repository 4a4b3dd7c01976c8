#include "gmner/data.hpp"

#include <fstream>

#include "json.hpp"

namespace gmner::data {

using nlohmann::json;

namespace {

int type_id_from_json(const json& j, const TypeSchema& schema) {
    if (j.is_number_integer()) {
        const int id = j.get<int>();
        if (id < 0 || id >= schema.count())
            throw InvalidInputError("type id " + std::to_string(id) + " out of range");
        return id;
    }
    const std::string name = j.get<std::string>();
    for (int i = 0; i < schema.count(); ++i)
        if (schema.names[i] == name) return i;
    throw InvalidInputError("unknown type name '" + name + "'");
}

BoundingBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4)
        throw InvalidInputError("box must be an array [x1,y1,x2,y2]");
    BoundingBox b;
    b.x1 = j[0].get<double>();
    b.y1 = j[1].get<double>();
    b.x2 = j[2].get<double>();
    b.y2 = j[3].get<double>();
    if (!b.valid()) throw InvalidInputError("degenerate box");
    return b;
}

json box_to_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

Example example_from_json(const json& j, const TypeSchema& schema) {
    Example ex;
    ex.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("regions")) {
        for (const json& rj : j.at("regions")) {
            CandidateRegion r;
            r.box = box_from_json(rj.at("box"));
            r.feature = rj.at("feature").get<std::vector<double>>();
            ex.regions.push_back(std::move(r));
        }
    }
    if (j.contains("entities")) {
        for (const json& ej : j.at("entities")) {
            Quadruple q;
            q.start = ej.at("start").get<int>();
            q.end = ej.at("end").get<int>();
            q.type_id = type_id_from_json(ej.at("type"), schema);
            if (!ej.contains("boxes") || ej.at("boxes").is_null()) {
                q.region = Ungroundable{};
            } else {
                GoldBoxes gb;
                for (const json& bj : ej.at("boxes")) gb.boxes.push_back(box_from_json(bj));
                if (gb.boxes.empty())
                    throw InvalidInputError("entity with an empty box list; use null for ungroundable");
                q.region = std::move(gb);
            }
            ex.gold.push_back(std::move(q));
        }
    }
    validate_example(ex, schema.count());
    return ex;
}

} // namespace

std::vector<Example> load_jsonl(const std::string& path, const TypeSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_jsonl: cannot open " + path);
    std::vector<Example> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(example_from_json(json::parse(line), schema));
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_jsonl(const std::string& path, const std::vector<Example>& examples,
                const TypeSchema& schema) {
    std::ofstream out(path);
    if (!out) throw Error("save_jsonl: cannot open " + path + " for writing");
    for (const Example& ex : examples) {
        json j;
        j["tokens"] = ex.tokens;
        json regions = json::array();
        for (const CandidateRegion& r : ex.regions)
            regions.push_back({{"box", box_to_json(r.box)}, {"feature", r.feature}});
        j["regions"] = std::move(regions);
        json entities = json::array();
        for (const Quadruple& q : ex.gold) {
            json ej;
            ej["start"] = q.start;
            ej["end"] = q.end;
            ej["type"] = schema.names.at(q.type_id);
            if (const auto* gb = std::get_if<GoldBoxes>(&q.region)) {
                json boxes = json::array();
                for (const BoundingBox& b : gb->boxes) boxes.push_back(box_to_json(b));
                ej["boxes"] = std::move(boxes);
            } else {
                ej["boxes"] = nullptr;
            }
            entities.push_back(std::move(ej));
        }
        j["entities"] = std::move(entities);
        out << j.dump() << '\n';
    }
}

void write_predictions(const std::string& path,
                       const std::vector<std::vector<heads::Prediction>>& predictions,
                       const std::vector<Example>& examples, const TypeSchema& schema) {
    if (predictions.size() != examples.size())
        throw InvalidInputError("write_predictions: prediction/example count mismatch");
    std::ofstream out(path);
    if (!out) throw Error("write_predictions: cannot open " + path + " for writing");
    for (size_t i = 0; i < predictions.size(); ++i) {
        json entities = json::array();
        for (const heads::Prediction& p : predictions[i]) {
            json ej;
            ej["start"] = p.quad.start;
            ej["end"] = p.quad.end;
            ej["type"] = schema.names.at(p.quad.type_id);
            int region_index = 0;
            if (const auto* ci = std::get_if<CandidateIndex>(&p.quad.region)) region_index = ci->index;
            ej["region_index"] = region_index;
            if (region_index > 0)
                ej["box"] = box_to_json(examples[i].regions.at(region_index - 1).box);
            else
                ej["box"] = nullptr;
            ej["confidence"] = p.confidence;
            entities.push_back(std::move(ej));
        }
        out << json{{"entities", std::move(entities)}}.dump() << '\n';
    }
}

} // namespace gmner::data
