#include "gmner/synth.hpp"

#include "gmner/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gmner::synth {

using nlohmann::json;

void SyntheticSpec::validate() const {
    if (vocab_size < 8) throw ConfigError("synthetic: vocab_size must be >= 8");
    if (types < 1) throw ConfigError("synthetic: types must be >= 1");
    if (entities_min < 0 || entities_max < entities_min)
        throw ConfigError("synthetic: entity range is empty");
    if (len_min < 1 || len_max < len_min) throw ConfigError("synthetic: length range is empty");
    if (2 * entities_max > len_min)
        throw ConfigError("synthetic: entities cannot fit into the shortest sentence");
    if (k < 1) throw ConfigError("synthetic: k must be >= 1");
    if (entities_max > k)
        throw ConfigError("synthetic: more entities than candidate region slots");
    if (feature_dim < 1) throw ConfigError("synthetic: feature_dim must be >= 1");
    if (groundable_prob < 0.0 || groundable_prob > 1.0)
        throw ConfigError("synthetic: groundable_prob must lie in [0,1]");
    if (ambiguity_rate < 0.0 || ambiguity_rate > 1.0)
        throw ConfigError("synthetic: ambiguity_rate must lie in [0,1]");
    if (noise_scale < 0.0) throw ConfigError("synthetic: noise_scale must be >= 0");
}

SyntheticSpec SyntheticSpec::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("synthetic spec: ") + e.what());
    }
    SyntheticSpec s;
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    get("vocab_size", s.vocab_size);
    get("types", s.types);
    get("entities_min", s.entities_min);
    get("entities_max", s.entities_max);
    get("len_min", s.len_min);
    get("len_max", s.len_max);
    get("k", s.k);
    get("feature_dim", s.feature_dim);
    get("groundable_prob", s.groundable_prob);
    get("noise_scale", s.noise_scale);
    get("ambiguity_rate", s.ambiguity_rate);
    s.validate();
    return s;
}

SyntheticSpec SyntheticSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("synthetic spec: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::vector<std::string> synthetic_type_names(int types) {
    static const char* base[] = {"PER", "LOC", "ORG", "OTHER"};
    std::vector<std::string> names;
    for (int i = 0; i < types; ++i)
        names.push_back(types <= 4 ? base[i] : "TYPE" + std::to_string(i));
    return names;
}

namespace {

/// The entity lexicon derived deterministically from (spec, seed): surface
/// tokens, per-form type options, and one latent region feature per
/// (form, type) pair.
struct Lexicon {
    struct Form {
        std::vector<std::string> tokens;
        std::vector<int> type_options; ///< one entry, or two for ambiguous forms
        std::vector<std::vector<double>> latents; ///< parallel to type_options
    };
    std::vector<Form> forms;
};

Lexicon build_lexicon(const SyntheticSpec& spec, uint64_t seed) {
    Rng rng(seed ^ 0x1e71c09dull);
    Lexicon lex;
    const int form_count = std::max(2 * spec.types, spec.vocab_size / 8);
    const int ambiguous = static_cast<int>(spec.ambiguity_rate * form_count);
    for (int f = 0; f < form_count; ++f) {
        Lexicon::Form form;
        form.tokens.push_back("e" + std::to_string(f));
        if (rng.uniform() < 0.25) form.tokens.push_back("e" + std::to_string(f) + "b");
        form.type_options.push_back(f % spec.types);
        if (f < ambiguous && spec.types > 1)
            form.type_options.push_back((f + 1) % spec.types);
        for (size_t t = 0; t < form.type_options.size(); ++t) {
            std::vector<double> z(spec.feature_dim);
            for (double& x : z) x = rng.normal();
            form.latents.push_back(std::move(z));
        }
        lex.forms.push_back(std::move(form));
    }
    return lex;
}

BoundingBox random_box(Rng& rng) {
    BoundingBox b;
    b.x1 = rng.uniform(0.0, 0.75);
    b.y1 = rng.uniform(0.0, 0.75);
    b.x2 = b.x1 + rng.uniform(0.15, 0.25);
    b.y2 = b.y1 + rng.uniform(0.15, 0.25);
    return b;
}

std::vector<double> noisy(const std::vector<double>& z, double scale, Rng& rng) {
    std::vector<double> out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = z[i] + scale * rng.normal();
    return out;
}

} // namespace

std::vector<std::string> ambiguous_surface_tokens(const SyntheticSpec& spec, uint64_t seed) {
    const Lexicon lex = build_lexicon(spec, seed);
    std::vector<std::string> out;
    for (const auto& form : lex.forms)
        if (form.type_options.size() > 1)
            out.insert(out.end(), form.tokens.begin(), form.tokens.end());
    return out;
}

std::vector<Example> generate_synthetic(const SyntheticSpec& spec, int count, uint64_t seed) {
    spec.validate();
    const Lexicon lex = build_lexicon(spec, seed);
    Rng rng(seed);

    std::vector<Example> out;
    out.reserve(count);
    for (int idx = 0; idx < count; ++idx) {
        Example ex;
        const int target_len = spec.len_min + rng.uniform_int(spec.len_max - spec.len_min + 1);
        const int m = spec.entities_min + rng.uniform_int(spec.entities_max - spec.entities_min + 1);

        // Distinct forms for this sentence.
        std::vector<int> form_ids(lex.forms.size());
        for (size_t i = 0; i < form_ids.size(); ++i) form_ids[i] = static_cast<int>(i);
        rng.shuffle(form_ids);
        form_ids.resize(m);

        struct Planted {
            int form;
            int type_choice;
            bool groundable;
        };
        std::vector<Planted> planted;
        int entity_tokens = 0;
        for (int f : form_ids) {
            Planted pl;
            pl.form = f;
            pl.type_choice = rng.uniform_int(static_cast<int>(lex.forms[f].type_options.size()));
            pl.groundable = rng.uniform() < spec.groundable_prob;
            entity_tokens += static_cast<int>(lex.forms[f].tokens.size());
            planted.push_back(pl);
        }

        // Sentence layout: entity blocks plus context words, shuffled.
        const int context = std::max(0, target_len - entity_tokens);
        struct Item {
            int planted_idx; ///< -1 for a context word
            std::string word;
        };
        std::vector<Item> items;
        for (int i = 0; i < m; ++i) items.push_back({i, ""});
        for (int i = 0; i < context; ++i)
            items.push_back({-1, "w" + std::to_string(rng.uniform_int(spec.vocab_size))});
        rng.shuffle(items);

        std::vector<std::pair<int, int>> spans(m);
        for (const Item& item : items) {
            if (item.planted_idx < 0) {
                ex.tokens.push_back(item.word);
                continue;
            }
            const auto& form = lex.forms[planted[item.planted_idx].form];
            spans[item.planted_idx].first = static_cast<int>(ex.tokens.size());
            for (const std::string& t : form.tokens) ex.tokens.push_back(t);
            spans[item.planted_idx].second = static_cast<int>(ex.tokens.size()) - 1;
        }

        // Regions: one planted box per groundable entity, distractors for the
        // rest. Distractor features reuse latents of forms absent from this
        // sentence so they are hard but never collide with a planted entity.
        std::vector<CandidateRegion> regions;
        std::vector<std::vector<BoundingBox>> gold_boxes(m);
        for (int i = 0; i < m; ++i) {
            if (!planted[i].groundable) continue;
            const auto& form = lex.forms[planted[i].form];
            CandidateRegion r;
            r.box = random_box(rng);
            r.feature = noisy(form.latents[planted[i].type_choice], spec.noise_scale, rng);
            gold_boxes[i].push_back(r.box);
            regions.push_back(std::move(r));
        }
        while (static_cast<int>(regions.size()) < spec.k) {
            CandidateRegion r;
            r.box = random_box(rng);
            if (rng.uniform() < 0.5 && lex.forms.size() > static_cast<size_t>(m)) {
                int f;
                do {
                    f = rng.uniform_int(static_cast<int>(lex.forms.size()));
                } while (std::find(form_ids.begin(), form_ids.end(), f) != form_ids.end());
                const auto& form = lex.forms[f];
                r.feature = noisy(form.latents[rng.uniform_int(
                                      static_cast<int>(form.type_options.size()))],
                                  spec.noise_scale, rng);
            } else {
                r.feature.resize(spec.feature_dim);
                for (double& x : r.feature) x = rng.normal();
            }
            regions.push_back(std::move(r));
        }
        rng.shuffle(regions);
        ex.regions = std::move(regions);

        for (int i = 0; i < m; ++i) {
            Quadruple q;
            q.start = spans[i].first;
            q.end = spans[i].second;
            q.type_id = lex.forms[planted[i].form].type_options[planted[i].type_choice];
            if (planted[i].groundable)
                q.region = GoldBoxes{gold_boxes[i]};
            else
                q.region = Ungroundable{};
            ex.gold.push_back(q);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace gmner::synth
