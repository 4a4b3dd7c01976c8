#include "gmner/queryset.hpp"

#include <sstream>

namespace gmner::queryset {

QuerySetParams make_query_params(ParamStore& store, int u, int p, int h) {
    QuerySetParams qp;
    qp.type_table = store.create("queries.type_table", ParamGroup::Queries, p, h);
    qp.entity_table = store.create("queries.entity_table", ParamGroup::Queries, u, h);
    return qp;
}

ad::Node build_type_queries(ad::Graph& g, const QuerySetParams& qp, const RunConfig& cfg,
                            const encoders::TextEncoderParams& text, const Vocab& vocab) {
    if (cfg.type_query_mode == "toy") return g.param(*qp.type_table);

    const TypeSchema schema = cfg.schema();
    std::vector<ad::Node> rows;
    rows.reserve(schema.count());
    for (const std::string& prompt : schema.prompts) {
        std::istringstream ss(prompt);
        std::vector<std::string> tokens;
        std::string w;
        while (ss >> w) tokens.push_back(w);
        int mask = -1;
        for (size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i] == "[MASK]") mask = static_cast<int>(i);
        if (mask < 0)
            throw ConfigError("type queries: prompt lacks a [MASK] slot: " + prompt);
        ad::Node enc = encoders::encode_text(g, text, vocab.ids(tokens));
        rows.push_back(g.slice_rows(enc, mask, mask + 1));
    }
    return g.concat_rows(rows);
}

ad::Node compose_queries(ad::Graph& g, ad::Node type_queries, const QuerySetParams& qp,
                         const RunConfig& cfg) {
    const int u = cfg.u;
    const int p = cfg.p();
    if (u % p != 0) throw ConfigError("compose_queries: u must be a multiple of p");
    const bool ptq = cfg.ablations.ptq;
    const bool leq = cfg.ablations.leq;
    if (!ptq && !leq)
        throw ConfigError("compose_queries: cannot ablate both query parts at once");

    std::vector<int> layout(u);
    for (int q = 0; q < u; ++q) layout[q] = cfg.type_of(q);

    if (!ptq) return g.param(*qp.entity_table);
    ad::Node tiled = g.gather_rows(type_queries, layout);
    if (!leq) return tiled;
    return g.add(g.param(*qp.entity_table), tiled);
}

} // namespace gmner::queryset
