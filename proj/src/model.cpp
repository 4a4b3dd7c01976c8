#include "gmner/model.hpp"

namespace gmner {

Model::Model(RunConfig cfg, Vocab vocab, int feature_dim)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), feature_dim_(feature_dim) {
    cfg_.validate();
    text_ = encoders::make_text_encoder(store_, vocab_.size(), cfg_.h, cfg_.text_layers, cfg_.heads);
    vision_ = encoders::make_vision_encoder(store_, feature_dim_, cfg_.h);
    queries_ = queryset::make_query_params(store_, cfg_.u, cfg_.p(), cfg_.h);
    fusion_ = fusion::make_fusion(store_, cfg_.h, cfg_.layers, cfg_.heads, cfg_.lambda_v);
    heads_ = heads::make_heads(store_, cfg_.h);
    init_params();
}

void Model::init_params() {
    Rng rng(cfg_.seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    for (const auto& p : store_.all()) {
        const std::string leaf = p->name.substr(p->name.rfind('.') + 1);
        const bool is_gamma = leaf == "gamma";
        const bool is_bias = !leaf.empty() && leaf[0] == 'b'; // b, b1, b2, beta, bias
        if (is_gamma) {
            std::fill(p->value.a.begin(), p->value.a.end(), 1.0);
        } else if (is_bias) {
            p->value.zero();
        } else {
            for (double& x : p->value.a) x = rng.normal(0.0, 0.02);
        }
        p->zero_grad();
    }
}

heads::BundleNodes Model::forward(ad::Graph& g, const Example& ex,
                                  const std::vector<int>* query_perm) {
    ad::Node ht = encoders::encode_text(g, text_, vocab_.ids(ex.tokens));
    ad::Node hv = encoders::encode_regions(g, vision_, ex.regions);

    ad::Node type_q = queryset::build_type_queries(g, queries_, cfg_, text_, vocab_);
    ad::Node hq = queryset::compose_queries(g, type_q, queries_, cfg_);
    if (query_perm != nullptr) hq = g.gather_rows(hq, *query_perm);

    fusion::FusionState state{hq, ht, hv};
    state = fusion::run_qfnet(g, state, fusion_, cfg_.ablations, cfg_.text_update, cfg_.layers);

    return heads::run_heads(g, state.q, state.t, state.v, heads_);
}

heads::PredictionBundle Model::forward_values(const Example& ex,
                                              const std::vector<int>* query_perm) {
    ad::Graph g;
    return heads::bundle_values(forward(g, ex, query_perm));
}

std::vector<heads::Prediction> Model::predict(const Example& ex) {
    return heads::decode(forward_values(ex), type_map(), cfg_.tau_c);
}

std::vector<int> Model::type_map(const std::vector<int>* query_perm) const {
    std::vector<int> map(cfg_.u);
    for (int q = 0; q < cfg_.u; ++q)
        map[q] = cfg_.type_of(query_perm != nullptr ? (*query_perm)[q] : q);
    return map;
}

void Model::set_encoders_frozen(bool frozen) {
    for (const auto& p : store_.all()) {
        if (p->group == static_cast<int>(ParamGroup::TextEncoder) ||
            p->group == static_cast<int>(ParamGroup::VisionEncoder))
            p->frozen = frozen;
    }
}

} // namespace gmner
