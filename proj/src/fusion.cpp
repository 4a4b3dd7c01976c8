#include "gmner/fusion.hpp"

#include "gmner/errors.hpp"

#include <cmath>

namespace gmner::fusion {

FusionParams make_fusion(ParamStore& store, int h, int layers, int heads, double lambda_v) {
    FusionParams fp;
    fp.heads = heads;
    fp.lambda_v = lambda_v;
    for (int l = 0; l < layers; ++l) {
        const std::string prefix = "fusion.layer" + std::to_string(l);
        FusionLayerParams p;
        p.q_from_t = nn::make_mha(store, prefix + ".q_from_t", ParamGroup::Fusion, h);
        p.t_from_q = nn::make_mha(store, prefix + ".t_from_q", ParamGroup::Fusion, h);
        p.ln_q_attn = nn::make_layer_norm(store, prefix + ".ln_q_attn", ParamGroup::Fusion, h);
        p.ln_t_attn = nn::make_layer_norm(store, prefix + ".ln_t_attn", ParamGroup::Fusion, h);
        p.ffn_q = nn::make_ffn(store, prefix + ".ffn_q", ParamGroup::Fusion, h, 2 * h);
        p.ffn_t = nn::make_ffn(store, prefix + ".ffn_t", ParamGroup::Fusion, h, 2 * h);
        p.ln_q_ffn = nn::make_layer_norm(store, prefix + ".ln_q_ffn", ParamGroup::Fusion, h);
        p.ln_t_ffn = nn::make_layer_norm(store, prefix + ".ln_t_ffn", ParamGroup::Fusion, h);
        p.region_wq = store.create(prefix + ".region.wq", ParamGroup::Fusion, h, h);
        p.region_wk = store.create(prefix + ".region.wk", ParamGroup::Fusion, h, h);
        p.region_wv = store.create(prefix + ".region.wv", ParamGroup::Fusion, h, h);
        p.prefix_wk = store.create(prefix + ".prefix.wk", ParamGroup::Fusion, h, h);
        p.prefix_wv = store.create(prefix + ".prefix.wv", ParamGroup::Fusion, h, h);
        p.ln_v = nn::make_layer_norm(store, prefix + ".ln_v", ParamGroup::Fusion, h);
        p.agg_w1 = store.create(prefix + ".agg.w1", ParamGroup::Fusion, h, h);
        p.agg_w2 = store.create(prefix + ".agg.w2", ParamGroup::Fusion, h, h);
        p.agg_b = store.create(prefix + ".agg.b", ParamGroup::Fusion, 1, h);
        p.ln_agg = nn::make_layer_norm(store, prefix + ".ln_agg", ParamGroup::Fusion, h);
        fp.layers.push_back(p);
    }
    return fp;
}

FusionState query_text_cross_attention(ad::Graph& g, const FusionState& s,
                                       const FusionLayerParams& p, int heads, bool text_update) {
    FusionState out = s;

    ad::Node q_att = nn::multi_head_attention(g, s.q, s.t, p.q_from_t, heads);
    out.q = nn::residual_norm(g, s.q, q_att, p.ln_q_attn);
    out.q = nn::residual_norm(g, out.q, nn::feed_forward(g, out.q, p.ffn_q), p.ln_q_ffn);

    if (text_update) {
        // The text pass reads the layer-input queries, so both directions
        // update in parallel.
        ad::Node t_att = nn::multi_head_attention(g, s.t, s.q, p.t_from_q, heads);
        out.t = nn::residual_norm(g, s.t, t_att, p.ln_t_attn);
        out.t = nn::residual_norm(g, out.t, nn::feed_forward(g, out.t, p.ffn_t), p.ln_t_ffn);
    }
    return out;
}

ad::Node prefix_attention(ad::Graph& g, const FusionState& s, const FusionLayerParams& p,
                          bool include_prefixes) {
    const int h = s.v.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(h));

    ad::Node q = g.matmul(s.v, g.param(*p.region_wq));
    ad::Node k = g.matmul(s.v, g.param(*p.region_wk));
    ad::Node v = g.matmul(s.v, g.param(*p.region_wv));
    if (include_prefixes) {
        ad::Node pk = g.matmul(s.q, g.param(*p.prefix_wk));
        ad::Node pv = g.matmul(s.q, g.param(*p.prefix_wv));
        k = g.concat_rows({pk, k});
        v = g.concat_rows({pv, v});
    }
    ad::Node att = g.softmax_rows(g.scale(g.matmul(q, g.transpose(k)), scale));
    ad::Node refined = g.matmul(att, v);
    return nn::residual_norm(g, s.v, refined, p.ln_v);
}

ad::Node similarity_aggregate(ad::Graph& g, const FusionState& s, const FusionLayerParams& p,
                              double lambda_v) {
    if (lambda_v < 0.0 || lambda_v > 1.0)
        throw InvalidInputError("similarity_aggregate: lambda_v must lie in [0,1]");
    const double lambda_t = 1.0 - lambda_v;

    ad::Node sim_t = g.softmax_rows(g.matmul(s.q, g.transpose(s.t)));
    ad::Node sim_v = g.softmax_rows(g.matmul(s.q, g.transpose(s.v)));
    ad::Node pooled = g.add(g.scale(g.matmul(sim_t, s.t), lambda_t),
                            g.scale(g.matmul(sim_v, s.v), lambda_v));

    ad::Node inner = g.tanh_act(g.add(g.matmul(s.q, g.param(*p.agg_w1)), pooled));
    ad::Node combined = g.add_row(g.matmul(inner, g.param(*p.agg_w2)), g.param(*p.agg_b));
    return nn::residual_norm(g, s.q, combined, p.ln_agg);
}

FusionState run_qfnet(ad::Graph& g, FusionState s, const FusionParams& p,
                      const AblationFlags& ab, bool text_update, int layer_count) {
    if (layer_count < 1) throw ConfigError("run_qfnet: layer count must be >= 1");
    if (layer_count > static_cast<int>(p.layers.size()))
        throw ConfigError("run_qfnet: more layers requested than parameters built");
    for (int l = 0; l < layer_count; ++l) {
        const FusionLayerParams& lp = p.layers[l];
        if (ab.qct) s = query_text_cross_attention(g, s, lp, p.heads, text_update);
        if (ab.qpi) s.v = prefix_attention(g, s, lp, true);
        if (ab.sag) s.q = similarity_aggregate(g, s, lp, p.lambda_v);
    }
    return s;
}

} // namespace gmner::fusion
