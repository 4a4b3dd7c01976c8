#pragma once

#include "gmner/config.hpp"
#include "gmner/nn.hpp"

namespace gmner::fusion {

/// One fusion layer: query-text cross-attention (both directions), the
/// query-region prefix integration, and the similarity-aware aggregator.
struct FusionLayerParams {
    // query <- text and text <- query cross-attention sublayers
    nn::MhaParams q_from_t;
    nn::MhaParams t_from_q;
    nn::LayerNormParams ln_q_attn, ln_t_attn;
    nn::FfnParams ffn_q, ffn_t;
    nn::LayerNormParams ln_q_ffn, ln_t_ffn;

    // region refinement with query-derived key/value prefixes
    ad::Param* region_wq = nullptr;
    ad::Param* region_wk = nullptr;
    ad::Param* region_wv = nullptr;
    ad::Param* prefix_wk = nullptr; ///< key half of the h -> 2xh prefix projection
    ad::Param* prefix_wv = nullptr; ///< value half
    nn::LayerNormParams ln_v;

    // similarity-aware aggregator
    ad::Param* agg_w1 = nullptr;
    ad::Param* agg_w2 = nullptr;
    ad::Param* agg_b = nullptr;
    nn::LayerNormParams ln_agg;
};

struct FusionParams {
    std::vector<FusionLayerParams> layers;
    int heads = 4;
    double lambda_v = 0.5; ///< visual mixing weight; text weight is 1 - lambda_v
};

/// The three streams at a given depth: queries (u x h), text (n x h),
/// regions ((k+1) x h).
struct FusionState {
    ad::Node q, t, v;
};

FusionParams make_fusion(ParamStore& store, int h, int layers, int heads, double lambda_v);

/// Queries attend over text tokens and (when text_update) text attends back
/// over queries, each direction with residual + norm and a feed-forward
/// sublayer. Both directions read this layer's input states.
FusionState query_text_cross_attention(ad::Graph& g, const FusionState& s,
                                       const FusionLayerParams& p, int heads, bool text_update);

/// Region self-attention with query-derived prefixes concatenated in front of
/// the region keys and values; softmax runs over k+1+u slots, scaled by
/// 1/sqrt(h). include_prefixes=false reduces to plain region self-attention.
ad::Node prefix_attention(ad::Graph& g, const FusionState& s, const FusionLayerParams& p,
                          bool include_prefixes = true);

/// Per query: softmax dot-product similarities over text tokens and region
/// rows, lambda-weighted pooling, then the tanh affine combiner, with
/// residual + norm.
ad::Node similarity_aggregate(ad::Graph& g, const FusionState& s, const FusionLayerParams& p,
                              double lambda_v);

/// Applies cross-attention -> prefix integration -> aggregator per layer.
/// Ablation flags skip the corresponding sublayer in every layer.
FusionState run_qfnet(ad::Graph& g, FusionState s, const FusionParams& p,
                      const AblationFlags& ab, bool text_update, int layer_count);

} // namespace gmner::fusion
