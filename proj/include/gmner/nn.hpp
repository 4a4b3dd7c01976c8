#pragma once

#include "gmner/autodiff.hpp"

#include <memory>
#include <string>
#include <vector>

namespace gmner {

/// Parameter groups, used for freezing and for canonical checkpoint order.
enum class ParamGroup : int {
    TextEncoder = 0,
    VisionEncoder = 1,
    Queries = 2,
    Fusion = 3,
    Heads = 4,
};

/// Owns every trainable tensor of a model. Creation order is the canonical
/// serialization order.
class ParamStore {
public:
    ad::Param* create(const std::string& name, ParamGroup group, int rows, int cols);
    ad::Param* find(const std::string& name);
    const std::vector<std::unique_ptr<ad::Param>>& all() const { return params_; }
    std::vector<ad::Param*> group(ParamGroup g) const;
    void zero_grads();

private:
    std::vector<std::unique_ptr<ad::Param>> params_;
};

namespace nn {

struct MhaParams {
    ad::Param* wq = nullptr;
    ad::Param* wk = nullptr;
    ad::Param* wv = nullptr;
    ad::Param* wo = nullptr;
};

struct FfnParams {
    ad::Param* w1 = nullptr;
    ad::Param* b1 = nullptr;
    ad::Param* w2 = nullptr;
    ad::Param* b2 = nullptr;
};

struct LayerNormParams {
    ad::Param* gamma = nullptr;
    ad::Param* beta = nullptr;
};

/// Standard scaled dot-product attention, `queries` attending over
/// `keys_values`, with per-head column slicing and an output projection.
ad::Node multi_head_attention(ad::Graph& g, ad::Node queries, ad::Node keys_values,
                              const MhaParams& p, int heads);

/// Position-wise two-layer ReLU network.
ad::Node feed_forward(ad::Graph& g, ad::Node x, const FfnParams& p);

ad::Node layer_norm(ad::Graph& g, ad::Node x, const LayerNormParams& p);

/// x + sublayer followed by layer norm.
ad::Node residual_norm(ad::Graph& g, ad::Node x, ad::Node sub, const LayerNormParams& p);

MhaParams make_mha(ParamStore& store, const std::string& prefix, ParamGroup group, int h);
FfnParams make_ffn(ParamStore& store, const std::string& prefix, ParamGroup group, int h, int hidden);
LayerNormParams make_layer_norm(ParamStore& store, const std::string& prefix, ParamGroup group, int h);

} // namespace nn
} // namespace gmner
