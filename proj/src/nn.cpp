#include "gmner/nn.hpp"

#include "gmner/errors.hpp"

#include <cmath>

namespace gmner {

ad::Param* ParamStore::create(const std::string& name, ParamGroup group, int rows, int cols) {
    auto p = std::make_unique<ad::Param>();
    p->name = name;
    p->group = static_cast<int>(group);
    p->value = Mat(rows, cols);
    params_.push_back(std::move(p));
    return params_.back().get();
}

ad::Param* ParamStore::find(const std::string& name) {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

std::vector<ad::Param*> ParamStore::group(ParamGroup g) const {
    std::vector<ad::Param*> out;
    for (const auto& p : params_)
        if (p->group == static_cast<int>(g)) out.push_back(p.get());
    return out;
}

void ParamStore::zero_grads() {
    for (const auto& p : params_) p->zero_grad();
}

namespace nn {

ad::Node multi_head_attention(ad::Graph& g, ad::Node queries, ad::Node keys_values,
                              const MhaParams& p, int heads) {
    const int h = queries.cols();
    if (h % heads != 0) throw ConfigError("attention: h must be divisible by heads");
    const int dh = h / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    ad::Node q = g.matmul(queries, g.param(*p.wq));
    ad::Node k = g.matmul(keys_values, g.param(*p.wk));
    ad::Node v = g.matmul(keys_values, g.param(*p.wv));

    std::vector<ad::Node> ctx;
    ctx.reserve(heads);
    for (int i = 0; i < heads; ++i) {
        ad::Node qh = g.slice_cols(q, i * dh, (i + 1) * dh);
        ad::Node kh = g.slice_cols(k, i * dh, (i + 1) * dh);
        ad::Node vh = g.slice_cols(v, i * dh, (i + 1) * dh);
        ad::Node att = g.softmax_rows(g.scale(g.matmul(qh, g.transpose(kh)), scale));
        ctx.push_back(g.matmul(att, vh));
    }
    return g.matmul(g.concat_cols(ctx), g.param(*p.wo));
}

ad::Node feed_forward(ad::Graph& g, ad::Node x, const FfnParams& p) {
    ad::Node hidden = g.relu(g.add_row(g.matmul(x, g.param(*p.w1)), g.param(*p.b1)));
    return g.add_row(g.matmul(hidden, g.param(*p.w2)), g.param(*p.b2));
}

ad::Node layer_norm(ad::Graph& g, ad::Node x, const LayerNormParams& p) {
    return g.layer_norm_rows(x, g.param(*p.gamma), g.param(*p.beta));
}

ad::Node residual_norm(ad::Graph& g, ad::Node x, ad::Node sub, const LayerNormParams& p) {
    return layer_norm(g, g.add(x, sub), p);
}

MhaParams make_mha(ParamStore& store, const std::string& prefix, ParamGroup group, int h) {
    MhaParams p;
    p.wq = store.create(prefix + ".wq", group, h, h);
    p.wk = store.create(prefix + ".wk", group, h, h);
    p.wv = store.create(prefix + ".wv", group, h, h);
    p.wo = store.create(prefix + ".wo", group, h, h);
    return p;
}

FfnParams make_ffn(ParamStore& store, const std::string& prefix, ParamGroup group, int h, int hidden) {
    FfnParams p;
    p.w1 = store.create(prefix + ".w1", group, h, hidden);
    p.b1 = store.create(prefix + ".b1", group, 1, hidden);
    p.w2 = store.create(prefix + ".w2", group, hidden, h);
    p.b2 = store.create(prefix + ".b2", group, 1, h);
    return p;
}

LayerNormParams make_layer_norm(ParamStore& store, const std::string& prefix, ParamGroup group, int h) {
    LayerNormParams p;
    p.gamma = store.create(prefix + ".gamma", group, 1, h);
    p.beta = store.create(prefix + ".beta", group, 1, h);
    return p;
}

} // namespace nn
} // namespace gmner
