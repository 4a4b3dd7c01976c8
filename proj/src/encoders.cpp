#include "gmner/encoders.hpp"

#include <sstream>

namespace gmner {

int Vocab::add(const std::string& word) {
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(words_.size());
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
}

int Vocab::lookup(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnknown : it->second;
}

std::vector<int> Vocab::ids(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(lookup(t));
    return out;
}

Vocab Vocab::build(const std::vector<Example>& data, const TypeSchema& schema) {
    Vocab v;
    for (const Example& ex : data)
        for (const std::string& t : ex.tokens) v.add(t);
    for (const std::string& prompt : schema.prompts) {
        std::istringstream ss(prompt);
        std::string w;
        while (ss >> w) v.add(w);
    }
    return v;
}

namespace encoders {

TextEncoderParams make_text_encoder(ParamStore& store, int vocab_size, int h, int layers, int heads) {
    TextEncoderParams p;
    p.heads = heads;
    p.embedding = store.create("text.embedding", ParamGroup::TextEncoder, vocab_size, h);
    for (int l = 0; l < layers; ++l) {
        const std::string prefix = "text.block" + std::to_string(l);
        TextEncoderParams::Block b;
        b.attn = nn::make_mha(store, prefix + ".attn", ParamGroup::TextEncoder, h);
        b.ln_attn = nn::make_layer_norm(store, prefix + ".ln_attn", ParamGroup::TextEncoder, h);
        b.ffn = nn::make_ffn(store, prefix + ".ffn", ParamGroup::TextEncoder, h, 2 * h);
        b.ln_ffn = nn::make_layer_norm(store, prefix + ".ln_ffn", ParamGroup::TextEncoder, h);
        p.blocks.push_back(b);
    }
    return p;
}

VisionEncoderParams make_vision_encoder(ParamStore& store, int feature_dim, int h) {
    VisionEncoderParams p;
    p.feature_dim = feature_dim;
    p.projection = store.create("vision.projection", ParamGroup::VisionEncoder, feature_dim, h);
    p.bias = store.create("vision.bias", ParamGroup::VisionEncoder, 1, h);
    p.ungroundable = store.create("vision.ungroundable", ParamGroup::VisionEncoder, 1, h);
    return p;
}

ad::Node encode_text(ad::Graph& g, const TextEncoderParams& p, const std::vector<int>& token_ids) {
    if (token_ids.empty()) throw InvalidInputError("encode_text: empty token list");
    for (int id : token_ids)
        if (id < 0 || id >= p.embedding->value.rows)
            throw InvalidInputError("encode_text: token id out of vocabulary range");

    ad::Node x = g.gather_rows(g.param(*p.embedding), token_ids);
    for (const auto& b : p.blocks) {
        ad::Node att = nn::multi_head_attention(g, x, x, b.attn, p.heads);
        x = nn::residual_norm(g, x, att, b.ln_attn);
        ad::Node ff = nn::feed_forward(g, x, b.ffn);
        x = nn::residual_norm(g, x, ff, b.ln_ffn);
    }
    return x;
}

ad::Node encode_regions(ad::Graph& g, const VisionEncoderParams& p,
                        const std::vector<CandidateRegion>& regions) {
    if (regions.empty()) throw InvalidInputError("encode_regions: need at least one candidate region");
    const int k = static_cast<int>(regions.size());
    Mat raw(k, p.feature_dim);
    for (int i = 0; i < k; ++i) {
        if (static_cast<int>(regions[i].feature.size()) != p.feature_dim)
            throw InvalidInputError("encode_regions: feature dimension mismatch at region " +
                                    std::to_string(i));
        for (int j = 0; j < p.feature_dim; ++j) raw.at(i, j) = regions[i].feature[j];
    }
    ad::Node projected = g.add_row(g.matmul(g.constant(std::move(raw)), g.param(*p.projection)),
                                   g.param(*p.bias));
    return g.concat_rows({g.param(*p.ungroundable), projected});
}

} // namespace encoders
} // namespace gmner
