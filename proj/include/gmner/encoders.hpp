#pragma once

#include "gmner/core.hpp"
#include "gmner/nn.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace gmner {

/// Word -> id table. Id 0 is reserved for unknown words.
class Vocab {
public:
    static constexpr int kUnknown = 0;

    Vocab() { add("<unk>"); }

    int add(const std::string& word);
    int lookup(const std::string& word) const;
    int size() const { return static_cast<int>(words_.size()); }
    const std::vector<std::string>& words() const { return words_; }

    std::vector<int> ids(const std::vector<std::string>& tokens) const;

    /// Vocabulary over the training corpus plus the prompt tokens, so that
    /// adapter-mode type queries read real embeddings.
    static Vocab build(const std::vector<Example>& data, const TypeSchema& schema);

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

namespace encoders {

/// Toy trainable text encoder: an embedding table with a small self-attention
/// stack on top. Context-free at depth 0; no positional encoding at any depth,
/// so equal tokens in one sentence always encode identically.
///
/// Adapter contract for pretrained subword encoders: produce one row per input
/// word by first-subword selection, yielding the same n x h surface as this
/// encoder. Nothing downstream depends on how the rows were produced.
struct TextEncoderParams {
    ad::Param* embedding = nullptr;
    struct Block {
        nn::MhaParams attn;
        nn::LayerNormParams ln_attn;
        nn::FfnParams ffn;
        nn::LayerNormParams ln_ffn;
    };
    std::vector<Block> blocks;
    int heads = 4;
};

/// Toy trainable vision encoder: a linear projection of raw region features
/// plus the learned embedding of the reserved ungroundable slot.
struct VisionEncoderParams {
    ad::Param* projection = nullptr;
    ad::Param* bias = nullptr;
    ad::Param* ungroundable = nullptr;
    int feature_dim = 0;
};

TextEncoderParams make_text_encoder(ParamStore& store, int vocab_size, int h, int layers, int heads);
VisionEncoderParams make_vision_encoder(ParamStore& store, int feature_dim, int h);

/// n x h token representations. Throws InvalidInputError on empty input.
ad::Node encode_text(ad::Graph& g, const TextEncoderParams& p, const std::vector<int>& token_ids);

/// (k+1) x h region representations; row 0 is the ungroundable token.
/// Throws InvalidInputError on empty region lists or feature width mismatch.
ad::Node encode_regions(ad::Graph& g, const VisionEncoderParams& p,
                        const std::vector<CandidateRegion>& regions);

} // namespace encoders
} // namespace gmner
