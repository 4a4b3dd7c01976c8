#pragma once

#include "gmner/config.hpp"
#include "gmner/encoders.hpp"
#include "gmner/nn.hpp"

namespace gmner::queryset {

struct QuerySetParams {
    /// Toy-mode stand-in for the prompt readout: one trainable row per type.
    ad::Param* type_table = nullptr;
    /// Learnable entity-grained table, u x h, init N(0, 0.02).
    ad::Param* entity_table = nullptr;
};

QuerySetParams make_query_params(ParamStore& store, int u, int p, int h);

/// p x h type-grained query embeddings. Toy mode reads the dedicated table;
/// adapter mode runs each type prompt through the text encoder and reads the
/// row at the [MASK] position.
ad::Node build_type_queries(ad::Graph& g, const QuerySetParams& qp, const RunConfig& cfg,
                            const encoders::TextEncoderParams& text, const Vocab& vocab);

/// u x h composed query set. Under the tile layout query q carries type
/// q mod p; under the block layout, q / (u/p). Ablations: ptq=false drops the
/// type addend, leq=false drops the trainable entity part (leaving only the
/// repeated type rows).
ad::Node compose_queries(ad::Graph& g, ad::Node type_queries, const QuerySetParams& qp,
                         const RunConfig& cfg);

} // namespace gmner::queryset
