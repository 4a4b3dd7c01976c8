#pragma once

#include "gmner/config.hpp"
#include "gmner/encoders.hpp"
#include "gmner/fusion.hpp"
#include "gmner/heads.hpp"
#include "gmner/queryset.hpp"

namespace gmner {

/// The full network: encoders, query construction, fusion stack, prediction
/// heads. Owns every parameter. Forward passes are pure given the parameters,
/// so concurrent read-only evaluation is safe; training mutates parameters
/// single-writer.
class Model {
public:
    Model(RunConfig cfg, Vocab vocab, int feature_dim);

    /// Builds the forward graph for one example. An optional permutation
    /// reorders the composed query rows (used by equivariance checks; pair it
    /// with type_map(perm) at decode time).
    heads::BundleNodes forward(ad::Graph& g, const Example& ex,
                               const std::vector<int>* query_perm = nullptr);

    /// Forward + value extraction, no gradient bookkeeping beyond the graph.
    heads::PredictionBundle forward_values(const Example& ex,
                                           const std::vector<int>* query_perm = nullptr);

    /// Decoded predictions for one example at the configured threshold.
    std::vector<heads::Prediction> predict(const Example& ex);

    /// Query slot -> type id map, optionally composed with a permutation of
    /// the query rows.
    std::vector<int> type_map(const std::vector<int>* query_perm = nullptr) const;

    const RunConfig& config() const { return cfg_; }
    const Vocab& vocab() const { return vocab_; }
    int feature_dim() const { return feature_dim_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    /// Suppresses optimizer updates for the encoder parameter groups.
    void set_encoders_frozen(bool frozen);

    /// Deterministic initialization from the config seed.
    void init_params();

private:
    RunConfig cfg_;
    Vocab vocab_;
    int feature_dim_;
    ParamStore store_;
    encoders::TextEncoderParams text_;
    encoders::VisionEncoderParams vision_;
    queryset::QuerySetParams queries_;
    fusion::FusionParams fusion_;
    heads::HeadParams heads_;
};

} // namespace gmner
