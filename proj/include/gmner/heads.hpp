#pragma once

#include "gmner/core.hpp"
#include "gmner/nn.hpp"

#include <vector>

namespace gmner::heads {

struct HeadParams {
    ad::Param* span_wq = nullptr;
    ad::Param* span_wt = nullptr;
    ad::Param* span_ws = nullptr; ///< start projection, h x 1
    ad::Param* span_we = nullptr; ///< end projection, h x 1
    ad::Param* region_wq = nullptr;
    ad::Param* region_wv = nullptr;
    ad::Param* region_ws = nullptr; ///< h x 1
    ad::Param* cls_wq = nullptr;
    ad::Param* cls_ws = nullptr; ///< 4h x 1
};

HeadParams make_heads(ParamStore& store, int h);

/// Graph handles for the four probability outputs.
struct BundleNodes {
    ad::Node ps; ///< u x n start probabilities
    ad::Node pe; ///< u x n end probabilities
    ad::Node pr; ///< u x (k+1) region probabilities
    ad::Node pc; ///< u x 1 existence probabilities
};

/// Plain-value snapshot of the probability matrices for one example.
struct PredictionBundle {
    Mat ps, pe, pr, pc;

    int u() const { return ps.rows; }
    int n() const { return ps.cols; }
    int k_plus_1() const { return pr.cols; }
};

std::pair<ad::Node, ad::Node> span_head(ad::Graph& g, ad::Node hq, ad::Node ht, const HeadParams& p);
ad::Node region_head(ad::Graph& g, ad::Node hq, ad::Node hv, const HeadParams& p);
ad::Node class_head(ad::Graph& g, ad::Node hq, ad::Node ht, ad::Node hv, ad::Node ps, ad::Node pe,
                    ad::Node pr, const HeadParams& p);
BundleNodes run_heads(ad::Graph& g, ad::Node hq, ad::Node ht, ad::Node hv, const HeadParams& p);

PredictionBundle bundle_values(const BundleNodes& nodes);

/// One decoded entity: quadruple with a candidate-index region, plus the
/// existence confidence and the query that produced it.
struct Prediction {
    Quadruple quad;
    double confidence = 0.0;
    int query = 0;
};

/// Greedy argmax readout of a bundle: for each query whose existence
/// probability reaches tau_c, take the argmax start, the argmax end at or
/// after the start, and the argmax region slot. Exact duplicates collapse to
/// the highest-confidence copy. All argmax ties break to the lowest index.
std::vector<Prediction> decode(const PredictionBundle& bundle, const std::vector<int>& type_of,
                               double tau_c);

} // namespace gmner::heads
