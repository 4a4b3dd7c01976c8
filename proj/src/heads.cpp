#include "gmner/heads.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace gmner::heads {

HeadParams make_heads(ParamStore& store, int h) {
    HeadParams p;
    p.span_wq = store.create("heads.span.wq", ParamGroup::Heads, h, h);
    p.span_wt = store.create("heads.span.wt", ParamGroup::Heads, h, h);
    p.span_ws = store.create("heads.span.ws", ParamGroup::Heads, h, 1);
    p.span_we = store.create("heads.span.we", ParamGroup::Heads, h, 1);
    p.region_wq = store.create("heads.region.wq", ParamGroup::Heads, h, h);
    p.region_wv = store.create("heads.region.wv", ParamGroup::Heads, h, h);
    p.region_ws = store.create("heads.region.ws", ParamGroup::Heads, h, 1);
    p.cls_wq = store.create("heads.cls.wq", ParamGroup::Heads, h, h);
    p.cls_ws = store.create("heads.cls.ws", ParamGroup::Heads, 4 * h, 1);
    return p;
}

std::pair<ad::Node, ad::Node> span_head(ad::Graph& g, ad::Node hq, ad::Node ht,
                                        const HeadParams& p) {
    ad::Node a = g.matmul(hq, g.param(*p.span_wq));
    ad::Node b = g.matmul(ht, g.param(*p.span_wt));
    ad::Node ps = g.sigmoid(g.biaffine_relu_logits(a, b, g.param(*p.span_ws)));
    ad::Node pe = g.sigmoid(g.biaffine_relu_logits(a, b, g.param(*p.span_we)));
    return {ps, pe};
}

ad::Node region_head(ad::Graph& g, ad::Node hq, ad::Node hv, const HeadParams& p) {
    ad::Node a = g.matmul(hq, g.param(*p.region_wq));
    ad::Node b = g.matmul(hv, g.param(*p.region_wv));
    return g.sigmoid(g.biaffine_relu_logits(a, b, g.param(*p.region_ws)));
}

ad::Node class_head(ad::Graph& g, ad::Node hq, ad::Node ht, ad::Node hv, ad::Node ps, ad::Node pe,
                    ad::Node pr, const HeadParams& p) {
    ad::Node joint = g.concat_cols({g.matmul(hq, g.param(*p.cls_wq)), g.matmul(ps, ht),
                                    g.matmul(pe, ht), g.matmul(pr, hv)});
    return g.sigmoid(g.matmul(g.relu(joint), g.param(*p.cls_ws)));
}

BundleNodes run_heads(ad::Graph& g, ad::Node hq, ad::Node ht, ad::Node hv, const HeadParams& p) {
    BundleNodes out;
    std::tie(out.ps, out.pe) = span_head(g, hq, ht, p);
    out.pr = region_head(g, hq, hv, p);
    out.pc = class_head(g, hq, ht, hv, out.ps, out.pe, out.pr, p);
    return out;
}

PredictionBundle bundle_values(const BundleNodes& nodes) {
    PredictionBundle b;
    b.ps = nodes.ps.value();
    b.pe = nodes.pe.value();
    b.pr = nodes.pr.value();
    b.pc = nodes.pc.value();
    return b;
}

namespace {
int argmax_row(const Mat& m, int row, int from = 0) {
    const double* r = m.row(row);
    int best = from;
    for (int j = from + 1; j < m.cols; ++j)
        if (r[j] > r[best]) best = j;
    return best;
}
} // namespace

std::vector<Prediction> decode(const PredictionBundle& bundle, const std::vector<int>& type_of,
                               double tau_c) {
    if (static_cast<int>(type_of.size()) != bundle.u())
        throw InvalidInputError("decode: type map size must equal the query count");

    std::vector<Prediction> kept;
    std::map<std::tuple<int, int, int, int>, size_t> seen;
    for (int q = 0; q < bundle.u(); ++q) {
        const double conf = bundle.pc.at(q, 0);
        if (conf < tau_c) continue;
        Prediction pred;
        pred.query = q;
        pred.confidence = conf;
        pred.quad.start = argmax_row(bundle.ps, q);
        pred.quad.end = argmax_row(bundle.pe, q, pred.quad.start);
        pred.quad.type_id = type_of[q];
        const int region = argmax_row(bundle.pr, q);
        pred.quad.region = region == 0 ? RegionLabel{Ungroundable{}}
                                       : RegionLabel{CandidateIndex{region}};

        const auto key = std::make_tuple(pred.quad.start, pred.quad.end, pred.quad.type_id, region);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, kept.size());
            kept.push_back(pred);
        } else if (pred.confidence > kept[it->second].confidence) {
            kept[it->second] = pred;
        }
    }
    std::sort(kept.begin(), kept.end(),
              [](const Prediction& a, const Prediction& b) { return a.query < b.query; });
    return kept;
}

} // namespace gmner::heads
