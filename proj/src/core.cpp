#include "gmner/core.hpp"

#include <algorithm>

namespace gmner {

TypeSchema TypeSchema::make(std::vector<std::string> names, const std::string& prompt_template) {
    TypeSchema s;
    s.prompts.reserve(names.size());
    for (const std::string& name : names) {
        std::string prompt = prompt_template;
        const auto pos = prompt.find("[TYPE]");
        if (pos != std::string::npos) prompt.replace(pos, 6, name);
        s.prompts.push_back(prompt);
    }
    s.names = std::move(names);
    return s;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (!a.valid() || !b.valid())
        throw InvalidInputError("iou: degenerate box (requires x1 < x2 and y1 < y2)");
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

std::vector<int> region_target(const Quadruple& gold,
                               const std::vector<CandidateRegion>& regions,
                               double iou_threshold) {
    if (iou_threshold <= 0.0 || iou_threshold >= 1.0)
        throw InvalidInputError("region_target: iou_threshold must lie in (0,1)");
    const int k = static_cast<int>(regions.size());
    std::vector<int> target(k + 1, 0);

    if (is_ungroundable(gold.region)) {
        target[0] = 1;
        return target;
    }
    const auto* gb = std::get_if<GoldBoxes>(&gold.region);
    if (gb == nullptr || gb->boxes.empty())
        throw InvalidInputError("region_target: groundable gold must carry at least one box");
    if (k == 0)
        throw InvalidInputError("region_target: groundable gold but the example has no candidate regions");

    double best_iou = -1.0;
    int best_idx = -1;
    bool any = false;
    for (int i = 0; i < k; ++i) {
        double m = 0.0;
        for (const BoundingBox& g : gb->boxes) m = std::max(m, iou(regions[i].box, g));
        if (m >= iou_threshold) {
            target[i + 1] = 1;
            any = true;
        }
        if (m > best_iou) {
            best_iou = m;
            best_idx = i;
        }
    }
    // No candidate reaches the threshold: fall back to the single best match
    // so the training signal still points at a region rather than at the
    // ungroundable slot.
    if (!any) target[best_idx + 1] = 1;
    return target;
}

void validate_example(const Example& ex, int type_count) {
    const int n = static_cast<int>(ex.tokens.size());
    if (n < 1) throw InvalidInputError("example: needs at least one token");
    for (size_t r = 0; r < ex.regions.size(); ++r) {
        if (!ex.regions[r].box.valid())
            throw InvalidInputError("example: region " + std::to_string(r) + " has a degenerate box");
    }
    if (!ex.regions.empty()) {
        const size_t w = ex.regions[0].feature.size();
        for (size_t r = 1; r < ex.regions.size(); ++r)
            if (ex.regions[r].feature.size() != w)
                throw InvalidInputError("example: region feature widths differ");
    }
    for (size_t i = 0; i < ex.gold.size(); ++i) {
        const Quadruple& q = ex.gold[i];
        if (q.start < 0 || q.end >= n || q.start > q.end)
            throw InvalidInputError("example: gold entity " + std::to_string(i) +
                                    " span out of range or inverted");
        if (q.type_id < 0 || q.type_id >= type_count)
            throw InvalidInputError("example: gold entity " + std::to_string(i) +
                                    " has unknown type id " + std::to_string(q.type_id));
        if (const auto* gb = std::get_if<GoldBoxes>(&q.region)) {
            if (gb->boxes.empty())
                throw InvalidInputError("example: gold entity " + std::to_string(i) +
                                        " has an empty box list");
            for (const BoundingBox& b : gb->boxes)
                if (!b.valid())
                    throw InvalidInputError("example: gold entity " + std::to_string(i) +
                                            " has a degenerate box");
        }
        if (std::holds_alternative<CandidateIndex>(q.region))
            throw InvalidInputError("example: gold entity " + std::to_string(i) +
                                    " uses a candidate index; gold regions must be boxes or none");
    }
}

} // namespace gmner
