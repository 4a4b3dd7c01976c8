#pragma once

#include "gmner/errors.hpp"

#include <string>
#include <variant>
#include <vector>

namespace gmner {

/// Axis-aligned box, top-left (x1,y1) and bottom-right (x2,y2). Units are
/// whatever the dataset uses (pixels or normalized); all geometry here is
/// unit-agnostic.
struct BoundingBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double area() const { return (x2 - x1) * (y2 - y1); }
    bool valid() const { return x1 < x2 && y1 < y2; }
};

/// Region label of a quadruple. Gold entities carry either "no region" or a
/// set of gold boxes; predictions carry an index into the example's candidate
/// list, where index 0 is the reserved ungroundable slot.
struct Ungroundable {};
struct GoldBoxes {
    std::vector<BoundingBox> boxes;
};
struct CandidateIndex {
    int index = 0;
};
using RegionLabel = std::variant<Ungroundable, GoldBoxes, CandidateIndex>;

inline bool is_ungroundable(const RegionLabel& r) {
    return std::holds_alternative<Ungroundable>(r);
}

/// One entity record: token span [start, end], type id, region label.
struct Quadruple {
    int start = 0;
    int end = 0;
    int type_id = 0;
    RegionLabel region = Ungroundable{};
};

/// One candidate image region: its box and the backbone feature vector.
struct CandidateRegion {
    BoundingBox box;
    std::vector<double> feature;
};

/// One text+image instance.
struct Example {
    std::vector<std::string> tokens;
    std::vector<CandidateRegion> regions;
    std::vector<Quadruple> gold;
};

/// The entity type inventory and the per-type prompt strings used to derive
/// type-grained queries.
struct TypeSchema {
    std::vector<std::string> names;
    std::vector<std::string> prompts;

    int count() const { return static_cast<int>(names.size()); }
    static TypeSchema make(std::vector<std::string> names, const std::string& prompt_template);
};

/// Intersection-over-union of two valid boxes; 0 when disjoint.
/// Throws InvalidInputError on degenerate (zero-area) boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Maps a gold region label onto the candidate-index space used by the region
/// head: a 0/1 vector of length k+1. Slot 0 marks the ungroundable case;
/// slot i+1 marks candidate i. Groundable entities become multi-hot over all
/// candidates whose IoU with any gold box reaches the threshold; when none
/// qualifies, the single best-IoU candidate is used (lowest index on ties).
std::vector<int> region_target(const Quadruple& gold,
                               const std::vector<CandidateRegion>& regions,
                               double iou_threshold);

/// Validates Example invariants (span ranges, box validity, feature widths).
/// Throws InvalidInputError with a description of the first violation.
void validate_example(const Example& ex, int type_count);

} // namespace gmner
