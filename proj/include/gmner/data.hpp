#pragma once

#include "gmner/core.hpp"
#include "gmner/heads.hpp"

#include <string>
#include <vector>

namespace gmner::data {

/// Reads the line-delimited JSON dataset format. Each line:
///   {"tokens": [...],
///    "regions": [{"box": [x1,y1,x2,y2], "feature": [...]}, ...],
///    "entities": [{"start": s, "end": e, "type": name-or-id,
///                  "boxes": [[x1,y1,x2,y2], ...] or null}, ...]}
/// Throws ParseError with the offending line number on malformed input and
/// validates every example against the schema.
std::vector<Example> load_jsonl(const std::string& path, const TypeSchema& schema);

void save_jsonl(const std::string& path, const std::vector<Example>& examples,
                const TypeSchema& schema);

/// One line per example:
///   {"entities": [{"start", "end", "type", "region_index",
///                  "box" (resolved, or null), "confidence"}]}
void write_predictions(const std::string& path,
                       const std::vector<std::vector<heads::Prediction>>& predictions,
                       const std::vector<Example>& examples, const TypeSchema& schema);

} // namespace gmner::data
