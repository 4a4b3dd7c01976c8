#pragma once

#include "gmner/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmner {

/// Which sublayers / query parts are active. Every flag defaults to the full
/// model; switching one off reproduces the corresponding reduced variant.
struct AblationFlags {
    bool ptq = true; ///< type-grained query addend
    bool leq = true; ///< learnable entity-grained queries
    bool qct = true; ///< query-text cross-attention
    bool qpi = true; ///< query-region prefix integration
    bool sag = true; ///< similarity-aware aggregator
    bool bml = true; ///< bipartite matching loss (off = fixed-order loss)
};

/// Full run configuration. JSON files mirror these fields; see README for the
/// schema. Defaults are the desk-scale setup.
struct RunConfig {
    int h = 64;          ///< hidden size
    int u = 12;          ///< query count (must be divisible by p)
    int k = 8;           ///< candidate regions per image (synthetic data)
    int layers = 3;      ///< fusion depth
    int heads = 4;       ///< attention heads (h % heads == 0)
    int text_layers = 1; ///< toy text encoder self-attention depth

    double lambda_v = 0.5;      ///< visual share of the aggregator mix; text share is 1 - lambda_v
    double tau_c = 0.5;         ///< existence threshold at decode time
    double iou_threshold = 0.5; ///< region-target construction threshold

    double learning_rate = 3e-3;
    int batch_size = 16;
    int epochs = 30;
    double warmup_ratio = 0.05;
    int freeze_epochs = 5;
    uint64_t seed = 7;

    AblationFlags ablations;
    std::string query_layout = "tile";   ///< "tile" (type id = q mod p) or "block" (q / d)
    std::string type_query_mode = "toy"; ///< "toy" table or "adapter" prompt readout
    bool text_update = true;             ///< cross-attention also refines the text stream
    bool matching_log_cost = false;      ///< matching cost in log space instead of raw probabilities
    bool pad_duplicate = false;          ///< pad gold by cycling entries instead of null labels
    bool loss_negatives = true;          ///< train with complement terms on matched rows
    std::string prompt_template = "[TYPE] is an entity type about [MASK]";
    std::vector<std::string> type_names = {"PER", "LOC", "ORG", "OTHER"};

    std::string train_path;
    std::string dev_path;
    std::string checkpoint_path = "model.ckpt";
    std::string report_path;

    int p() const { return static_cast<int>(type_names.size()); }
    int queries_per_type() const { return u / p(); }
    TypeSchema schema() const { return TypeSchema::make(type_names, prompt_template); }

    /// Query slot -> type id under the configured layout.
    int type_of(int q) const;

    /// Throws ConfigError on any violated invariant.
    void validate() const;

    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

} // namespace gmner
