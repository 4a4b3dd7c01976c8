#pragma once

#include "gmner/core.hpp"
#include "gmner/mat.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmner::synth {

/// Controls the synthetic corpus. Entity surface forms are dedicated tokens
/// whose identity correlates with their type; groundable entities plant one
/// candidate region whose feature is the entity's latent vector plus noise.
/// An ambiguous form can realize two different types, distinguishable only
/// through its image region.
struct SyntheticSpec {
    int vocab_size = 200;
    int types = 4;
    int entities_min = 1;
    int entities_max = 3;
    int len_min = 8;
    int len_max = 14;
    int k = 8;
    int feature_dim = 32;
    double groundable_prob = 0.7;
    double noise_scale = 0.1;
    double ambiguity_rate = 0.2;

    void validate() const;
    static SyntheticSpec from_json_file(const std::string& path);
    static SyntheticSpec from_json_text(const std::string& text);
};

/// Deterministic in (spec, count, seed).
std::vector<Example> generate_synthetic(const SyntheticSpec& spec, int count, uint64_t seed);

/// Surface tokens of the forms that can realize two types under this
/// (spec, seed); lets callers partition examples by ambiguity.
std::vector<std::string> ambiguous_surface_tokens(const SyntheticSpec& spec, uint64_t seed);

/// Type names for a synthetic corpus: the four standard tags when types <= 4,
/// generic names otherwise.
std::vector<std::string> synthetic_type_names(int types);

} // namespace gmner::synth
