#pragma once

#include "gmner/model.hpp"
#include "gmner/optim.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gmner::checkpoint {

/// Everything needed to resume or evaluate: config snapshot, vocabulary,
/// parameter tensors, optimizer state, epoch counter and RNG state. The
/// binary encoding round-trips doubles bit-exactly.
struct CheckpointData {
    RunConfig config;
    std::vector<std::string> vocab_words;
    int feature_dim = 0;
    std::vector<std::pair<std::string, Mat>> tensors;
    bool has_optimizer = false;
    int64_t adam_step = 0;
    std::vector<optim::Adam::Slot> adam_slots;
    int epoch = 0;
    uint64_t rng_s0 = 0, rng_s1 = 0;
    double best_f1 = 0.0;
};

/// Atomic save (write to a temp file, then rename).
void save(const std::string& path, const Model& model, const optim::Adam* adam, int epoch,
          const Rng* rng, double best_f1);

CheckpointData load(const std::string& path);

/// Rebuilds a model from a checkpoint; tensor names and shapes must match the
/// embedded config exactly.
std::unique_ptr<Model> restore_model(const CheckpointData& data);

} // namespace gmner::checkpoint
