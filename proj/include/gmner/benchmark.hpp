#pragma once

#include "gmner/model.hpp"

#include <string>

namespace gmner::benchmark {

struct BenchmarkReport {
    int batch_size = 1;
    long examples = 0;
    double total_seconds = 0.0;
    double examples_per_sec = 0.0;
    double mean_latency_ms = 0.0;
    double latency_stddev_ms = 0.0;
    double mean_tokens = 0.0;
    double mean_regions = 0.0;
    int u = 0;
    double batch1_latency_ms = 0.0; ///< single-example baseline
    bool batch_amortizes = false;   ///< whether batching beat the baseline
};

/// Timed forward+decode over the dataset in batches of `batch_size`, with
/// `warmup` untimed passes first. Throws InvalidInputError("nothing to
/// benchmark") on an empty dataset.
BenchmarkReport run_benchmark(Model& model, const std::vector<Example>& dataset, int batch_size,
                              int warmup = 8);

std::string format_report(const BenchmarkReport& r);

} // namespace gmner::benchmark
