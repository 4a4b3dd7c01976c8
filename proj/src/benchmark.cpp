#include "gmner/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace gmner::benchmark {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}
} // namespace

BenchmarkReport run_benchmark(Model& model, const std::vector<Example>& dataset, int batch_size,
                              int warmup) {
    if (dataset.empty()) throw InvalidInputError("nothing to benchmark");
    if (batch_size < 1) throw InvalidInputError("benchmark: batch size must be >= 1");

    for (int i = 0; i < warmup; ++i) model.predict(dataset[i % dataset.size()]);

    // Single-example baseline over a small prefix.
    const int baseline_n = std::min<int>(static_cast<int>(dataset.size()), 32);
    const auto t_base = Clock::now();
    for (int i = 0; i < baseline_n; ++i) model.predict(dataset[i]);
    const double batch1_ms = seconds_since(t_base) * 1000.0 / baseline_n;

    BenchmarkReport r;
    r.batch_size = batch_size;
    r.examples = static_cast<long>(dataset.size());
    r.u = model.config().u;
    r.batch1_latency_ms = batch1_ms;

    std::vector<double> batch_latency_per_example;
    const auto t0 = Clock::now();
    for (size_t begin = 0; begin < dataset.size(); begin += batch_size) {
        const size_t end = std::min(dataset.size(), begin + batch_size);
        const auto tb = Clock::now();
        for (size_t i = begin; i < end; ++i) model.predict(dataset[i]);
        batch_latency_per_example.push_back(seconds_since(tb) * 1000.0 /
                                            static_cast<double>(end - begin));
    }
    r.total_seconds = seconds_since(t0);
    r.examples_per_sec = r.examples / r.total_seconds;

    double mean = 0.0;
    for (double x : batch_latency_per_example) mean += x;
    mean /= static_cast<double>(batch_latency_per_example.size());
    double var = 0.0;
    for (double x : batch_latency_per_example) var += (x - mean) * (x - mean);
    var /= static_cast<double>(batch_latency_per_example.size());
    r.mean_latency_ms = mean;
    r.latency_stddev_ms = std::sqrt(var);
    r.batch_amortizes = mean <= batch1_ms;

    double tokens = 0.0, regions = 0.0;
    for (const Example& ex : dataset) {
        tokens += static_cast<double>(ex.tokens.size());
        regions += static_cast<double>(ex.regions.size());
    }
    r.mean_tokens = tokens / static_cast<double>(dataset.size());
    r.mean_regions = regions / static_cast<double>(dataset.size());
    return r;
}

std::string format_report(const BenchmarkReport& r) {
    std::ostringstream out;
    out << "examples:            " << r.examples << "\n"
        << "batch size:          " << r.batch_size << "\n"
        << "queries (u):         " << r.u << "\n"
        << "mean tokens:         " << r.mean_tokens << "\n"
        << "mean regions:        " << r.mean_regions << "\n"
        << "total seconds:       " << r.total_seconds << "\n"
        << "examples/sec:        " << r.examples_per_sec << "\n"
        << "latency/example ms:  " << r.mean_latency_ms << " (stddev " << r.latency_stddev_ms
        << ")\n"
        << "batch-1 baseline ms: " << r.batch1_latency_ms << "\n"
        << "batching amortizes:  " << (r.batch_amortizes ? "yes" : "no") << "\n";
    return out.str();
}

} // namespace gmner::benchmark
