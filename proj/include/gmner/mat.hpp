#pragma once

#include <cstdint>
#include <vector>

namespace gmner {

/// Dense row-major matrix of doubles. The single numeric container used
/// throughout; vectors are 1xN or Nx1 matrices.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return a.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
    bool all_finite() const;
};

// c = a * b
void matmul(const Mat& a, const Mat& b, Mat& c);
// c += a * b
void matmul_acc(const Mat& a, const Mat& b, Mat& c);
// da += dc * b^T   (gradient of c = a*b w.r.t. a)
void matmul_acc_bt(const Mat& dc, const Mat& b, Mat& da);
// db += a^T * dc   (gradient of c = a*b w.r.t. b)
void matmul_acc_at(const Mat& a, const Mat& dc, Mat& db);

/// Deterministic PRNG (xoroshiro128+ core, Box-Muller normals). Used instead
/// of <random> distributions so that datasets and parameter initialization are
/// reproducible across standard libraries. State is two words, trivially
/// serializable into checkpoints.
class Rng {
public:
    explicit Rng(uint64_t seed = 1) { reseed(seed); }

    void reseed(uint64_t seed);
    uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    int uniform_int(int n);
    /// Standard normal.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[i], v[j]);
        }
    }

    uint64_t state0() const { return s0_; }
    uint64_t state1() const { return s1_; }
    void set_state(uint64_t s0, uint64_t s1) { s0_ = s0; s1_ = s1; }

private:
    uint64_t s0_ = 0;
    uint64_t s1_ = 0;
};

} // namespace gmner
