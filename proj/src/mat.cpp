#include "gmner/mat.hpp"

#include <cmath>

namespace gmner {

bool Mat::all_finite() const {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void matmul(const Mat& a, const Mat& b, Mat& c) {
    c.rows = a.rows;
    c.cols = b.cols;
    c.a.assign(static_cast<size_t>(c.rows) * c.cols, 0.0);
    matmul_acc(a, b, c);
}

void matmul_acc(const Mat& a, const Mat& b, Mat& c) {
    const int m = a.rows, k = a.cols, n = b.cols;
    for (int i = 0; i < m; ++i) {
        double* cr = c.row(i);
        const double* ar = a.row(i);
        for (int l = 0; l < k; ++l) {
            const double av = ar[l];
            if (av == 0.0) continue;
            const double* br = b.row(l);
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void matmul_acc_bt(const Mat& dc, const Mat& b, Mat& da) {
    // da[i,l] += sum_j dc[i,j] * b[l,j]
    const int m = dc.rows, n = dc.cols, k = b.rows;
    for (int i = 0; i < m; ++i) {
        const double* dcr = dc.row(i);
        double* dar = da.row(i);
        for (int l = 0; l < k; ++l) {
            const double* br = b.row(l);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += dcr[j] * br[j];
            dar[l] += s;
        }
    }
}

void matmul_acc_at(const Mat& a, const Mat& dc, Mat& db) {
    // db[l,j] += sum_i a[i,l] * dc[i,j]
    const int m = a.rows, k = a.cols, n = dc.cols;
    for (int i = 0; i < m; ++i) {
        const double* ar = a.row(i);
        const double* dcr = dc.row(i);
        for (int l = 0; l < k; ++l) {
            const double av = ar[l];
            if (av == 0.0) continue;
            double* dbr = db.row(l);
            for (int j = 0; j < n; ++j) dbr[j] += av * dcr[j];
        }
    }
}

namespace {
uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace

void Rng::reseed(uint64_t seed) {
    uint64_t x = seed;
    s0_ = splitmix64(x);
    s1_ = splitmix64(x);
    if (s0_ == 0 && s1_ == 0) s1_ = 1;
}

uint64_t Rng::next_u64() {
    const uint64_t a = s0_;
    uint64_t b = s1_;
    const uint64_t result = a + b;
    b ^= a;
    s0_ = rotl(a, 24) ^ b ^ (b << 16);
    s1_ = rotl(b, 37);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
    return static_cast<int>(uniform() * n);
}

double Rng::normal() {
    // Box-Muller without the cached second value, keeping state minimal.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace gmner
