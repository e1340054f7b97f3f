#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aai/error.hpp"

namespace aai {

// Row-major: row = time step, column = feature dimension. All math runs in
// 64-bit; files serialize 32-bit (see featio.hpp / checkpoint.hpp).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// The sequence tensor used throughout the neural engine.
using Tensor2 = Mat;

inline bool all_finite(const Mat& m) { return m.allFinite(); }
inline bool all_finite(const Vec& v) { return v.allFinite(); }

// NaN poisoning is treated as an error, not a silent result.
inline void require_finite(const Mat& m, const std::string& what) {
    if (!m.allFinite())
        throw NumericError("non-finite values in " + what);
}

inline void require_finite(double x, const std::string& what) {
    if (!std::isfinite(x))
        throw NumericError("non-finite value in " + what);
}

// Deterministic RNG. std::mt19937_64 has a pinned spec, and we derive
// uniforms from raw bits instead of std::uniform_real_distribution, whose
// output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0. Modulo bias is irrelevant
    // for the shuffle/bucket sizes used here.
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    // Marsaglia polar method with cached second value.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 finalizer; used to derive independent per-item seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// In-place Fisher-Yates driven by Rng; deterministic across platforms.
template <class T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace aai
