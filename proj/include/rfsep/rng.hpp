#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "rfsep/signal.hpp"

namespace rfsep {

// splitmix64 finalizer constants (Steele, Lea, Flood 2014)
inline constexpr std::uint64_t kMixMul1 = 0xbf58476d1ce4e5b9ULL;
inline constexpr std::uint64_t kMixMul2 = 0x94d049bb133111ebULL;
inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// 64-bit multiply-xor-shift avalanche; bijective on u64.
constexpr std::uint64_t avalanche64(std::uint64_t z) {
    z ^= z >> 30;
    z *= kMixMul1;
    z ^= z >> 27;
    z *= kMixMul2;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ULL;
    }
    return h;
}

/// Deterministic per-trial seed stream. For a fixed (base, tag) the map
/// trial -> seed is injective, so consecutive trials never collide.
constexpr std::uint64_t derive_trial_seed(std::uint64_t base_seed, std::string_view experiment_tag,
                                          std::uint64_t trial_index) {
    std::uint64_t h = avalanche64(base_seed + kGoldenGamma);
    h = avalanche64(h ^ fnv1a64(experiment_tag));
    return avalanche64(h ^ (trial_index + kGoldenGamma));
}

/// splitmix64 stream with Box-Muller normals. Self-contained so that
/// identical seeds give identical draws on every platform and toolchain.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += kGoldenGamma);
        z = (z ^ (z >> 30)) * kMixMul1;
        z = (z ^ (z >> 27)) * kMixMul2;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), rejection-sampled (no modulo bias).
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw InvalidParameterError("uniform_below: bound must be positive");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % bound;
    }

    /// Standard real normal N(0, 1).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = 1.0 - uniform();  // (0, 1]
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double t = 2.0 * std::numbers::pi * v;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Circularly-symmetric standard complex normal CN(0, 1).
    cdouble cnormal() {
        const double s = std::numbers::sqrt2;
        const double re = normal() / s;
        const double im = normal() / s;
        return {re, im};
    }

    /// Vector of iid CN(0, 1) samples.
    ComplexSignal cnormal_vector(Eigen::Index n) {
        ComplexSignal z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = cnormal();
        return z;
    }

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rfsep
