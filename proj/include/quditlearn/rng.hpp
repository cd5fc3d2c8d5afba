#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "quditlearn/common.hpp"

namespace quditlearn {

// Counter-based 64-bit generator (SplitMix64 finalizer over an affine counter).
// Value i of stream s under seed k is mix(key(k, s) + i*GAMMA): a pure function
// of (seed, stream, counter), so any sample in any substream is reproducible
// independent of scheduling or draw order.
//
// Stream-splitting rule used throughout: one substream per trial/sample-batch
// index, obtained via Rng(seed).substream(index) or nested substream calls.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kKeyTweak)), counter_(0) {}

    // Independent child stream; deterministic in (parent key, id).
    Rng substream(std::uint64_t id) const {
        Rng child(0);
        child.key_ = mix(key_ + kStreamTweak * (id + 1));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (uses two uniforms per pair; caches the cosine twin).
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(2.0 * kPi * u2);
        have_cached_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    cplx complex_gaussian() {
        const double re = gaussian(), im = gaussian();
        return {re, im};
    }

  private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kKeyTweak = 0xA02B4C5D6E7F8091ull;
    static constexpr std::uint64_t kStreamTweak = 0xBF58476D1CE4E5B9ull;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Inverse-CDF sampler over a fixed finite distribution. Build once, sample many.
class DiscreteSampler {
  public:
    explicit DiscreteSampler(const std::vector<double>& probs) : cdf_(probs) {
        double acc = 0.0;
        for (double& c : cdf_) {
            acc += c;
            c = acc;
        }
        if (!cdf_.empty()) cdf_.back() = 1.0;  // guard against rounding at the top end
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.uniform();
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] <= u) lo = mid + 1; else hi = mid;
        }
        return lo;
    }

  private:
    std::vector<double> cdf_;
};

}  // namespace quditlearn
