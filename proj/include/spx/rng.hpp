#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spx {

// Deterministic draws on top of mt19937. The std:: distributions are
// implementation-defined, so byte-identical outputs across toolchains need
// these explicit constructions instead.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(static_cast<std::mt19937::result_type>(seed)) {}

    uint32_t next_u32() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double u01() {
        uint64_t hi = next_u32(), lo = next_u32();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Uniform integer in [lo, hi] via rejection-free modulo on 64 bits.
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        uint64_t hi64 = next_u32(), lo64 = next_u32();
        return lo + static_cast<int>(((hi64 << 32) | lo64) % span);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = u01(), u2 = u01();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace spx
