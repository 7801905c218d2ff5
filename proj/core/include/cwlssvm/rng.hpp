#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cwlssvm {

/// Deterministic random source built on std::mt19937_64.
///
/// The engine's output sequence is fixed by the standard; the distributions
/// below are written out by hand so that draws are bit-identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace cwlssvm
