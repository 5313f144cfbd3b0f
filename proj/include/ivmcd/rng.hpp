#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace ivmcd {

/// Philox4x32-10 counter-based generator.
///
/// A generator is identified by (seed, stream); the stream selects an
/// independent substream, so restart `k` of a fit or replicate `r` of a
/// simulation draws the same numbers no matter which thread runs it.
/// Normal variates use Box-Muller so sequences are identical across
/// standard library implementations.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

    /// Uniform integer in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derive a child seed from a parent seed and a path of indices.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// `count` distinct indices drawn uniformly from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Philox& rng);

}  // namespace ivmcd
