#pragma once

#include <cstdint>
#include <vector>

namespace lipcert {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based generator: value i of stream s under seed k is a pure function of (k, s, i),
// so independent streams can be drawn in any order or in parallel with identical results.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x1b873593u, std::uint64_t stream = 0) noexcept : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() noexcept;
    std::size_t below(std::size_t n) noexcept;

    std::vector<double> normal_vector(std::size_t n);
    // Uniformly distributed point on the unit sphere of R^n.
    std::vector<double> unit_vector(std::size_t n);

    // Independent generator for a sub-task; the result depends only on (seed, stream, id).
    Rng split(std::uint64_t id) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lipcert
