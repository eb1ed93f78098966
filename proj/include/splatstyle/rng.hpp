#pragma once

#include <cstdint>
#include <string_view>

#include "splatstyle/tensor.hpp"

namespace splatstyle {

// Deterministic PRNG (xoshiro256** seeded via splitmix64). Self-contained so
// that draws are bit-identical across standard libraries and platforms.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    std::uint64_t next_u64();
    // Uniform in [0,1) with 53-bit resolution.
    double next_double();
    // Standard normal via Box-Muller; one spare cached between calls.
    double next_normal();
    // Unbiased uniform integer in [lo, hi], inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi);

    void fill_normal(MultiViewLatent& x);
    void fill_normal(Image& x);

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives independent named streams from one root seed, so ablations can
// freeze all streams but one.
class SeedSplitter {
public:
    explicit SeedSplitter(std::uint64_t root_seed) : root_(root_seed) {}
    RandomStream stream(std::string_view name) const;
    std::uint64_t root() const { return root_; }

private:
    std::uint64_t root_;
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t& state);

} // namespace splatstyle
