#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace thick {

std::uint64_t splitmix64(std::uint64_t x);

// Seed for stream `index` of a run started from `master`. Pure function of both.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    double normal() { return normal_(engine_); }
    std::uint64_t bits() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
};

}  // namespace thick
