#pragma once

// Seeded random streams: std::mt19937_64 engines with Boost.Random
// distributions, so draws are the same on every platform.

#include <cstdint>
#include <random>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace rbnoma {

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t seed, std::uint32_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), stream_id};
    return Engine(seq);
}

/// One independent stream per concern.
struct RngStreams {
    Engine spawn;
    Engine traffic;
    Engine allocation;
    Engine shadowing;

    explicit RngStreams(std::uint64_t seed)
        : spawn(make_stream(seed, 1)),
          traffic(make_stream(seed, 2)),
          allocation(make_stream(seed, 3)),
          shadowing(make_stream(seed, 4)) {}
};

inline double uniform_real(Engine& rng, double lo, double hi) {
    return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Uniform integer in the closed range [lo, hi].
template <typename Int>
Int uniform_int(Engine& rng, Int lo, Int hi) {
    return boost::random::uniform_int_distribution<Int>(lo, hi)(rng);
}

inline double normal(Engine& rng, double mean, double stddev) {
    return boost::random::normal_distribution<double>(mean, stddev)(rng);
}

inline double exponential_with_mean(Engine& rng, double mean) {
    return boost::random::exponential_distribution<double>(1.0 / mean)(rng);
}

inline bool bernoulli(Engine& rng, double p) {
    return boost::random::bernoulli_distribution<double>(p)(rng);
}

}  // namespace rbnoma
