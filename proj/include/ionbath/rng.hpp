#pragma once

#include <cstdint>

#include "ionbath/vec.hpp"

namespace ionbath {

// Deterministic RNG used by every sampler in the suite. xoshiro256++ engine,
// seeded through splitmix64 so that (master_seed, realization_index) fully
// determines the stream. Realizations never share a stream, which keeps
// results byte-identical no matter how work is split across threads.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    // Independent stream for one realization of a Monte-Carlo run.
    static Rng for_realization(std::uint64_t master_seed, std::uint64_t index);

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform();
    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos();
    double uniform(double lo, double hi);

    double normal();                     // standard normal, Marsaglia polar
    double exponential(double mean);     // mean > 0
    double rayleigh(double sigma);
    std::int64_t poisson(double mean);   // mean >= 0
    Vec3 isotropic_direction();

    // Haar-uniform rotation from a uniform unit quaternion (det +1).
    Mat3 random_rotation();

  private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace ionbath
