#pragma once

#include <cstdint>

namespace setfunc {

/// Counter-based pseudo-random generator (splitmix64 finalizer over a
/// key + counter pair). Identical seeds give identical sequences on every
/// platform, and split() derives decorrelated child streams without
/// advancing the parent, so per-set / per-module streams stay reproducible
/// under any evaluation order.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(seed) {}

    std::uint64_t seed() const { return key_; }

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double next_double();

    /// Uniform in (0, 1]; safe to feed into log().
    double next_double_pos();

    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; consumes exactly two draws per call.
    double normal();

    /// Gamma(shape=2, scale=1) as the sum of two unit exponentials.
    double gamma2();

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Independent child stream identified by `stream`; parent state is
    /// not consumed.
    Rng split(std::uint64_t stream) const;

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace setfunc
