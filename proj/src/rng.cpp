#include "setfunc/rng.hpp"

#include <cmath>
#include <numbers>

namespace setfunc {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_double_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double Rng::normal() {
    const double u1 = next_double_pos();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma2() {
    return -std::log(next_double_pos()) - std::log(next_double_pos());
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Modulo bias is negligible for the small n used here.
    return next_u64() % n;
}

Rng Rng::split(std::uint64_t stream) const {
    return Rng(mix64(mix64(key_ ^ 0x5851F42D4C957F2DULL) + (stream + 1) * kGolden));
}

}  // namespace setfunc
