#include <cmath>
#include <numbers>

#include "saesg/simulation.hpp"

namespace saesg {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double normal_variate(std::uint64_t seed, std::uint64_t path, SeriesKind series, std::uint32_t year) {
    const std::uint64_t counter = (static_cast<std::uint64_t>(series) << 32) | year;
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ path) ^ counter);
    const double u1 = static_cast<double>((key >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace saesg
