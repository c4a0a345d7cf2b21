#pragma once

#include <cstdint>

#include "nldiff/common.hpp"

namespace nldiff {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline double to_open01(std::uint64_t u) {
    // (0,1), never exactly 0 (log-safe)
    return (double(u >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace detail

/**
 * Counter-based Gaussian generator keyed by (seed, path, step, component):
 * every draw is a pure hash of its coordinates, so path generation is
 * reproducible under any parallel schedule.
 */
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(detail::mix64(seed)) {}

    /// k-th standard normal component at (path, step), via Box-Muller.
    double gauss(std::uint64_t path, std::uint64_t step, std::uint64_t k) const {
        const std::uint64_t base =
            detail::mix64(detail::mix64(detail::mix64(seed_ ^ path) ^ step) ^ (k >> 1));
        const double u1 = detail::to_open01(base);
        const double u2 = detail::to_open01(detail::mix64(base));
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        return (k & 1) ? r * std::sin(angle) : r * std::cos(angle);
    }

    void fill_gauss(std::uint64_t path, std::uint64_t step, Vec& out) const {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = gauss(path, step, i);
    }

  private:
    std::uint64_t seed_;
};

}  // namespace nldiff
