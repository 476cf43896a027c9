#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace tvrate {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Standard normal stream: SplitMix64 counter generator, top 53 bits as
/// uniforms, Box-Muller in pairs (cosine branch first).
///
///   state_j = seed + j * 0x9e3779b97f4a7c15,  u_j = (mix64(state_j) >> 11) * 2^-53
///   z = sqrt(-2 ln(1 - u_a)) * {cos, sin}(2 pi u_b)
class NormalStream {
public:
    static constexpr std::string_view kAlgorithm = "splitmix64-boxmuller-v1";

    explicit NormalStream(std::uint64_t seed) : state_(seed) {}

    double uniform() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return static_cast<double>(mix64(state_) >> 11) * 0x1.0p-53;
    }

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double a = uniform(), b = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - a));
        const double t = 2.0 * std::numbers::pi * b;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed of Monte Carlo cell (n, r): base ^ mix64(mix64(n) + r).
constexpr std::uint64_t cell_seed(std::uint64_t base, std::uint64_t n, std::uint64_t r) {
    return base ^ mix64(mix64(n) + r);
}

}  // namespace tvrate
