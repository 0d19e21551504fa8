#pragma once

// Seeding and named random substreams.
//
// Every concern (drops, LOS, shadowing, O2I, waypoints, donor choice) draws from its
// own stream derived from (run seed, concern), so adding a draw in one concern leaves
// all other concerns untouched. Per-link quantities use keyed draws: a pure hash of
// (run seed, concern, tx, rx), independent of evaluation order.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace iabsim::rng {

enum class Concern : std::uint64_t {
    SmallCells = 1,
    Ues = 2,
    Donors = 3,
    Los = 4,
    Shadow = 5,
    O2i = 6,
    Waypoints = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of run `run_index`. The base seed is hashed first so that nearby base seeds
/// never share runs.
constexpr std::uint64_t run_seed(std::uint64_t base_seed, std::uint64_t run_index) {
    return splitmix64(splitmix64(base_seed) + run_index);
}

constexpr std::uint64_t derive(std::uint64_t seed, Concern c) {
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(c)));
}

constexpr std::uint64_t derive(std::uint64_t seed, Concern c, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t k = 0) {
    std::uint64_t h = derive(seed, c);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b * 0x9e3779b97f4a7c15ULL));
    return splitmix64(h ^ (k * 0xc2b2ae3d27d4eb4fULL));
}

/// Uniform in [0, 1) from the top 53 bits of a hash.
constexpr double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

inline double keyed_uniform(std::uint64_t seed, Concern c, std::uint64_t a, std::uint64_t b = 0) {
    return to_unit(derive(seed, c, a, b, 0));
}

/// Standard normal draw keyed on (seed, concern, a, b) via Box-Muller.
inline double keyed_normal(std::uint64_t seed, Concern c, std::uint64_t a, std::uint64_t b = 0) {
    const double u1 = 1.0 - to_unit(derive(seed, c, a, b, 1));  // (0, 1]
    const double u2 = to_unit(derive(seed, c, a, b, 2));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential stream owned by a single run worker.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    Stream(std::uint64_t seed, Concern c) : engine_(derive(seed, c)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace iabsim::rng
