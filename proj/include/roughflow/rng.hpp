#pragma once

#include <cstdint>
#include <random>

namespace roughflow {

/// stream tags keep the random streams of different consumers disjoint
namespace stream_tag {
constexpr std::uint64_t chain = 1;
constexpr std::uint64_t brownian = 2;
constexpr std::uint64_t suspension = 3;
constexpr std::uint64_t sde = 4;
constexpr std::uint64_t restart = 5;
constexpr std::uint64_t bootstrap = 6;
}  // namespace stream_tag

/// splitmix64 finalizer, used to decorrelate (seed, stream) pairs
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * @brief Deterministic random stream identified by (master seed, replica, tag).
 *
 * Two streams with different coordinates are seeded independently, so replicas
 * can be generated in any order or on any thread.
 */
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t replica = 0, std::uint64_t tag = 0) {
        std::uint64_t k = splitmix64(seed);
        k = splitmix64(k ^ splitmix64(replica + 0x632be59bd9b4e019ULL));
        k = splitmix64(k ^ splitmix64(tag + 0x8cb92ba72f3d8dd7ULL));
        engine_.seed(k);
    }

    /// uniform on [0,1) with 53 random bits
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    std::uint64_t bits() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace roughflow
