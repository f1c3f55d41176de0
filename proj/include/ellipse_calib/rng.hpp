#ifndef ELLIPSE_CALIB_RNG_HPP
#define ELLIPSE_CALIB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace ecal {

// Counter-based generator (splitmix64 finalizer over a 64-bit counter).
// Output depends only on (seed, counter), so sequences are reproducible
// across platforms and independent of call interleaving per stream.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1].
    double next_double() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Standard normal via Box-Muller; one fresh pair of uniforms per draw.
    double next_gauss() {
        const double u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace ecal

#endif
