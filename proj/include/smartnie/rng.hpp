#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace smartnie {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Identifies one replication's random stream.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t index = 0;

    std::uint64_t stream_seed() const noexcept { return mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL)); }
};

// Portable generator: the engine sequence is fixed by the standard, but the
// std distributions are not, so uniform and normal draws are done here.
class Rng {
public:
    explicit Rng(SeedSpec seed)
        : engine_(seed.stream_seed())
    {
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via the Marsaglia polar method.
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace smartnie
