#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include <Eigen/Core>

namespace nsfde {

/// Philox 4x32-10 block cipher (Salmon et al., counter-based RNG).
/// Stateless: every 128-bit counter / 64-bit key pair maps to four
/// independent 32-bit words, so draws can be addressed rather than
/// sequenced and any parallel schedule reproduces the same numbers.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Address space for draws: (seed, stream, unit, index).
///   stream — consumer class (noise, sampler, test functionals, ...)
///   unit   — path / sample / functional number
///   index  — draw counter within the unit
/// Identical addresses always produce identical values.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::array<std::uint32_t, 4> raw(std::uint32_t stream, std::uint64_t unit,
                                     std::uint64_t index) const;

    /// Uniform on (0, 1], 53-bit resolution.
    double uniform(std::uint32_t stream, std::uint64_t unit, std::uint64_t index) const;

    /// Two independent standard normals per address (Box-Muller on one block).
    std::pair<double, double> normal_pair(std::uint32_t stream, std::uint64_t unit,
                                          std::uint64_t index) const;

private:
    std::uint64_t seed_;
};

/// Known stream ids. Keeping them in one place avoids accidental overlap.
namespace streams {
inline constexpr std::uint32_t kNoise = 1;
inline constexpr std::uint32_t kCheckSampler = 2;
inline constexpr std::uint32_t kDlFamily = 3;
inline constexpr std::uint32_t kDlSplit = 4;
inline constexpr std::uint32_t kOrderProbe = 5;
}  // namespace streams

/// Sequential convenience wrapper over CounterRng for one (stream, unit).
class DrawSeq {
public:
    DrawSeq(const CounterRng& rng, std::uint32_t stream, std::uint64_t unit)
        : rng_(rng), stream_(stream), unit_(unit) {}

    double uniform();                      // (0, 1]
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();
    long uniform_int(long n);              // {0, ..., n-1}

private:
    CounterRng rng_;
    std::uint32_t stream_;
    std::uint64_t unit_;
    std::uint64_t next_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Brownian increments for one ensemble: increment (path, step) is an
/// m-vector of N(0, h) draws, fully determined by (seed, path, step).
class NoiseStream {
public:
    NoiseStream(std::uint64_t master_seed, int noise_dim, double h)
        : rng_(master_seed), m_(noise_dim), sqrt_h_(0.0) {
        sqrt_h_ = std::sqrt(h);
    }

    int noise_dim() const { return m_; }

    void increment(std::uint64_t path_index, std::uint64_t step,
                   Eigen::VectorXd& out) const;

private:
    CounterRng rng_;
    int m_;
    double sqrt_h_;
};

}  // namespace nsfde
