#include "nsfde/rng.hpp"

#include <cmath>

namespace nsfde {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> round_once(std::array<std::uint32_t, 4> c,
                                               std::array<std::uint32_t, 2> k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        counter = round_once(counter, key);
    }
    return counter;
}

std::array<std::uint32_t, 4> CounterRng::raw(std::uint32_t stream, std::uint64_t unit,
                                             std::uint64_t index) const {
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32) ^ stream,
    };
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(unit),
        static_cast<std::uint32_t>(unit >> 32),
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32),
    };
    return philox4x32(counter, key);
}

namespace {

/// Map two 32-bit words to a double in (0, 1]: 53 significant bits, never 0.
inline double to_unit_interval(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

double CounterRng::uniform(std::uint32_t stream, std::uint64_t unit,
                           std::uint64_t index) const {
    const auto x = raw(stream, unit, index);
    return to_unit_interval(x[0], x[1]);
}

std::pair<double, double> CounterRng::normal_pair(std::uint32_t stream, std::uint64_t unit,
                                                  std::uint64_t index) const {
    const auto x = raw(stream, unit, index);
    const double u1 = to_unit_interval(x[0], x[1]);
    const double u2 = to_unit_interval(x[2], x[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

double DrawSeq::uniform() { return rng_.uniform(stream_, unit_, next_++); }

double DrawSeq::uniform(double lo, double hi) {
    // uniform() is (0,1]; flip so the result lands in [lo, hi).
    return lo + (hi - lo) * (1.0 - uniform());
}

double DrawSeq::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const auto [a, b] = rng_.normal_pair(stream_, unit_, next_++);
    spare_ = b;
    have_spare_ = true;
    return a;
}

long DrawSeq::uniform_int(long n) {
    if (n <= 1) return 0;
    const long v = static_cast<long>(uniform(0.0, static_cast<double>(n)));
    return std::min(v, n - 1);
}

void NoiseStream::increment(std::uint64_t path_index, std::uint64_t step,
                            Eigen::VectorXd& out) const {
    out.resize(m_);
    for (int j = 0; j < m_; j += 2) {
        // One Philox block yields two normals; index packs (step, block).
        const std::uint64_t index = step * ((m_ + 1) / 2) + j / 2;
        const auto [a, b] = rng_.normal_pair(streams::kNoise, path_index, index);
        out[j] = a * sqrt_h_;
        if (j + 1 < m_) out[j + 1] = b * sqrt_h_;
    }
}

}  // namespace nsfde
