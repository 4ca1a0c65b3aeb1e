#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsfde/rng.hpp"
#include "nsfde/segment.hpp"

namespace nsfde {

/// Randomized test functional for the bounded-Lipschitz metric:
///   g(phi) = clip(a0 + sum_i a_i e^{r theta_i} phi_{c_i}(theta_i), -1, 1)
/// with sum |a_i| = 1, so |g| <= 1 and g is 1-Lipschitz in the sup norm
/// (the e^{r theta} factors only shrink the coefficients on theta <= 0).
struct DlFunctional {
    double a0 = 0.0;
    std::vector<int> point_index;   // grid index into the segment
    std::vector<int> component;     // coordinate of R^d
    std::vector<double> coeff;      // a_i * e^{r theta_i}, pre-multiplied
};

/// Family generation is prefix-stable: functional i depends only on
/// (seed, i), so a larger family extends a smaller one with the same seed.
DlFunctional make_dl_functional(const CounterRng& rng, std::uint64_t index,
                                int points, int dim, double grid_step, double r);

double evaluate(const DlFunctional& g, const Segment& seg);

/// Lower-bound estimate of d_L between the empirical laws of two segment
/// samples: max over the random family of |mean_A g - mean_B g|. Always in
/// [0, 2]; exactly 0 when the samples coincide elementwise.
double empirical_dl(std::span<const Segment> sample_a, std::span<const Segment> sample_b,
                    double r, int family_size, std::uint64_t seed);

/// Monte Carlo indistinguishability floor: mean over `n_splits` seeded
/// half-splits of the same sample of the split-vs-split estimate.
double split_half_floor(std::span<const Segment> sample, double r, int family_size,
                        std::uint64_t seed, int n_splits = 4);

}  // namespace nsfde
