#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nsfde {

/// Pairwise (cascade) summation. Order-insensitive to ~1e-15 relative and
/// deterministic for a fixed input order.
double pairwise_sum(std::span<const double> values);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // standard error of the mean
    long n = 0;
};

MeanStderr mean_stderr(std::span<const double> values);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y ~ intercept + slope*x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// (1 - e^{-x}) / x, stable near x = 0.
double one_minus_exp_over(double x);

}  // namespace nsfde
