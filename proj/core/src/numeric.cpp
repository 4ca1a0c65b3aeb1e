#include "nsfde/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace nsfde {

namespace {

double pairwise_sum_range(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_range(data, half) + pairwise_sum_range(data + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_sum_range(values.data(), values.size());
}

MeanStderr mean_stderr(std::span<const double> values) {
    MeanStderr out;
    out.n = static_cast<long>(values.size());
    if (out.n == 0) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(out.n);
    if (out.n == 1) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(out.n - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(out.n));
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line: need >= 2 matching points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = pairwise_sum(x) / n;
    const double my = pairwise_sum(y) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double one_minus_exp_over(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x / 2.0 + x * x / 6.0;
    return -std::expm1(-x) / x;
}

}  // namespace nsfde
