#pragma once

#include <optional>
#include <vector>

#include "nsfde/segment.hpp"

namespace nsfde {

/// One statistics series on a time grid.
struct CurveSeries {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> stderr_;
};

/// What simulate_ensemble should record.
struct EnsembleRequest {
    /// Times (snapped to the grid) where moment curves are sampled; empty
    /// selects an automatic grid of at most ~2000 points.
    std::vector<double> curve_times;
    /// Times where segment statistics (C_r norms, optional marginals) are
    /// taken.
    std::vector<double> checkpoints;
    bool store_segments = false;
    /// Stored checkpoint segments are decimated to at most this many grid
    /// points (theta = 0 always kept) to cap memory.
    int segment_max_points = 1024;
    /// Trailing-window length for sup statistics on coupled runs.
    double window = 1.0;
};

/// Moment statistics of a seeded collection of simulated paths. Statistics
/// are aggregated in path order (pairwise within fixed blocks), so the
/// result is independent of the parallel schedule.
struct Ensemble {
    long n_paths = 0;
    double grid_step = 0.0;
    double r = 0.0;

    CurveSeries second_moment;                  // E |x(t)|^2
    CurveSeries running_sup;                    // E sup_{0<s<=t} |x(s)|^2
    std::vector<CurveSeries> mean_components;   // E x_i(t), one per dimension

    std::vector<double> checkpoint_times;
    CurveSeries crnorm_sq;                      // E ||x_t||_r^2 at checkpoints
    /// segments[checkpoint][path], present when store_segments was set.
    std::vector<std::vector<Segment>> segments;
};

/// Shared-noise pair statistics for the coupling experiments.
struct CoupledEnsemble {
    long n_pairs = 0;
    double grid_step = 0.0;
    double window = 0.0;

    CurveSeries diff_sq;        // E |x(t;xi) - x(t;eta)|^2
    CurveSeries window_sup;     // E sup over trailing window of |diff|^2
    CurveSeries running_sup;    // E sup_{0<s<=t} |diff|^2

    std::vector<double> checkpoint_times;
    CurveSeries diff_crnorm_sq; // E ||x_t(xi) - x_t(eta)||_r^2 at checkpoints
};

}  // namespace nsfde
