#pragma once

#include <functional>
#include <iosfwd>

#include <Eigen/Core>

namespace nsfde {

/// Truncated history on a uniform grid over [-T_mem, 0].
///
/// Stores depth+1 points at theta = -depth*h, ..., -h, 0 (oldest first);
/// the last column is the value at theta = 0. The truncation at T_mem is
/// the documented stand-in for a fading-memory history on (-inf, 0].
class Segment {
public:
    /// values: dim x (depth+1), oldest -> newest. Throws InvalidSegmentError
    /// on non-finite entries, empty data, or grid_step <= 0.
    Segment(double grid_step, Eigen::MatrixXd values);

    static Segment constant(double grid_step, int depth, const Eigen::VectorXd& value);
    static Segment constant(double grid_step, int depth, double value);  // dim = 1
    /// Sample fn(theta) on the grid.
    static Segment from_function(double grid_step, int depth, int dim,
                                 const std::function<Eigen::VectorXd(double)>& fn);

    double grid_step() const { return grid_step_; }
    int dim() const { return static_cast<int>(values_.rows()); }
    int points() const { return static_cast<int>(values_.cols()); }
    int depth() const { return points() - 1; }        // grid steps in the window
    double t_mem() const { return depth() * grid_step_; }
    double theta(int i) const { return -(points() - 1 - i) * grid_step_; }

    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::VectorXd newest() const { return values_.col(points() - 1); }

    /// Linear interpolation at theta in [-T_mem, 0]; RangeError outside.
    Eigen::VectorXd eval(double theta) const;

    bool same_shape(const Segment& other) const;

private:
    double grid_step_;
    Eigen::MatrixXd values_;
};

/// ||phi||_r = max over grid points of e^{r theta} |phi(theta)| (Euclidean
/// per point). Discrete max over the stored window; O(h)-accurate for
/// Lipschitz histories.
double cr_norm(const Segment& seg, double r);

/// ||phi||_inf = max over grid points of |phi(theta)|.
double sup_norm(const Segment& seg);

/// Pointwise difference; shapes must match.
Segment segment_sub(const Segment& a, const Segment& b);

/// Keep every `stride`-th point counting back from theta = 0 (plus the
/// oldest point's alignment); the result has grid_step * stride.
Segment decimate(const Segment& seg, int stride);

/// CSV with header "theta,x_1,...,x_d".
void write_csv(const Segment& seg, std::ostream& os);

/// Solution path: initial data on [-T_mem, 0] plus values at h, 2h, ..., T.
class Path {
public:
    Path(Segment pre_history, Eigen::MatrixXd post_values);

    const Segment& pre_history() const { return pre_; }
    const Eigen::MatrixXd& post_values() const { return post_; }
    double grid_step() const { return pre_.grid_step(); }
    int dim() const { return pre_.dim(); }
    int steps() const { return static_cast<int>(post_.cols()); }
    double horizon() const { return steps() * grid_step(); }

    /// Value at grid step n; n in [-pre.depth(), steps()], n <= 0 reads the
    /// initial data, n >= 1 the simulated values.
    Eigen::VectorXd value_at_step(long n) const;

    double final_time() const { return horizon(); }

    void write_csv(std::ostream& os) const;

private:
    Segment pre_;
    Eigen::MatrixXd post_;
};

/// Segment of the path ending at time t (t snapped to the grid); reaches
/// into the initial data when t < T_mem. Window length equals the initial
/// data's window.
Segment segment_at(const Path& path, double t);

}  // namespace nsfde
