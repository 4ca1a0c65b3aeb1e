#include "nsfde/segment.hpp"

#include <cmath>
#include <ostream>

#include "nsfde/errors.hpp"

namespace nsfde {

Segment::Segment(double grid_step, Eigen::MatrixXd values)
    : grid_step_(grid_step), values_(std::move(values)) {
    if (!(grid_step_ > 0.0)) {
        throw InvalidSegmentError("segment grid_step must be positive");
    }
    if (values_.rows() < 1 || values_.cols() < 2) {
        throw InvalidSegmentError("segment needs dim >= 1 and depth >= 1");
    }
    if (!values_.allFinite()) {
        throw InvalidSegmentError("segment contains non-finite values");
    }
}

Segment Segment::constant(double grid_step, int depth, const Eigen::VectorXd& value) {
    Eigen::MatrixXd vals(value.size(), depth + 1);
    vals.colwise() = value;
    return Segment(grid_step, std::move(vals));
}

Segment Segment::constant(double grid_step, int depth, double value) {
    return constant(grid_step, depth, Eigen::VectorXd::Constant(1, value));
}

Segment Segment::from_function(double grid_step, int depth, int dim,
                               const std::function<Eigen::VectorXd(double)>& fn) {
    Eigen::MatrixXd vals(dim, depth + 1);
    for (int i = 0; i <= depth; ++i) {
        vals.col(i) = fn(-(depth - i) * grid_step);
    }
    return Segment(grid_step, std::move(vals));
}

Eigen::VectorXd Segment::eval(double theta) const {
    const double tol = 0.5 * grid_step_;
    if (theta > tol || theta < -t_mem() - tol) {
        throw RangeError("segment eval outside stored window");
    }
    // Position measured back from theta = 0.
    const double pos = -theta / grid_step_;
    const int newest = points() - 1;
    const int lo = static_cast<int>(std::floor(pos));
    if (lo >= newest) return values_.col(0);
    if (pos <= 0.0) return values_.col(newest);
    const double frac = pos - lo;
    const int i_hi = newest - lo;       // closer to theta = 0
    const int i_lo = i_hi - 1;
    return (1.0 - frac) * values_.col(i_hi) + frac * values_.col(i_lo);
}

bool Segment::same_shape(const Segment& other) const {
    return grid_step_ == other.grid_step_ && values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols();
}

double cr_norm(const Segment& seg, double r) {
    if (!(r > 0.0)) throw RangeError("cr_norm requires r > 0");
    const auto& vals = seg.values();
    double best = 0.0;
    for (int i = 0; i < vals.cols(); ++i) {
        const double w = std::exp(r * seg.theta(i));
        best = std::max(best, w * vals.col(i).norm());
    }
    return best;
}

double sup_norm(const Segment& seg) {
    const auto& vals = seg.values();
    double best = 0.0;
    for (int i = 0; i < vals.cols(); ++i) {
        best = std::max(best, vals.col(i).norm());
    }
    return best;
}

Segment segment_sub(const Segment& a, const Segment& b) {
    if (!a.same_shape(b)) {
        throw ShapeMismatchError("segment_sub: mismatched grid/depth/dim");
    }
    return Segment(a.grid_step(), a.values() - b.values());
}

Segment decimate(const Segment& seg, int stride) {
    if (stride <= 1) return seg;
    const int newest = seg.points() - 1;
    const int kept = newest / stride + 1;
    if (kept < 2) {
        // Window too short for this stride; keep endpoints.
        Eigen::MatrixXd vals(seg.dim(), 2);
        vals.col(0) = seg.values().col(0);
        vals.col(1) = seg.values().col(newest);
        return Segment(seg.grid_step() * newest, std::move(vals));
    }
    Eigen::MatrixXd vals(seg.dim(), kept);
    for (int j = 0; j < kept; ++j) {
        vals.col(kept - 1 - j) = seg.values().col(newest - j * stride);
    }
    return Segment(seg.grid_step() * stride, std::move(vals));
}

namespace {

void write_number(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_csv(const Segment& seg, std::ostream& os) {
    os << "theta";
    for (int c = 1; c <= seg.dim(); ++c) os << ",x_" << c;
    os << "\n";
    for (int i = 0; i < seg.points(); ++i) {
        write_number(os, seg.theta(i));
        for (int c = 0; c < seg.dim(); ++c) {
            os << ',';
            write_number(os, seg.values()(c, i));
        }
        os << "\n";
    }
}

Path::Path(Segment pre_history, Eigen::MatrixXd post_values)
    : pre_(std::move(pre_history)), post_(std::move(post_values)) {
    if (post_.rows() != pre_.dim()) {
        throw ShapeMismatchError("path post_values dimension mismatch");
    }
    if (!post_.allFinite()) {
        throw InvalidSegmentError("path contains non-finite values");
    }
}

Eigen::VectorXd Path::value_at_step(long n) const {
    if (n > steps() || n < -static_cast<long>(pre_.depth())) {
        throw RangeError("path step index out of range");
    }
    if (n <= 0) return pre_.values().col(pre_.points() - 1 + n);
    return post_.col(n - 1);
}

void Path::write_csv(std::ostream& os) const {
    os << "t";
    for (int c = 1; c <= dim(); ++c) os << ",x_" << c;
    os << "\n";
    auto row = [&](double t, const auto& col) {
        write_number(os, t);
        for (int c = 0; c < dim(); ++c) {
            os << ',';
            write_number(os, col(c));
        }
        os << "\n";
    };
    for (int i = 0; i < pre_.points(); ++i) row(pre_.theta(i), pre_.values().col(i));
    for (int n = 0; n < steps(); ++n) row((n + 1) * grid_step(), post_.col(n));
}

Segment segment_at(const Path& path, double t) {
    const double h = path.grid_step();
    if (!std::isfinite(t)) {
        throw GridAlignmentError("segment_at: time does not snap to the grid");
    }
    // Times snap to the nearest grid point (tolerance h/2).
    const long n = std::lround(t / h);
    if (n < 0 || n > path.steps()) {
        throw RangeError("segment_at: time outside [0, T]");
    }
    if (n == 0) return path.pre_history();
    const int pts = path.pre_history().points();
    Eigen::MatrixXd vals(path.dim(), pts);
    for (int i = 0; i < pts; ++i) {
        vals.col(i) = path.value_at_step(n - (pts - 1 - i));
    }
    return Segment(h, std::move(vals));
}

}  // namespace nsfde
