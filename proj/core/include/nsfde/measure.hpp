#pragma once

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "nsfde/segment.hpp"

namespace nsfde {

struct MeasureAtom {
    double theta;   // delay, <= 0
    double weight;  // > 0
};

/// Exponential density component: weight * rho * e^{rho theta} on (-inf, 0].
struct MeasureExp {
    double rho;     // > 0
    double weight;  // > 0
};

/// Probability measure on (-inf, 0]: finite mixture of atoms and
/// exponential densities. Weights must sum to 1 within 1e-12.
class FadingMeasure {
public:
    FadingMeasure(std::vector<MeasureAtom> atoms, std::vector<MeasureExp> exps);

    static FadingMeasure single_exponential(double rho);
    static FadingMeasure point_mass(double theta = 0.0);

    const std::vector<MeasureAtom>& atoms() const { return atoms_; }
    const std::vector<MeasureExp>& exps() const { return exps_; }

    static FadingMeasure from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    std::vector<MeasureAtom> atoms_;
    std::vector<MeasureExp> exps_;
};

/// mu^(r) = integral of e^{-r theta} d mu. Returns +inf when some
/// exponential rate rho <= r (measure not in M_r). mu^(0) is exactly 1.
double r_moment(const FadingMeasure& mu, double r);

bool in_Mr(const FadingMeasure& mu, double r);

/// integral of e^{-r theta} over theta < -T (tail beyond the window).
double tail_mass(const FadingMeasure& mu, double r, double T);

/// Smallest grid-aligned T_mem with tail_mass(mu, 2r, T_mem) < tol_tail
/// (absolute). Atoms force T_mem >= max |theta_i|. Requires mu in M_{2r}.
double required_depth(const FadingMeasure& mu, double r, double tol_tail,
                      double grid_step);

enum class IntegrationMode { linear, squared };

/// Result of integrating a segment functional against the measure over the
/// stored window. `tail_bound` is the truncation bound
/// ||seg||_r * tail_mass(r) (linear) or ||seg||_r^2 * tail_mass(2r) (squared).
struct SegmentIntegral {
    Eigen::VectorXd linear;  // set in linear mode
    double squared = 0.0;    // set in squared mode
    double tail_bound = 0.0;
};

/// Atoms are evaluated by linear interpolation on the grid; exponential
/// components integrate the piecewise-linear reconstruction of the segment
/// against the density in closed form per interval (exact for constants, so
/// a constant c integrates to c up to the reported tail bound).
///
/// Throws TailTruncationError when the weighted tail mass beyond the window
/// exceeds tol_tail_rel * mu^(r or 2r).
SegmentIntegral integrate_segment(const FadingMeasure& mu, const Segment& seg,
                                  IntegrationMode mode, double r,
                                  double tol_tail_rel = 1e-8);

/// Per-point quadrature weights of one exponential component over a window
/// of `points` grid nodes (oldest first): integrating the piecewise-linear
/// interpolant of values v_i against weight * rho * e^{rho theta} equals
/// sum_i w_i v_i. Shared by integrate_segment and the integrator recursion.
std::vector<double> exp_component_weights(const MeasureExp& comp, int points,
                                          double grid_step);

}  // namespace nsfde
