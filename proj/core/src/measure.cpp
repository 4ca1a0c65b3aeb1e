#include "nsfde/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "nsfde/errors.hpp"
#include "nsfde/numeric.hpp"

namespace nsfde {

FadingMeasure::FadingMeasure(std::vector<MeasureAtom> atoms, std::vector<MeasureExp> exps)
    : atoms_(std::move(atoms)), exps_(std::move(exps)) {
    if (atoms_.empty() && exps_.empty()) {
        throw MeasureError("measure needs at least one component");
    }
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.weight > 0.0)) throw MeasureError("atom weight must be positive");
        if (!(a.theta <= 0.0)) throw MeasureError("atom delay must be <= 0");
        total += a.weight;
    }
    for (const auto& e : exps_) {
        if (!(e.weight > 0.0)) throw MeasureError("exponential weight must be positive");
        if (!(e.rho > 0.0)) throw MeasureError("exponential rate must be positive");
        total += e.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw MeasureError("measure weights must sum to 1 within 1e-12");
    }
}

FadingMeasure FadingMeasure::single_exponential(double rho) {
    return FadingMeasure({}, {MeasureExp{rho, 1.0}});
}

FadingMeasure FadingMeasure::point_mass(double theta) {
    return FadingMeasure({MeasureAtom{theta, 1.0}}, {});
}

FadingMeasure FadingMeasure::from_json(const nlohmann::json& j) {
    std::vector<MeasureAtom> atoms;
    std::vector<MeasureExp> exps;
    if (j.contains("atoms")) {
        for (const auto& a : j.at("atoms")) {
            atoms.push_back({a.at("theta").get<double>(), a.at("w").get<double>()});
        }
    }
    if (j.contains("exp")) {
        for (const auto& e : j.at("exp")) {
            exps.push_back({e.at("rho").get<double>(), e.at("w").get<double>()});
        }
    }
    return FadingMeasure(std::move(atoms), std::move(exps));
}

nlohmann::json FadingMeasure::to_json() const {
    nlohmann::json j;
    j["atoms"] = nlohmann::json::array();
    for (const auto& a : atoms_) {
        j["atoms"].push_back({{"theta", a.theta}, {"w", a.weight}});
    }
    j["exp"] = nlohmann::json::array();
    for (const auto& e : exps_) {
        j["exp"].push_back({{"rho", e.rho}, {"w", e.weight}});
    }
    return j;
}

double r_moment(const FadingMeasure& mu, double r) {
    if (r < 0.0) throw RangeError("r_moment requires r >= 0");
    if (r == 0.0) return 1.0;  // probability normalization, exact
    double total = 0.0;
    for (const auto& a : mu.atoms()) {
        total += a.weight * std::exp(-r * a.theta);
    }
    for (const auto& e : mu.exps()) {
        if (e.rho <= r) return std::numeric_limits<double>::infinity();
        total += e.weight * e.rho / (e.rho - r);
    }
    return total;
}

bool in_Mr(const FadingMeasure& mu, double r) {
    return std::isfinite(r_moment(mu, r));
}

double tail_mass(const FadingMeasure& mu, double r, double T) {
    double total = 0.0;
    for (const auto& a : mu.atoms()) {
        if (a.theta < -T) total += a.weight * std::exp(-r * a.theta);
    }
    for (const auto& e : mu.exps()) {
        if (e.rho <= r) return std::numeric_limits<double>::infinity();
        total += e.weight * e.rho / (e.rho - r) * std::exp(-(e.rho - r) * T);
    }
    return total;
}

double required_depth(const FadingMeasure& mu, double r, double tol_tail,
                      double grid_step) {
    if (!(tol_tail > 0.0)) throw RangeError("required_depth: tol_tail must be > 0");
    if (!(grid_step > 0.0)) throw RangeError("required_depth: grid_step must be > 0");
    const double r2 = 2.0 * r;
    if (!in_Mr(mu, r2)) {
        throw MeasureError("required_depth: measure not in M_{2r}");
    }
    double T = 0.0;
    for (const auto& a : mu.atoms()) T = std::max(T, -a.theta);
    if (!mu.exps().empty()) {
        const double share = tol_tail / static_cast<double>(mu.exps().size());
        for (const auto& e : mu.exps()) {
            const double gap = e.rho - r2;
            const double t = std::log(e.weight * e.rho / (gap * share)) / gap;
            T = std::max(T, t);
        }
    }
    T = std::ceil(T / grid_step - 1e-9) * grid_step;
    if (T < 0.0) T = 0.0;
    // Union-bound slack could still leave the exact tail above tol.
    while (!mu.exps().empty() && tail_mass(mu, r2, T) >= tol_tail) {
        T += grid_step;
    }
    return T;
}

std::vector<double> exp_component_weights(const MeasureExp& comp, int points,
                                          double grid_step) {
    // Interval [-h, 0] with p(-h) = p0, p(0) = p1:
    //   int p_lin(theta) rho e^{rho theta} dtheta = c0 p0 + c1 p1,
    //   a = e^{-rho h}, c1 = 1 - (1-a)/(rho h), c0 = (1-a)/(rho h) - a.
    // Shift by e^{rho theta_right} for earlier intervals and merge shared
    // endpoints; exact for piecewise-linear segments.
    const double x = comp.rho * grid_step;
    const double a = std::exp(-x);
    const double q = one_minus_exp_over(x);  // (1-a)/x
    const double c1 = 1.0 - q;
    const double c0 = q - a;

    std::vector<double> w(points, 0.0);
    const int newest = points - 1;
    double shift = 1.0;  // e^{rho theta_right} for the interval ending at -m h
    for (int m = 0; m < points - 1; ++m) {
        w[newest - m] += comp.weight * shift * c1;
        w[newest - m - 1] += comp.weight * shift * c0;
        shift *= a;
    }
    return w;
}

SegmentIntegral integrate_segment(const FadingMeasure& mu, const Segment& seg,
                                  IntegrationMode mode, double r,
                                  double tol_tail_rel) {
    const double rw = (mode == IntegrationMode::squared) ? 2.0 * r : r;
    const double moment = r_moment(mu, rw);
    if (!std::isfinite(moment)) {
        throw MeasureError("integrate_segment: measure not in M_r for the weight");
    }
    const double tail = tail_mass(mu, rw, seg.t_mem());
    const double norm_r = cr_norm(seg, r);
    const double bound = (mode == IntegrationMode::squared)
                             ? norm_r * norm_r * tail
                             : norm_r * tail;
    if (tail >= tol_tail_rel * moment) {
        throw TailTruncationError(
            "integrate_segment: window too short for the measure tail", bound);
    }

    SegmentIntegral out;
    out.tail_bound = bound;

    const auto& vals = seg.values();
    const int points = seg.points();

    std::vector<double> weights(points, 0.0);
    for (const auto& comp : mu.exps()) {
        const auto w = exp_component_weights(comp, points, seg.grid_step());
        for (int i = 0; i < points; ++i) weights[i] += w[i];
    }

    if (mode == IntegrationMode::linear) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(seg.dim());
        for (int i = 0; i < points; ++i) {
            if (weights[i] != 0.0) acc += weights[i] * vals.col(i);
        }
        for (const auto& a : mu.atoms()) {
            acc += a.weight * seg.eval(a.theta);
        }
        out.linear = std::move(acc);
    } else {
        double acc = 0.0;
        for (int i = 0; i < points; ++i) {
            if (weights[i] != 0.0) acc += weights[i] * vals.col(i).squaredNorm();
        }
        for (const auto& a : mu.atoms()) {
            acc += a.weight * seg.eval(a.theta).squaredNorm();
        }
        out.squared = acc;
    }
    return out;
}

}  // namespace nsfde
