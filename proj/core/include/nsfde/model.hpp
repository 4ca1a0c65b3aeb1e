#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "nsfde/measure.hpp"
#include "nsfde/segment.hpp"

namespace nsfde {

/// Pointwise nonlinearities available for the diffusion term. `table` is a
/// piecewise-linear map with clamped ends, applied componentwise like the
/// trigonometric entries; every registry entry is bounded-Lipschitz.
enum class Nonlinearity { zero, identity, cos, sin, table };

Nonlinearity nonlinearity_from_string(const std::string& name);
std::string to_string(Nonlinearity n);

struct PointwiseMap {
    Nonlinearity kind = Nonlinearity::zero;
    std::vector<double> xs, ys;  // table nodes, xs strictly increasing

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
};

/// D(phi) = kappa * int phi dmu. No constant term, so D(0) = 0 holds by
/// construction.
struct NeutralSpec {
    Eigen::MatrixXd kappa;  // d x d
};

/// b(phi) = A phi(0) + B int phi dmu + b0.
struct DriftSpec {
    Eigen::MatrixXd A, B;  // d x d
    Eigen::VectorXd b0;    // d
};

/// Column j of sigma(phi): S_j g(phi(0)) + C_j int phi dmu + s0_j, with g
/// the registry nonlinearity applied componentwise.
struct DiffusionColumn {
    Eigen::MatrixXd S, C;  // d x d
    Eigen::VectorXd s0;    // d
};

struct DiffusionSpec {
    PointwiseMap nonlin;
    std::vector<DiffusionColumn> columns;  // size m
};

/// Constants the model claims for its structural conditions: contraction k
/// of the neutral term and the drift/diffusion pair constants.
struct DeclaredParams {
    double k;
    double lambda1, lambda2, lambda3, lambda4;
};

class NeutralModel {
public:
    NeutralModel(int dim, double r, FadingMeasure mu, NeutralSpec D, DriftSpec b,
                 DiffusionSpec sigma, DeclaredParams declared);

    int dim() const { return dim_; }
    int noise_dim() const { return static_cast<int>(sigma_.columns.size()); }
    double r() const { return r_; }
    const FadingMeasure& mu() const { return mu_; }
    const NeutralSpec& neutral() const { return D_; }
    const DriftSpec& drift_spec() const { return b_; }
    const DiffusionSpec& diffusion_spec() const { return sigma_; }
    const DeclaredParams& declared() const { return declared_; }

    /// Coefficient evaluations given the measure integral I = int phi dmu.
    Eigen::VectorXd neutral_from(const Eigen::VectorXd& I) const;
    Eigen::VectorXd drift_from(const Eigen::VectorXd& x0, const Eigen::VectorXd& I) const;
    Eigen::MatrixXd diffusion_from(const Eigen::VectorXd& x0, const Eigen::VectorXd& I) const;

    /// Segment-based evaluations (integrate, then apply).
    Eigen::VectorXd D(const Segment& phi) const;
    Eigen::VectorXd b(const Segment& phi) const;
    Eigen::MatrixXd sigma(const Segment& phi) const;

    /// Values at the zero history: b(0) = b0, sigma(0) = S g(0) + s0.
    Eigen::VectorXd b_at_zero() const;
    Eigen::MatrixXd sigma_at_zero() const;

    static NeutralModel from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    int dim_;
    double r_;
    FadingMeasure mu_;
    NeutralSpec D_;
    DriftSpec b_;
    DiffusionSpec sigma_;
    DeclaredParams declared_;
};

/// The worked example model: scalar equation
///   d[x - 0.5 int x_t dmu] = -c x dt + (cos x + int x_t dmu) dw
/// with declared constants (k, l1, l2, l3, l4) = (1/4, c, c/4, 1+eps,
/// (1+eps)/eps) and mu the single exponential with rate rho.
NeutralModel make_example_model(double c, double eps, double rho, double r);

/// Ornstein-Uhlenbeck style test model: D = 0, b = -x, sigma = const.
NeutralModel make_ou_model(double r = 0.25);

}  // namespace nsfde
