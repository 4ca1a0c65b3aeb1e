#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "nsfde/errors.hpp"
#include "nsfde/model.hpp"

using namespace nsfde;

TEST_CASE("worked example model evaluates as written") {
    const double c = 10.0;
    auto model = make_example_model(c, 1.0, 1.0, 0.25);
    CHECK(model.dim() == 1);
    CHECK(model.noise_dim() == 1);
    CHECK(model.declared().k == 0.25);
    CHECK(model.declared().lambda2 == doctest::Approx(c / 4.0));
    CHECK(model.declared().lambda3 == doctest::Approx(2.0));
    CHECK(model.declared().lambda4 == doctest::Approx(2.0));

    // Coefficients at a known state: x0 = 0.3, measure integral I = 0.2.
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.3);
    const Eigen::VectorXd I = Eigen::VectorXd::Constant(1, 0.2);
    CHECK(model.neutral_from(I)(0) == doctest::Approx(0.1));
    CHECK(model.drift_from(x0, I)(0) == doctest::Approx(-c * 0.3));
    CHECK(model.diffusion_from(x0, I)(0, 0) == doctest::Approx(std::cos(0.3) + 0.2));

    // Zero history: D(0) = 0 by construction, b(0) = 0, sigma(0) = cos(0) = 1.
    CHECK(model.neutral_from(Eigen::VectorXd::Zero(1))(0) == 0.0);
    CHECK(model.b_at_zero()(0) == 0.0);
    CHECK(model.sigma_at_zero()(0, 0) == doctest::Approx(1.0));

    // Segment-based evaluation on a constant history equals the hand value.
    const double T = required_depth(model.mu(), model.r(), 1e-10, 0.01);
    auto seg = Segment::constant(0.01, static_cast<int>(T / 0.01), 0.5);
    CHECK(model.D(seg)(0) == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(model.b(seg)(0) == doctest::Approx(-c * 0.5).epsilon(1e-8));
    CHECK(model.sigma(seg)(0, 0) == doctest::Approx(std::cos(0.5) + 0.5).epsilon(1e-8));
}

TEST_CASE("declared parameter validation") {
    auto bad = [](double k) {
        DeclaredParams d{k, 1.0, 1.0, 1.0, 1.0};
        NeutralSpec D{Eigen::MatrixXd::Zero(1, 1)};
        DriftSpec b{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                    Eigen::VectorXd::Zero(1)};
        DiffusionSpec s;
        s.columns.push_back({Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                             Eigen::VectorXd::Zero(1)});
        return NeutralModel(1, 0.25, FadingMeasure::point_mass(0.0), D, b, s, d);
    };
    CHECK_THROWS_AS(bad(0.0), ConfigError);
    CHECK_THROWS_AS(bad(1.0), ConfigError);
    CHECK_NOTHROW(bad(0.5));
}

TEST_CASE("table nonlinearity interpolates and clamps") {
    PointwiseMap map;
    map.kind = Nonlinearity::table;
    map.xs = {-1.0, 0.0, 1.0};
    map.ys = {0.0, 1.0, 0.0};
    Eigen::VectorXd x(4);
    x << -2.0, -0.5, 0.5, 2.0;
    const Eigen::VectorXd y = map(x);
    CHECK(y(0) == 0.0);   // clamped
    CHECK(y(1) == doctest::Approx(0.5));
    CHECK(y(2) == doctest::Approx(0.5));
    CHECK(y(3) == 0.0);   // clamped
}

TEST_CASE("model json round trip") {
    auto model = make_example_model(450.0, std::sqrt(2.0), 1.0, 0.25);
    const auto j = model.to_json();
    auto back = NeutralModel::from_json(j);
    CHECK(back.dim() == model.dim());
    CHECK(back.r() == model.r());
    CHECK(back.declared().lambda1 == model.declared().lambda1);
    CHECK(back.neutral().kappa == model.neutral().kappa);
    CHECK(back.to_json() == j);

    // Scalar shorthand expands to scalar * identity.
    auto j2 = nlohmann::json::parse(R"({
      "dim": 2, "r": 0.25,
      "measure": {"exp": [{"rho": 2.0, "w": 1.0}]},
      "D": {"kappa": 0.5},
      "b": {"A": -1.0},
      "sigma": {"nonlin": "zero", "sigma0": [1.0, 0.0]},
      "declared": {"k": 0.25, "lambda1": 1.0, "lambda2": 0.1, "lambda3": 0.1, "lambda4": 0.1}
    })");
    auto m2 = NeutralModel::from_json(j2);
    CHECK(m2.dim() == 2);
    CHECK(m2.neutral().kappa == 0.5 * Eigen::MatrixXd::Identity(2, 2));
    CHECK(m2.sigma_at_zero()(0, 0) == 1.0);
    CHECK(m2.sigma_at_zero()(1, 0) == 0.0);
}
