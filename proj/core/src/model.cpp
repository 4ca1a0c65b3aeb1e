#include "nsfde/model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "nsfde/errors.hpp"

namespace nsfde {

Nonlinearity nonlinearity_from_string(const std::string& name) {
    if (name == "zero") return Nonlinearity::zero;
    if (name == "identity") return Nonlinearity::identity;
    if (name == "cos") return Nonlinearity::cos;
    if (name == "sin") return Nonlinearity::sin;
    if (name == "table") return Nonlinearity::table;
    throw ConfigError("unknown nonlinearity: " + name, "sigma.nonlin");
}

std::string to_string(Nonlinearity n) {
    switch (n) {
        case Nonlinearity::zero: return "zero";
        case Nonlinearity::identity: return "identity";
        case Nonlinearity::cos: return "cos";
        case Nonlinearity::sin: return "sin";
        case Nonlinearity::table: return "table";
    }
    return "zero";
}

namespace {

double table_eval(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double frac = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + frac * (ys[hi] - ys[hi - 1]);
}

}  // namespace

Eigen::VectorXd PointwiseMap::operator()(const Eigen::VectorXd& x) const {
    switch (kind) {
        case Nonlinearity::zero:
            return Eigen::VectorXd::Zero(x.size());
        case Nonlinearity::identity:
            return x;
        case Nonlinearity::cos:
            return x.array().cos();
        case Nonlinearity::sin:
            return x.array().sin();
        case Nonlinearity::table: {
            Eigen::VectorXd out(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                out[i] = table_eval(xs, ys, x[i]);
            }
            return out;
        }
    }
    return Eigen::VectorXd::Zero(x.size());
}

NeutralModel::NeutralModel(int dim, double r, FadingMeasure mu, NeutralSpec D,
                           DriftSpec b, DiffusionSpec sigma, DeclaredParams declared)
    : dim_(dim), r_(r), mu_(std::move(mu)), D_(std::move(D)), b_(std::move(b)),
      sigma_(std::move(sigma)), declared_(declared) {
    if (dim_ < 1) throw ConfigError("model dim must be >= 1", "dim");
    if (!(r_ > 0.0)) throw ConfigError("model r must be > 0", "r");
    auto square = [&](const Eigen::MatrixXd& m, const char* field) {
        if (m.rows() != dim_ || m.cols() != dim_) {
            throw ConfigError(std::string("matrix must be dim x dim: ") + field, field);
        }
    };
    square(D_.kappa, "D.kappa");
    square(b_.A, "b.A");
    square(b_.B, "b.B");
    if (b_.b0.size() != dim_) throw ConfigError("b.b0 must have length dim", "b.b0");
    if (sigma_.columns.empty()) {
        throw ConfigError("sigma needs at least one column", "sigma.columns");
    }
    for (const auto& col : sigma_.columns) {
        square(col.S, "sigma.S");
        square(col.C, "sigma.C");
        if (col.s0.size() != dim_) throw ConfigError("sigma.s0 must have length dim", "sigma.s0");
    }
    if (sigma_.nonlin.kind == Nonlinearity::table) {
        const auto& xs = sigma_.nonlin.xs;
        if (xs.size() < 2 || xs.size() != sigma_.nonlin.ys.size() ||
            !std::is_sorted(xs.begin(), xs.end())) {
            throw ConfigError("sigma.table needs sorted xs matching ys", "sigma.table");
        }
    }
    const auto& d = declared_;
    if (!(d.k > 0.0 && d.k < 1.0)) throw ConfigError("declared k must lie in (0,1)", "declared.k");
    if (!(d.lambda1 > 0.0 && d.lambda2 > 0.0 && d.lambda3 > 0.0 && d.lambda4 > 0.0)) {
        throw ConfigError("declared lambda1..lambda4 must be positive", "declared");
    }
}

Eigen::VectorXd NeutralModel::neutral_from(const Eigen::VectorXd& I) const {
    return D_.kappa * I;
}

Eigen::VectorXd NeutralModel::drift_from(const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& I) const {
    return b_.A * x0 + b_.B * I + b_.b0;
}

Eigen::MatrixXd NeutralModel::diffusion_from(const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& I) const {
    const Eigen::VectorXd g = sigma_.nonlin(x0);
    Eigen::MatrixXd out(dim_, noise_dim());
    for (int j = 0; j < noise_dim(); ++j) {
        const auto& col = sigma_.columns[static_cast<std::size_t>(j)];
        out.col(j) = col.S * g + col.C * I + col.s0;
    }
    return out;
}

namespace {

Eigen::VectorXd measure_integral(const NeutralModel& m, const Segment& phi) {
    return integrate_segment(m.mu(), phi, IntegrationMode::linear, m.r()).linear;
}

}  // namespace

Eigen::VectorXd NeutralModel::D(const Segment& phi) const {
    return neutral_from(measure_integral(*this, phi));
}

Eigen::VectorXd NeutralModel::b(const Segment& phi) const {
    return drift_from(phi.newest(), measure_integral(*this, phi));
}

Eigen::MatrixXd NeutralModel::sigma(const Segment& phi) const {
    return diffusion_from(phi.newest(), measure_integral(*this, phi));
}

Eigen::VectorXd NeutralModel::b_at_zero() const { return b_.b0; }

Eigen::MatrixXd NeutralModel::sigma_at_zero() const {
    return diffusion_from(Eigen::VectorXd::Zero(dim_), Eigen::VectorXd::Zero(dim_));
}

namespace {

/// Accepts a scalar (meaning scalar * identity) or a full row-major matrix.
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int dim, const std::string& field) {
    if (j.is_number()) {
        return j.get<double>() * Eigen::MatrixXd::Identity(dim, dim);
    }
    if (!j.is_array()) throw ConfigError("expected number or matrix", field);
    Eigen::MatrixXd m(dim, dim);
    if (static_cast<int>(j.size()) != dim) throw ConfigError("matrix row count != dim", field);
    for (int i = 0; i < dim; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<int>(row.size()) != dim) {
            throw ConfigError("matrix column count != dim", field);
        }
        for (int c = 0; c < dim; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, int dim, const std::string& field) {
    if (j.is_number()) return Eigen::VectorXd::Constant(dim, j.get<double>());
    if (!j.is_array() || static_cast<int>(j.size()) != dim) {
        throw ConfigError("expected number or length-dim array", field);
    }
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

DiffusionColumn column_from_json(const nlohmann::json& j, int dim, const std::string& field) {
    DiffusionColumn col;
    col.S = j.contains("S") ? matrix_from_json(j.at("S"), dim, field + ".S")
                            : Eigen::MatrixXd::Zero(dim, dim);
    col.C = j.contains("C") ? matrix_from_json(j.at("C"), dim, field + ".C")
                            : Eigen::MatrixXd::Zero(dim, dim);
    col.s0 = j.contains("sigma0") ? vector_from_json(j.at("sigma0"), dim, field + ".sigma0")
                                  : Eigen::VectorXd::Zero(dim);
    return col;
}

}  // namespace

NeutralModel NeutralModel::from_json(const nlohmann::json& j) {
    const int dim = j.at("dim").get<int>();
    const double r = j.at("r").get<double>();
    FadingMeasure mu = FadingMeasure::from_json(j.at("measure"));

    NeutralSpec D;
    D.kappa = j.contains("D") && j.at("D").contains("kappa")
                  ? matrix_from_json(j.at("D").at("kappa"), dim, "D.kappa")
                  : Eigen::MatrixXd::Zero(dim, dim);

    DriftSpec b;
    const auto& jb = j.at("b");
    b.A = jb.contains("A") ? matrix_from_json(jb.at("A"), dim, "b.A")
                           : Eigen::MatrixXd::Zero(dim, dim);
    b.B = jb.contains("B") ? matrix_from_json(jb.at("B"), dim, "b.B")
                           : Eigen::MatrixXd::Zero(dim, dim);
    b.b0 = jb.contains("b0") ? vector_from_json(jb.at("b0"), dim, "b.b0")
                             : Eigen::VectorXd::Zero(dim);

    DiffusionSpec sigma;
    const auto& js = j.at("sigma");
    sigma.nonlin.kind = nonlinearity_from_string(
        js.contains("nonlin") ? js.at("nonlin").get<std::string>() : "zero");
    if (sigma.nonlin.kind == Nonlinearity::table) {
        sigma.nonlin.xs = js.at("table").at("x").get<std::vector<double>>();
        sigma.nonlin.ys = js.at("table").at("y").get<std::vector<double>>();
    }
    if (js.contains("columns")) {
        int ci = 0;
        for (const auto& jc : js.at("columns")) {
            sigma.columns.push_back(
                column_from_json(jc, dim, "sigma.columns[" + std::to_string(ci++) + "]"));
        }
    } else {
        sigma.columns.push_back(column_from_json(js, dim, "sigma"));
    }

    const auto& jd = j.at("declared");
    DeclaredParams declared{jd.at("k").get<double>(), jd.at("lambda1").get<double>(),
                            jd.at("lambda2").get<double>(), jd.at("lambda3").get<double>(),
                            jd.at("lambda4").get<double>()};

    return NeutralModel(dim, r, std::move(mu), std::move(D), std::move(b),
                        std::move(sigma), declared);
}

nlohmann::json NeutralModel::to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["r"] = r_;
    j["measure"] = mu_.to_json();
    j["D"] = {{"kappa", matrix_to_json(D_.kappa)}};
    j["b"] = {{"A", matrix_to_json(b_.A)},
              {"B", matrix_to_json(b_.B)},
              {"b0", vector_to_json(b_.b0)}};
    nlohmann::json js;
    js["nonlin"] = to_string(sigma_.nonlin.kind);
    if (sigma_.nonlin.kind == Nonlinearity::table) {
        js["table"] = {{"x", sigma_.nonlin.xs}, {"y", sigma_.nonlin.ys}};
    }
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : sigma_.columns) {
        cols.push_back({{"S", matrix_to_json(col.S)},
                        {"C", matrix_to_json(col.C)},
                        {"sigma0", vector_to_json(col.s0)}});
    }
    js["columns"] = cols;
    j["sigma"] = js;
    j["declared"] = {{"k", declared_.k},
                     {"lambda1", declared_.lambda1},
                     {"lambda2", declared_.lambda2},
                     {"lambda3", declared_.lambda3},
                     {"lambda4", declared_.lambda4}};
    return j;
}

NeutralModel make_example_model(double c, double eps, double rho, double r) {
    if (!(c > 0.0) || !(eps > 0.0)) throw ConfigError("example model needs c > 0, eps > 0");
    if (!(rho > 2.0 * r)) throw MeasureError("example model needs rho > 2r (mu in M_{2r})");
    const int d = 1;
    NeutralSpec D{0.5 * Eigen::MatrixXd::Identity(d, d)};
    DriftSpec b{-c * Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Zero(d, d),
                Eigen::VectorXd::Zero(d)};
    DiffusionSpec sigma;
    sigma.nonlin.kind = Nonlinearity::cos;
    sigma.columns.push_back({Eigen::MatrixXd::Identity(d, d),
                             Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)});
    DeclaredParams declared{0.25, c, c / 4.0, 1.0 + eps, (1.0 + eps) / eps};
    return NeutralModel(d, r, FadingMeasure::single_exponential(rho), std::move(D),
                        std::move(b), std::move(sigma), declared);
}

NeutralModel make_ou_model(double r) {
    const int d = 1;
    NeutralSpec D{Eigen::MatrixXd::Zero(d, d)};
    DriftSpec b{-Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Zero(d, d),
                Eigen::VectorXd::Zero(d)};
    DiffusionSpec sigma;
    sigma.nonlin.kind = Nonlinearity::zero;
    sigma.columns.push_back({Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d),
                             Eigen::VectorXd::Ones(d)});
    // b = -x gives the pair constants (1, small); sigma is constant so the
    // diffusion constants can be declared tiny.
    DeclaredParams declared{0.5, 1.0, 1e-3, 1e-3, 1e-3};
    return NeutralModel(d, r, FadingMeasure::point_mass(0.0), std::move(D), std::move(b),
                        std::move(sigma), declared);
}

}  // namespace nsfde
