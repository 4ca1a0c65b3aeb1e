#include "nsfde/checks.hpp"

#include <cmath>
#include <sstream>

#include "nsfde/errors.hpp"
#include "nsfde/parallel.hpp"

namespace nsfde {

namespace {

constexpr std::uint64_t kPairStride = 4;  // sub-units per sample pair

Segment sample_shape(DrawSeq& draw, int dim, double grid_step, int depth) {
    const int points = depth + 1;
    const double scale = std::pow(10.0, draw.uniform(-2.0, 1.0));
    const double pick = draw.uniform();
    Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(dim, points);

    auto theta = [&](int i) { return -(points - 1 - i) * grid_step; };

    if (pick < 0.30) {
        // Smooth: short trigonometric sum plus offset.
        for (int c = 0; c < dim; ++c) {
            const double offset = scale * draw.uniform(-1.0, 1.0);
            const int terms = 1 + static_cast<int>(draw.uniform(0.0, 3.0));
            std::vector<double> amp(terms), omega(terms), phase(terms);
            for (int k = 0; k < terms; ++k) {
                amp[k] = scale * draw.uniform(-1.0, 1.0);
                omega[k] = draw.uniform(0.05, 2.0);
                phase[k] = draw.uniform(0.0, 2.0 * M_PI);
            }
            for (int i = 0; i < points; ++i) {
                double v = offset;
                for (int k = 0; k < terms; ++k) v += amp[k] * std::cos(omega[k] * theta(i) + phase[k]);
                vals(c, i) = v;
            }
        }
    } else if (pick < 0.60) {
        // Piecewise constant; one piece = fully constant history.
        const int pieces = 1 + static_cast<int>(draw.uniform(0.0, 5.0));
        std::vector<int> cuts{0};
        for (int p = 1; p < pieces; ++p) cuts.push_back(static_cast<int>(draw.uniform_int(points)));
        cuts.push_back(points);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
            Eigen::VectorXd level(dim);
            for (int c = 0; c < dim; ++c) level[c] = scale * draw.uniform(-1.0, 1.0);
            for (int i = cuts[p]; i < cuts[p + 1]; ++i) vals.col(i) = level;
        }
    } else if (pick < 0.80) {
        // Sparse spikes on a zero background.
        const int spikes = 1 + static_cast<int>(draw.uniform(0.0, 4.0));
        for (int s = 0; s < spikes; ++s) {
            const long i = draw.uniform_int(points);
            for (int c = 0; c < dim; ++c) vals(c, i) = scale * draw.uniform(-1.0, 1.0);
        }
    } else {
        // Exponentially weighted profile A e^{q theta}; q < 0 grows into the
        // past, probing the fading-memory geometry.
        for (int c = 0; c < dim; ++c) {
            const double amp = scale * draw.uniform(-1.0, 1.0);
            const double q = draw.uniform(-0.4, 1.0);
            for (int i = 0; i < points; ++i) vals(c, i) = amp * std::exp(q * theta(i));
        }
    }
    return Segment(grid_step, std::move(vals));
}

}  // namespace

Segment sample_segment(const CounterRng& rng, std::uint64_t unit, int dim,
                       double grid_step, int depth) {
    DrawSeq draw(rng, streams::kCheckSampler, unit);
    return sample_shape(draw, dim, grid_step, depth);
}

std::pair<Segment, Segment> sample_pair(const CounterRng& rng, std::uint64_t unit,
                                        int dim, double grid_step, int depth) {
    DrawSeq mode_draw(rng, streams::kCheckSampler, unit * kPairStride);
    const double mode = mode_draw.uniform();
    Segment phi = sample_segment(rng, unit * kPairStride + 1, dim, grid_step, depth);
    if (mode < 0.50) {
        return {phi, sample_segment(rng, unit * kPairStride + 2, dim, grid_step, depth)};
    }
    if (mode < 0.80) {
        // Small perturbation of a shared base.
        DrawSeq d(rng, streams::kCheckSampler, unit * kPairStride + 3);
        const double delta = std::pow(10.0, d.uniform(-4.0, 0.0));
        Eigen::MatrixXd vals = phi.values();
        for (Eigen::Index i = 0; i < vals.cols(); ++i) {
            for (int c = 0; c < dim; ++c) vals(c, i) += delta * d.normal();
        }
        return {phi, Segment(grid_step, std::move(vals))};
    }
    // Contrast against a constant (often zero) history.
    DrawSeq d(rng, streams::kCheckSampler, unit * kPairStride + 3);
    Eigen::VectorXd level = Eigen::VectorXd::Zero(dim);
    if (d.uniform() < 0.5) {
        for (int c = 0; c < dim; ++c) level[c] = d.uniform(-2.0, 2.0);
    }
    return {phi, Segment::constant(grid_step, depth, level)};
}

namespace {

struct SampleStat {
    double value = -std::numeric_limits<double>::infinity();
    long index = -1;
};

int checker_depth(const NeutralModel& model, double grid_step) {
    const double mu2r = r_moment(model.mu(), 2.0 * model.r());
    const double T = required_depth(model.mu(), model.r(), 1e-10 * mu2r, grid_step);
    return std::max(2, static_cast<int>(std::lround(T / grid_step)));
}

CheckReport run_pair_check(
    const NeutralModel& model, const CheckConfig& cfg, const std::string& name,
    const std::function<double(const Segment&, const Segment&)>& statistic,
    double threshold, const std::string& detail_fmt) {
    const int depth = checker_depth(model, cfg.grid_step);
    CounterRng rng(cfg.seed);
    std::vector<double> stats(static_cast<std::size_t>(cfg.trials));

    parallel_for(cfg.trials, resolve_threads(cfg.threads), [&](long i) {
        auto [phi, psi] = sample_pair(rng, static_cast<std::uint64_t>(i), model.dim(),
                                      cfg.grid_step, depth);
        stats[static_cast<std::size_t>(i)] = statistic(phi, psi);
    });

    SampleStat worst;
    for (long i = 0; i < cfg.trials; ++i) {
        if (stats[static_cast<std::size_t>(i)] > worst.value) {
            worst.value = stats[static_cast<std::size_t>(i)];
            worst.index = i;
        }
    }

    CheckReport report;
    report.name = name;
    report.trials = cfg.trials;
    report.worst = worst.value;
    report.threshold = threshold;
    report.worst_index = worst.index;
    report.pass = worst.value <= threshold;
    if (worst.index >= 0) {
        auto [phi, psi] = sample_pair(rng, static_cast<std::uint64_t>(worst.index),
                                      model.dim(), cfg.grid_step, depth);
        report.witness = {phi, psi};
    }
    std::ostringstream msg;
    msg << name << ": " << (report.pass ? "no violation" : "violated") << " over "
        << cfg.trials << " samples; " << detail_fmt << " = " << worst.value
        << " (threshold " << threshold << ")";
    report.detail = msg.str();
    return report;
}

double squared_integral(const NeutralModel& model, const Segment& diff) {
    return integrate_segment(model.mu(), diff, IntegrationMode::squared, model.r()).squared;
}

}  // namespace

CheckReport verify_h1(const NeutralModel& model, const CheckConfig& cfg) {
    const double k = model.declared().k;
    auto statistic = [&](const Segment& phi, const Segment& psi) {
        const Segment diff = segment_sub(phi, psi);
        const double rhs = squared_integral(model, diff);
        const double lhs = (model.D(phi) - model.D(psi)).squaredNorm();
        if (rhs == 0.0) {
            // Degenerate sample: a positive LHS here is an instant witness.
            return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        return lhs / rhs;
    };
    return run_pair_check(model, cfg, "H1 neutral contraction", statistic,
                          k * (1.0 + cfg.tol), "max ratio");
}

namespace {

double normalized_violation(double lhs, double rhs) {
    const double denom = std::abs(lhs) + std::abs(rhs) + 1e-300;
    return (lhs - rhs) / denom;
}

}  // namespace

CheckReport verify_h2_drift(const NeutralModel& model, const CheckConfig& cfg) {
    const auto& d = model.declared();
    auto statistic = [&](const Segment& phi, const Segment& psi) {
        const Segment diff = segment_sub(phi, psi);
        const Eigen::VectorXd dz = phi.newest() - psi.newest();
        const Eigen::VectorXd dd = model.D(phi) - model.D(psi);
        const Eigen::VectorXd db = model.b(phi) - model.b(psi);
        const double lhs = (dz - dd).dot(db);
        const double rhs =
            -d.lambda1 * dz.squaredNorm() + d.lambda2 * squared_integral(model, diff);
        return normalized_violation(lhs, rhs);
    };
    return run_pair_check(model, cfg, "H2 drift dissipativity", statistic, cfg.tol,
                          "max normalized violation");
}

CheckReport verify_h2_diffusion(const NeutralModel& model, const CheckConfig& cfg) {
    const auto& d = model.declared();
    auto statistic = [&](const Segment& phi, const Segment& psi) {
        const Segment diff = segment_sub(phi, psi);
        const Eigen::VectorXd dz = phi.newest() - psi.newest();
        const double lhs = (model.sigma(phi) - model.sigma(psi)).squaredNorm();
        const double rhs =
            d.lambda3 * dz.squaredNorm() + d.lambda4 * squared_integral(model, diff);
        return normalized_violation(lhs, rhs);
    };
    return run_pair_check(model, cfg, "H2 diffusion growth", statistic, cfg.tol,
                          "max normalized violation");
}

CheckReport monotone_check(const NeutralModel& model, const ConstantLedger& ledger,
                           const CheckConfig& cfg) {
    const int depth = checker_depth(model, cfg.grid_step);
    CounterRng rng(cfg.seed);
    std::vector<double> stats(static_cast<std::size_t>(cfg.trials));

    auto statistic = [&](const Segment& phi) {
        const Eigen::VectorXd x0 = phi.newest();
        const Eigen::VectorXd I =
            integrate_segment(model.mu(), phi, IntegrationMode::linear, model.r()).linear;
        const double lhs = 2.0 * (x0 - model.neutral_from(I)).dot(model.drift_from(x0, I)) +
                           model.diffusion_from(x0, I).squaredNorm();
        const double rhs = -ledger.alpha1 * x0.squaredNorm() +
                           ledger.alpha2 * squared_integral(model, phi) + ledger.N;
        return normalized_violation(lhs, rhs);
    };

    parallel_for(cfg.trials, resolve_threads(cfg.threads), [&](long i) {
        stats[static_cast<std::size_t>(i)] = statistic(
            sample_segment(rng, static_cast<std::uint64_t>(i), model.dim(), cfg.grid_step, depth));
    });

    CheckReport report;
    report.name = "strong monotone condition";
    report.trials = cfg.trials;
    report.threshold = cfg.tol;
    report.worst = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < cfg.trials; ++i) {
        if (stats[static_cast<std::size_t>(i)] > report.worst) {
            report.worst = stats[static_cast<std::size_t>(i)];
            report.worst_index = i;
        }
    }
    report.pass = report.worst <= report.threshold;
    if (report.worst_index >= 0) {
        report.witness = {sample_segment(rng, static_cast<std::uint64_t>(report.worst_index),
                                         model.dim(), cfg.grid_step, depth)};
    }
    std::ostringstream msg;
    msg << report.name << ": " << (report.pass ? "no violation" : "violated") << " over "
        << cfg.trials << " samples; max normalized violation = " << report.worst;
    report.detail = msg.str();
    return report;
}

}  // namespace nsfde
