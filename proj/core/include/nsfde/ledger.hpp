#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nsfde/model.hpp"

namespace nsfde {

/// Every derived constant of the stability analysis, computed from the
/// model's declared parameters, plus the admissibility verdict. Identical
/// inputs produce a bit-identical ledger.
///
/// C5 and C6 are stored as the initial-data-free factors: the segment-norm
/// bounds read C4 + C5 * E||xi||_r^2 e^{-lambda t} and
/// C6 * E||xi - eta||_r^2 e^{-lambda t}.
struct ConstantLedger {
    double eps1 = 0.0, eps2 = 0.0;
    double mu2r = 0.0;
    double alpha1 = 0.0, alpha2 = 0.0, N = 0.0;
    double M = 0.0;
    double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
    double margin = 0.0;      // 2 l1 - 73 l3 - 2 l2 mu2r - 73 l4 mu2r
    double bracket = 0.0;     // eps-dependent positivity bracket at lambda
    double lambda_max = 0.0;  // min(margin / M, 2r)
    double lambda = 0.0;      // chosen decay rate in (0, lambda_max)
    double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0, C5 = 0.0, C6 = 0.0;
    bool admissible = false;
    std::vector<std::string> reasons;  // violated inequalities when not admissible

    nlohmann::json to_json() const;
};

/// Compute the ledger. When eps1/eps2 are not supplied they are picked by a
/// coarse grid search (eps1 in [1e-3, 1] log-spaced, eps2 in [0.05, 0.95])
/// maximizing the positivity bracket at the chosen lambda. lambda defaults
/// to lambda_max / 2; an explicit choice outside (0, lambda_max) is a
/// RangeError.
ConstantLedger constant_ledger(const NeutralModel& model,
                               std::optional<double> eps1 = std::nullopt,
                               std::optional<double> eps2 = std::nullopt,
                               std::optional<double> lambda_choice = std::nullopt);

/// Minimal admissible c for the worked example:
///   (4 + 146 (1+eps) + 146 (1+1/eps) mu2r) / (4 - mu2r).
/// RangeError when mu2r >= 4 (no admissible c) or eps <= 0.
double example5_threshold(double eps, double mu2r);

}  // namespace nsfde
