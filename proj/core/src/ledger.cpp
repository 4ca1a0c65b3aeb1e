#include "nsfde/ledger.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nsfde/errors.hpp"

namespace nsfde {

namespace {

struct LedgerInputs {
    double k, l1, l2, l3, l4, r, mu2r, b0_sq, s0_sq;
};

double positivity_bracket(const LedgerInputs& in, double lambda, double eps1, double eps2) {
    const double M = (1.0 + in.k) * (1.0 + in.mu2r);
    return 2.0 * in.l1 - M * lambda - 2.0 * eps1 - 73.0 * in.l3 / (1.0 - eps2) -
           (2.0 * in.l2 + 2.0 * in.k * eps1 + 73.0 * in.l4 / (1.0 - eps2)) * in.mu2r;
}

}  // namespace

ConstantLedger constant_ledger(const NeutralModel& model, std::optional<double> eps1_opt,
                               std::optional<double> eps2_opt,
                               std::optional<double> lambda_choice) {
    const auto& d = model.declared();
    LedgerInputs in;
    in.k = d.k;
    in.l1 = d.lambda1;
    in.l2 = d.lambda2;
    in.l3 = d.lambda3;
    in.l4 = d.lambda4;
    in.r = model.r();
    in.mu2r = r_moment(model.mu(), 2.0 * model.r());
    in.b0_sq = model.b_at_zero().squaredNorm();
    in.s0_sq = model.sigma_at_zero().squaredNorm();  // trace norm squared

    ConstantLedger out;
    out.mu2r = in.mu2r;

    if (!std::isfinite(in.mu2r)) {
        out.admissible = false;
        out.reasons.push_back("mu not in M_{2r}: mu^(2r) is infinite");
        return out;
    }

    out.M = (1.0 + in.k) * (1.0 + in.mu2r);
    out.k1 = in.k * in.mu2r / (1.0 - in.k);
    out.k2 = 1.0 / ((1.0 - in.k) * (1.0 - in.k));
    out.k3 = out.k1;
    out.k4 = out.k2;
    out.margin = 2.0 * in.l1 - 73.0 * in.l3 - 2.0 * in.l2 * in.mu2r - 73.0 * in.l4 * in.mu2r;
    out.lambda_max = std::min(out.margin / out.M, 2.0 * in.r);

    bool admissible = true;
    if (!(out.margin > 0.0)) {
        admissible = false;
        std::ostringstream msg;
        msg << "2*lambda1 > 73*lambda3 + 2*lambda2*mu2r + 73*lambda4*mu2r fails: "
            << 2.0 * in.l1 << " <= " << (2.0 * in.l1 - out.margin);
        out.reasons.push_back(msg.str());
    }
    if (!(in.k * in.mu2r < 1.0)) {
        admissible = false;
        std::ostringstream msg;
        msg << "k*mu2r < 1 fails: " << in.k * in.mu2r;
        out.reasons.push_back(msg.str());
    }

    const bool lambda_interval_ok = admissible && out.lambda_max > 0.0;
    if (lambda_choice) {
        if (!lambda_interval_ok || !(*lambda_choice > 0.0) ||
            !(*lambda_choice < out.lambda_max)) {
            throw RangeError("lambda_choice outside (0, lambda_max)");
        }
        out.lambda = *lambda_choice;
    } else {
        // With an empty decay interval the rate is left at 0; the
        // eps-independent constants below stay meaningful either way.
        out.lambda = lambda_interval_ok ? out.lambda_max / 2.0 : 0.0;
    }

    if (eps1_opt && eps2_opt) {
        out.eps1 = *eps1_opt;
        out.eps2 = *eps2_opt;
        if (!(out.eps1 > 0.0)) throw RangeError("eps1 must be > 0");
        if (!(out.eps2 > 0.0 && out.eps2 < 1.0)) throw RangeError("eps2 must lie in (0,1)");
    } else {
        // Coarse grid search maximizing the positivity bracket.
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 12; ++i) {
            const double e1 = eps1_opt ? *eps1_opt : std::pow(10.0, -3.0 + 0.25 * i);
            for (int j = 0; j < 19; ++j) {
                const double e2 = eps2_opt ? *eps2_opt : 0.05 + 0.05 * j;
                const double br = positivity_bracket(in, out.lambda, e1, e2);
                if (br > best) {
                    best = br;
                    out.eps1 = e1;
                    out.eps2 = e2;
                }
                if (eps2_opt) break;
            }
            if (eps1_opt) break;
        }
    }

    out.bracket = positivity_bracket(in, out.lambda, out.eps1, out.eps2);
    if (!(out.bracket > 0.0)) {
        admissible = false;
        std::ostringstream msg;
        msg << "eps-dependent bracket non-positive at lambda=" << out.lambda << ": "
            << out.bracket;
        out.reasons.push_back(msg.str());
    }
    out.admissible = admissible && lambda_interval_ok;

    out.alpha1 = 2.0 * in.l1 - 2.0 * out.eps1 - in.l3 / (1.0 - out.eps2);
    out.alpha2 = 2.0 * in.l2 + 2.0 * in.k * out.eps1 + in.l4 / (1.0 - out.eps2);
    out.N = in.b0_sq / out.eps1 + in.s0_sq / out.eps2;

    if (out.admissible) {
        const double lam = out.lambda;
        const double tail_factor = in.mu2r / (2.0 * in.r - lam);
        out.C1 = (2.0 * out.k2 / lam) *
                 (73.0 * in.s0_sq / out.eps2 + in.b0_sq / out.eps1);
        out.C2 = out.k1 +
                 2.0 * out.k2 *
                     (out.M + tail_factor * ((1.0 + in.k) * lam + 2.0 * in.l2 +
                                             2.0 * in.k * out.eps1 +
                                             73.0 * in.l4 / (1.0 - out.eps2)));
        out.C3 = out.k3 +
                 2.0 * out.k4 *
                     (out.M + tail_factor * ((1.0 + in.k) * lam + 2.0 * in.l2 +
                                             73.0 * in.l4));
        out.C4 = out.C1;
        out.C5 = 1.0 + out.C2;
        out.C6 = 1.0 + out.C3;
    }
    return out;
}

nlohmann::json ConstantLedger::to_json() const {
    nlohmann::json j;
    j["eps1"] = eps1;
    j["eps2"] = eps2;
    j["mu2r"] = mu2r;
    j["alpha1"] = alpha1;
    j["alpha2"] = alpha2;
    j["N"] = N;
    j["M"] = M;
    j["k1"] = k1;
    j["k2"] = k2;
    j["k3"] = k3;
    j["k4"] = k4;
    j["margin"] = margin;
    j["bracket"] = bracket;
    j["lambda_max"] = lambda_max;
    j["lambda"] = lambda;
    if (admissible) {
        j["C1"] = C1;
        j["C2"] = C2;
        j["C3"] = C3;
        j["C4"] = C4;
        j["C5"] = C5;
        j["C6"] = C6;
    } else {
        j["C1"] = nullptr;
        j["C2"] = nullptr;
        j["C3"] = nullptr;
        j["C4"] = nullptr;
        j["C5"] = nullptr;
        j["C6"] = nullptr;
    }
    j["admissible"] = admissible;
    j["reasons"] = reasons;
    return j;
}

double example5_threshold(double eps, double mu2r) {
    if (!(eps > 0.0)) throw RangeError("example5_threshold: eps must be > 0");
    if (!(mu2r > 0.0 && mu2r < 4.0)) {
        throw RangeError("example5_threshold: no admissible c when mu2r >= 4");
    }
    return (4.0 + 146.0 * (1.0 + eps) + 146.0 * (1.0 + 1.0 / eps) * mu2r) / (4.0 - mu2r);
}

}  // namespace nsfde
