#include "nsfde/stability.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "nsfde/errors.hpp"
#include "nsfde/numeric.hpp"

namespace nsfde {

const CurveSeries& second_moment_curve(const Ensemble& ens) {
    if (ens.n_paths < 1) throw RangeError("second_moment_curve: empty ensemble");
    return ens.second_moment;
}

const CurveSeries& segment_norm_curve(const Ensemble& ens) {
    if (ens.crnorm_sq.t.empty()) {
        throw RangeError("segment_norm_curve: no checkpoints were recorded");
    }
    return ens.crnorm_sq;
}

FitResult fit_decay_rate(std::span<const double> t, std::span<const double> value,
                         PlateauMode mode) {
    if (t.size() != value.size() || t.size() < 4) {
        throw FitError("fit_decay_rate: need at least 4 points");
    }
    double plateau = 0.0;
    std::size_t usable_end = t.size();
    if (mode == PlateauMode::estimated) {
        const std::size_t tail = std::max<std::size_t>(2, t.size() / 4);
        std::vector<double> tail_vals(value.end() - tail, value.end());
        plateau = pairwise_sum(tail_vals) / static_cast<double>(tail);
        // Fit only points clearly above the plateau.
        double peak = 0.0;
        for (double v : value) peak = std::max(peak, v - plateau);
        if (!(peak > 0.0)) throw FitError("fit_decay_rate: no points above the plateau");
        const double cutoff = 1e-3 * peak;
        while (usable_end > 0 && value[usable_end - 1] - plateau <= cutoff) --usable_end;
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < usable_end; ++i) {
        const double resid = value[i] - plateau;
        if (mode == PlateauMode::zero && resid <= 0.0) {
            throw FitError("fit_decay_rate: non-positive value with zero plateau");
        }
        if (resid > 0.0) {
            xs.push_back(t[i]);
            ys.push_back(std::log(resid));
        }
    }
    if (xs.size() < 4) throw FitError("fit_decay_rate: fewer than 4 usable points");
    const LineFit line = fit_line(xs, ys);
    FitResult out;
    out.rate = -line.slope;
    out.intercept = std::exp(line.intercept);
    out.r2 = line.r2;
    return out;
}

FitResult fit_decay_rate(const CurveSeries& curve, PlateauMode mode) {
    return fit_decay_rate(curve.t, curve.mean, mode);
}

std::vector<BoundCheck> check_curve_bound(const CurveSeries& curve,
                                          const std::function<double(double)>& bound,
                                          double slack_rel) {
    std::vector<BoundCheck> out;
    out.reserve(curve.t.size());
    for (std::size_t i = 0; i < curve.t.size(); ++i) {
        BoundCheck c;
        c.t = curve.t[i];
        c.estimate = curve.mean[i];
        c.stderr_ = curve.stderr_[i];
        c.bound = bound(curve.t[i]);
        c.pass = c.estimate <= c.bound * (1.0 + slack_rel) + 3.0 * c.stderr_;
        out.push_back(c);
    }
    return out;
}

namespace {

/// Scheme-error allowance for bound checks: relative O(h) slack.
constexpr double kSchemeSlackFactor = 10.0;

}  // namespace

CouplingReport coupling_decay(const NeutralModel& model, const Segment& xi,
                              const Segment& eta, const SchemeConfig& cfg, long n_pairs,
                              const ConstantLedger& ledger, const EnsembleRequest& request) {
    CouplingReport report;
    report.data = simulate_coupled_ensemble(model, xi, eta, n_pairs, cfg, request);
    const Segment gap = segment_sub(xi, eta);
    const double gap_cr = cr_norm(gap, model.r());
    report.init_gap_crnorm_sq = gap_cr * gap_cr;

    const double slack = kSchemeSlackFactor * cfg.h;
    if (ledger.admissible) {
        const double lam = ledger.lambda;
        report.running_sup_bound = check_curve_bound(
            report.data.running_sup,
            [&](double t) { return ledger.C3 * report.init_gap_crnorm_sq * std::exp(-lam * t); },
            slack);
        report.segment_bound = check_curve_bound(
            report.data.diff_crnorm_sq,
            [&](double t) { return ledger.C6 * report.init_gap_crnorm_sq * std::exp(-lam * t); },
            slack);
    }

    if (report.init_gap_crnorm_sq == 0.0) {
        // Identical initial data: the difference is identically zero and
        // there is nothing to fit.
        report.decaying = true;
        return report;
    }

    // Fit the trailing-window envelope on its decaying stretch: from the
    // peak down to the floating-point floor.
    const auto& env = report.data.window_sup;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < env.mean.size(); ++i) {
        if (env.mean[i] > env.mean[peak]) peak = i;
    }
    std::vector<double> ts, vs;
    const double floor_value = env.mean[peak] * 1e-12;
    for (std::size_t i = peak; i < env.mean.size(); ++i) {
        if (env.mean[i] > floor_value) {
            ts.push_back(env.t[i]);
            vs.push_back(env.mean[i]);
        }
    }
    try {
        report.window_fit = fit_decay_rate(ts, vs, PlateauMode::zero);
        report.decaying = report.window_fit->rate > 0.0;
    } catch (const FitError&) {
        // Non-decaying envelope is a finding (bound-violation candidate),
        // not an exception.
        report.decaying = false;
    }
    return report;
}

DLReport stability_in_distribution_report(const NeutralModel& model,
                                          const std::vector<Segment>& initial_data,
                                          const SchemeConfig& cfg,
                                          const std::vector<double>& checkpoints,
                                          const DistributionConfig& dcfg) {
    if (initial_data.size() < 2) {
        throw RangeError("stability report needs at least two initial data");
    }
    if (checkpoints.size() < 2 ||
        !std::is_sorted(checkpoints.begin(), checkpoints.end())) {
        throw RangeError("stability report needs increasing checkpoints");
    }

    EnsembleRequest request;
    request.checkpoints = checkpoints;
    request.curve_times = {cfg.T};
    request.store_segments = true;
    request.segment_max_points = dcfg.segment_max_points;

    // All ensembles share the master seed: coupling the noise across initial
    // data leaves every marginal law untouched, shrinks the variance of the
    // cross estimate, and makes identical initial data compare to exactly 0.
    std::vector<Ensemble> ensembles;
    ensembles.reserve(initial_data.size());
    for (const auto& xi : initial_data) {
        ensembles.push_back(simulate_ensemble(model, xi, dcfg.n_paths, cfg, request));
    }

    DLReport report;
    report.family_size = dcfg.family_size;
    report.threshold = dcfg.threshold;

    const auto& ens_a = ensembles[0];
    const auto& ens_b = ensembles[1];
    const double r = model.r();
    for (std::size_t c = 0; c < ens_a.checkpoint_times.size(); ++c) {
        DlCheckpoint cp;
        cp.t = ens_a.checkpoint_times[c];
        cp.cross = empirical_dl(ens_a.segments[c], ens_b.segments[c], r,
                                dcfg.family_size, cfg.master_seed);
        cp.floor_a = split_half_floor(ens_a.segments[c], r, dcfg.family_size,
                                      cfg.master_seed, dcfg.n_splits);
        cp.floor_b = split_half_floor(ens_b.segments[c], r, dcfg.family_size,
                                      cfg.master_seed, dcfg.n_splits);
        report.cross.push_back(cp);
    }

    for (const auto& ens : ensembles) {
        std::vector<DlConsecutive> row;
        for (std::size_t c = 0; c + 1 < ens.checkpoint_times.size(); ++c) {
            DlConsecutive d;
            d.t_from = ens.checkpoint_times[c];
            d.t_to = ens.checkpoint_times[c + 1];
            d.dl = empirical_dl(ens.segments[c], ens.segments[c + 1], r,
                                dcfg.family_size, cfg.master_seed);
            row.push_back(d);
        }
        report.consecutive.push_back(std::move(row));
    }

    report.cross_decreasing = true;
    for (std::size_t c = 0; c + 1 < report.cross.size(); ++c) {
        const auto& cur = report.cross[c];
        const auto& nxt = report.cross[c + 1];
        const double floor_cur = std::max(cur.floor_a, cur.floor_b);
        const double floor_nxt = std::max(nxt.floor_a, nxt.floor_b);
        if (cur.cross > floor_cur && nxt.cross > floor_nxt && !(nxt.cross < cur.cross)) {
            report.cross_decreasing = false;
        }
    }
    const auto& last = report.cross.back();
    report.settled = last.cross <= std::max(last.floor_a, last.floor_b) + dcfg.threshold;
    return report;
}

namespace {

void write_number(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_curve_csv(const CurveSeries& curve, const std::vector<BoundCheck>& bound,
                     std::ostream& os) {
    const bool with_bound = !bound.empty();
    os << (with_bound ? "t,estimate,stderr,bound,pass\n" : "t,estimate,stderr\n");
    for (std::size_t i = 0; i < curve.t.size(); ++i) {
        write_number(os, curve.t[i]);
        os << ',';
        write_number(os, curve.mean[i]);
        os << ',';
        write_number(os, curve.stderr_[i]);
        if (with_bound) {
            os << ',';
            write_number(os, bound[i].bound);
            os << ',' << (bound[i].pass ? 1 : 0);
        }
        os << "\n";
    }
}

void write_coupling_csv(const CoupledEnsemble& data, std::ostream& os) {
    os << "t,diff_sq,window_sup,running_sup\n";
    for (std::size_t i = 0; i < data.diff_sq.t.size(); ++i) {
        write_number(os, data.diff_sq.t[i]);
        os << ',';
        write_number(os, data.diff_sq.mean[i]);
        os << ',';
        write_number(os, data.window_sup.mean[i]);
        os << ',';
        write_number(os, data.running_sup.mean[i]);
        os << "\n";
    }
}

void write_dl_csv(const DLReport& report, std::ostream& os) {
    os << "t,cross_dl,floor_a,floor_b\n";
    for (const auto& cp : report.cross) {
        write_number(os, cp.t);
        os << ',';
        write_number(os, cp.cross);
        os << ',';
        write_number(os, cp.floor_a);
        os << ',';
        write_number(os, cp.floor_b);
        os << "\n";
    }
}

}  // namespace nsfde
