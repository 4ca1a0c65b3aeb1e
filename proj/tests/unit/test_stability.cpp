#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "nsfde/errors.hpp"
#include "nsfde/stability.hpp"

using namespace nsfde;

namespace {

SchemeConfig scheme(double h, double T, std::uint64_t seed = 0) {
    SchemeConfig cfg;
    cfg.h = h;
    cfg.T = T;
    cfg.master_seed = seed;
    return cfg;
}

Segment example_initial(const NeutralModel& model, const SchemeConfig& cfg, double level) {
    const double mu2r = r_moment(model.mu(), 2.0 * model.r());
    const double T_mem =
        required_depth(model.mu(), model.r(), cfg.tol_tail * mu2r, cfg.h);
    return Segment::constant(cfg.h, static_cast<int>(std::lround(T_mem / cfg.h)), level);
}

}  // namespace

TEST_CASE("decay-rate fit on synthetic curves") {
    std::vector<double> t, v;
    for (int i = 0; i <= 40; ++i) {
        t.push_back(0.25 * i);
        v.push_back(3.0 * std::exp(-0.7 * 0.25 * i));
    }
    const auto exact = fit_decay_rate(t, v, PlateauMode::zero);
    CHECK(exact.rate == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(exact.intercept == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(exact.r2 == doctest::Approx(1.0));

    // Plateau subtraction recovers the rate of 1 + 2 e^{-t/2}.
    std::vector<double> tp, vp;
    for (int i = 0; i <= 60; ++i) {
        tp.push_back(0.2 * i);
        vp.push_back(1.0 + 2.0 * std::exp(-0.5 * 0.2 * i));
    }
    const auto est = fit_decay_rate(tp, vp, PlateauMode::estimated);
    CHECK(est.rate == doctest::Approx(0.5).epsilon(0.1));

    // The identically zero curve admits no zero-plateau fit.
    std::vector<double> zeros(10, 0.0), tz;
    for (int i = 0; i < 10; ++i) tz.push_back(i);
    CHECK_THROWS_AS(fit_decay_rate(tz, zeros, PlateauMode::zero), FitError);
    CHECK_THROWS_AS(fit_decay_rate(std::vector<double>{1.0, 2.0},
                                   std::vector<double>{1.0, 2.0}, PlateauMode::zero),
                    FitError);
}

TEST_CASE("second moment curve on the mean-reverting oracle") {
    // D=0, b=-x, sigma=1, xi=1: E|x(t)|^2 = e^{-2t} + (1 - e^{-2t})/2.
    const auto model = make_ou_model();
    auto cfg = scheme(1e-3, 2.0, 424242);
    EnsembleRequest req;
    req.curve_times = {0.5, 1.0, 2.0};
    const auto xi = Segment::constant(cfg.h, 4, 1.0);
    const auto ens = simulate_ensemble(model, xi, 4000, cfg, req);
    const auto& curve = second_moment_curve(ens);
    for (std::size_t i = 0; i < curve.t.size(); ++i) {
        const double t = curve.t[i];
        const double want = std::exp(-2.0 * t) + 0.5 * (1.0 - std::exp(-2.0 * t));
        CHECK(std::abs(curve.mean[i] - want) < 3.0 * curve.stderr_[i] + 2e-3);
    }

    // Frozen dynamics keep the segment norm of a constant history at 1.
    const auto frozen = [&] {
        auto j = model.to_json();
        j["b"]["A"] = 0.0;
        j["sigma"]["columns"][0]["sigma0"] = {0.0};
        return NeutralModel::from_json(j);
    }();
    auto fcfg = scheme(1e-2, 2.0, 1);
    fcfg.force = true;
    EnsembleRequest freq;
    freq.checkpoints = {1.0, 2.0};
    const auto fens = simulate_ensemble(frozen, Segment::constant(fcfg.h, 4, 1.0), 8, fcfg, freq);
    for (double v : segment_norm_curve(fens).mean) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("coupling decay on the deterministic contraction oracle") {
    // D=0, b=-x, sigma=0: |diff(t)|^2 = e^{-2t} exactly (up to Euler error).
    auto j = make_ou_model().to_json();
    j["sigma"]["columns"][0]["sigma0"] = {0.0};
    const auto model = NeutralModel::from_json(j);
    auto cfg = scheme(1e-3, 6.0, 1);
    const auto xi = Segment::constant(cfg.h, 4, 1.0);
    const auto eta = Segment::constant(cfg.h, 4, 0.0);
    EnsembleRequest req;
    req.checkpoints = {1.0, 2.0, 4.0};
    req.window = 0.5;
    const auto ledger = constant_ledger(model);
    const auto rep = coupling_decay(model, xi, eta, cfg, 4, ledger, req);
    CHECK(rep.decaying);
    REQUIRE(rep.window_fit.has_value());
    // The trailing-window sup of e^{-2t} lags by the window length but has
    // the same rate.
    CHECK(rep.window_fit->rate == doctest::Approx(2.0).epsilon(0.05));

    // Identical initial data: nothing to fit, flagged as trivially decaying.
    const auto same = coupling_decay(model, xi, xi, cfg, 2, ledger, req);
    CHECK(same.decaying);
    CHECK(!same.window_fit.has_value());
    CHECK(same.data.diff_sq.mean.back() == 0.0);
}

TEST_CASE("worked example run satisfies the ledger bounds at a stable step") {
    const auto model = make_example_model(450.0, 1.41421356, 1.0, 0.25);
    const auto ledger = constant_ledger(model);
    REQUIRE(ledger.admissible);

    auto cfg = scheme(1e-3, 8.0, 77);
    const auto xi = example_initial(model, cfg, 1.0);
    EnsembleRequest req;
    req.checkpoints = {1.0, 2.0, 4.0, 8.0};
    const auto ens = simulate_ensemble(model, xi, 200, cfg, req);

    const double xi_cr_sq = std::pow(cr_norm(xi, model.r()), 2);
    const auto moment = check_curve_bound(
        second_moment_curve(ens),
        [&](double t) {
            return ledger.C1 + ledger.C2 * xi_cr_sq * std::exp(-ledger.lambda * t);
        },
        10.0 * cfg.h);
    for (const auto& c : moment) CHECK(c.pass);

    const auto segnorm = check_curve_bound(
        segment_norm_curve(ens),
        [&](double t) {
            return ledger.C4 + ledger.C5 * xi_cr_sq * std::exp(-ledger.lambda * t);
        },
        10.0 * cfg.h);
    for (const auto& c : segnorm) CHECK(c.pass);
}

TEST_CASE("worked example coupling holds both bound forms") {
    const auto model = make_example_model(450.0, 1.41421356, 1.0, 0.25);
    const auto ledger = constant_ledger(model);
    auto cfg = scheme(1e-3, 8.0, 99);
    const auto xi = example_initial(model, cfg, 1.0);
    const auto eta = Segment::constant(cfg.h, xi.depth(), 0.0);
    EnsembleRequest req;
    req.checkpoints = {1.0, 2.0, 4.0, 8.0};
    const auto rep = coupling_decay(model, xi, eta, cfg, 200, ledger, req);
    CHECK(rep.decaying);
    for (const auto& c : rep.running_sup_bound) CHECK(c.pass);
    for (const auto& c : rep.segment_bound) CHECK(c.pass);
    REQUIRE(rep.window_fit.has_value());
    CHECK(rep.window_fit->rate >= 0.8 * ledger.lambda);
}

TEST_CASE("distribution report on the worked example and the frozen control") {
    const auto model = make_example_model(450.0, 1.41421356, 1.0, 0.25);
    auto cfg = scheme(2e-3, 8.0, 2025);
    const auto xi = example_initial(model, cfg, 1.0);
    const auto eta = Segment::constant(cfg.h, xi.depth(), 0.0);

    DistributionConfig dcfg;
    dcfg.n_paths = 128;
    dcfg.family_size = 400;
    const auto rep = stability_in_distribution_report(model, {xi, eta}, cfg,
                                                      {1.0, 2.0, 4.0, 8.0}, dcfg);
    CHECK(rep.cross_decreasing);
    CHECK(rep.settled);
    // Empirical stationarity: same-ensemble consecutive distances decrease
    // on an equally spaced grid... checked with the linear grid below.
    const auto rep_lin = stability_in_distribution_report(model, {xi, eta}, cfg,
                                                          {2.0, 4.0, 6.0, 8.0}, dcfg);
    for (const auto& row : rep_lin.consecutive) {
        for (std::size_t i = 0; i + 1 < row.size(); ++i) {
            CHECK(row[i + 1].dl <= row[i].dl + 0.02);
        }
    }

    // Identical initial data with the same seed: cross distance exactly 0.
    const auto same = stability_in_distribution_report(model, {xi, xi}, cfg,
                                                       {1.0, 2.0}, dcfg);
    for (const auto& cp : same.cross) CHECK(cp.cross == 0.0);

    // Frozen dynamics: the laws never mix; distance stays at min(|gap|, 2).
    const auto frozen = [&] {
        auto j = model.to_json();
        j["b"]["A"] = 0.0;
        j["D"]["kappa"] = 0.0;
        j["sigma"] = {{"nonlin", "zero"},
                      {"columns", {{{"S", 0.0}, {"C", 0.0}, {"sigma0", {0.0}}}}}};
        return NeutralModel::from_json(j);
    }();
    auto fcfg = scheme(2e-2, 8.0, 7);
    fcfg.force = true;
    DistributionConfig fdcfg;
    fdcfg.n_paths = 16;
    fdcfg.family_size = 600;
    const auto control = stability_in_distribution_report(
        frozen, {Segment::constant(fcfg.h, 4, 1.0), Segment::constant(fcfg.h, 4, 0.0)},
        fcfg, {1.0, 2.0, 4.0, 8.0}, fdcfg);
    CHECK(!control.settled);
    for (const auto& cp : control.cross) {
        CHECK(cp.cross == doctest::Approx(1.0).epsilon(0.02));
    }
}
