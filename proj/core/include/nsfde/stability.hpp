#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsfde/dl.hpp"
#include "nsfde/integrator.hpp"
#include "nsfde/ledger.hpp"

namespace nsfde {

/// E |x(t)|^2 with standard errors (sampled at the ensemble's curve times).
const CurveSeries& second_moment_curve(const Ensemble& ens);

/// E ||x_t||_r^2 at the stored checkpoints.
const CurveSeries& segment_norm_curve(const Ensemble& ens);

enum class PlateauMode { zero, estimated };

struct FitResult {
    double rate = 0.0;       // lambda-hat in value ~ intercept * e^{-rate t}
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares on log(value - plateau) against t. plateau is 0 or the
/// tail mean (last quarter of the points); estimated mode fits only the
/// points clearly above the plateau. FitError when fewer than 4 usable
/// points remain or residuals are non-positive.
FitResult fit_decay_rate(std::span<const double> t, std::span<const double> value,
                         PlateauMode mode);
FitResult fit_decay_rate(const CurveSeries& curve, PlateauMode mode);

/// One bound comparison: pass iff estimate <= bound * (1 + slack) + 3 stderr.
struct BoundCheck {
    double t = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double bound = 0.0;
    bool pass = false;
};

std::vector<BoundCheck> check_curve_bound(const CurveSeries& curve,
                                          const std::function<double(double)>& bound,
                                          double slack_rel);

/// Coupling experiment: shared-noise pairs from (xi, eta), trailing-window
/// envelope and its fitted rate, the literal running-sup form checked
/// against C3 ||xi-eta||_r^2 e^{-lambda t}, and the segment-norm bound
/// C6 ||xi-eta||_r^2 e^{-lambda t} at checkpoints.
struct CouplingReport {
    CoupledEnsemble data;
    std::optional<FitResult> window_fit;   // absent when the envelope is degenerate
    bool decaying = false;
    std::vector<BoundCheck> running_sup_bound;  // Theorem-form check
    std::vector<BoundCheck> segment_bound;      // checkpoint segment-norm check
    double init_gap_crnorm_sq = 0.0;            // ||xi - eta||_r^2
};

CouplingReport coupling_decay(const NeutralModel& model, const Segment& xi,
                              const Segment& eta, const SchemeConfig& cfg, long n_pairs,
                              const ConstantLedger& ledger, const EnsembleRequest& request);

/// Empirical stability-in-distribution report.
struct DlCheckpoint {
    double t = 0.0;
    double cross = 0.0;     // d_L lower bound between the two laws
    double floor_a = 0.0;   // split-half floors of each ensemble
    double floor_b = 0.0;
};

struct DlConsecutive {
    double t_from = 0.0, t_to = 0.0;
    double dl = 0.0;
};

struct DLReport {
    int family_size = 0;
    double threshold = 0.0;  // decision slack over the noise floor
    std::vector<DlCheckpoint> cross;
    /// Same-ensemble d_L between consecutive checkpoints (one vector per
    /// initial datum); empirical stationarity diagnostic.
    std::vector<std::vector<DlConsecutive>> consecutive;
    bool cross_decreasing = false;   // strictly decreasing while above floor
    bool settled = false;            // final cross within floor + threshold
};

struct DistributionConfig {
    long n_paths = 512;
    int family_size = 1000;
    double threshold = 0.05;
    int n_splits = 4;
    int segment_max_points = 1024;
};

DLReport stability_in_distribution_report(const NeutralModel& model,
                                          const std::vector<Segment>& initial_data,
                                          const SchemeConfig& cfg,
                                          const std::vector<double>& checkpoints,
                                          const DistributionConfig& dcfg);

/// CSV writers (columns documented in the CLI help).
void write_curve_csv(const CurveSeries& curve, const std::vector<BoundCheck>& bound,
                     std::ostream& os);
void write_coupling_csv(const CoupledEnsemble& data, std::ostream& os);
void write_dl_csv(const DLReport& report, std::ostream& os);

}  // namespace nsfde
