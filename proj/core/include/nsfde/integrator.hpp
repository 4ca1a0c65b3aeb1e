#pragma once

#include <cstdint>
#include <vector>

#include "nsfde/ensemble.hpp"
#include "nsfde/model.hpp"
#include "nsfde/rng.hpp"

namespace nsfde {

struct SchemeConfig {
    double h = 1e-3;            // step size
    double T = 1.0;             // horizon
    double fp_tol = 1e-12;      // fixed-point tolerance for the neutral solve
    int fp_max_iter = 64;
    double tol_tail = 1e-8;     // truncation tolerance, relative to mu^(2r)
    std::uint64_t master_seed = 0;
    bool force = false;         // simulate even when the ledger says inadmissible
    bool predictor = false;     // one-shot neutral predictor instead of iteration
    double blow_up_limit = 1e12;
    int threads = 1;
};

struct SimDiagnostics {
    int max_fp_iters = 0;
    double max_transform_residual = 0.0;  // |y_n - (x_n - D(X_n))| over steps
    double contraction = 0.0;             // neutral fixed-point contraction bound
};

struct SimResult {
    Path path;
    SimDiagnostics diag;
};

/// Strong Euler-Maruyama on the transformed variable y = x - D(x_t):
///   y_{n+1} = y_n + b(X_n) h + sigma(X_n) dW_n,
/// then x_{n+1} is recovered from y_{n+1} = x_{n+1} - D(X_{n+1}) by
/// fixed-point iteration on the newest point. Exponential measure
/// components are maintained by exact O(1) kernel recursions; atoms by
/// grid lookups.
///
/// Preconditions: the model passes the admissibility ledger unless
/// cfg.force is set; xi's window covers required_depth for cfg.tol_tail.
SimResult simulate_path(const NeutralModel& model, const Segment& xi,
                        const SchemeConfig& cfg, long path_index = 0);

/// Same scheme with caller-provided increments (m x steps), used by the
/// convergence probe and tests.
SimResult simulate_path_with_increments(const NeutralModel& model, const Segment& xi,
                                        const SchemeConfig& cfg,
                                        const Eigen::MatrixXd& increments);

/// Two solutions driven by the same Brownian increments (the difference
/// process of the coupling argument).
std::pair<SimResult, SimResult> simulate_coupled_pair(const NeutralModel& model,
                                                      const Segment& xi,
                                                      const Segment& eta,
                                                      const SchemeConfig& cfg,
                                                      long pair_index = 0);

/// n_paths independent paths; aggregation is schedule-independent and the
/// result depends only on (model, xi, cfg, request).
Ensemble simulate_ensemble(const NeutralModel& model, const Segment& xi, long n_paths,
                           const SchemeConfig& cfg, const EnsembleRequest& request);

/// Shared-noise pair ensemble.
CoupledEnsemble simulate_coupled_ensemble(const NeutralModel& model, const Segment& xi,
                                          const Segment& eta, long n_pairs,
                                          const SchemeConfig& cfg,
                                          const EnsembleRequest& request);

struct OrderProbeResult {
    double slope = 0.0;
    std::vector<double> h_values;
    std::vector<double> rms_errors;
};

/// Strong-order estimate: couples every h in h_list (descending, each
/// divided by its successor) to a common fine reference via shared Brownian
/// increments and regresses log RMS endpoint error on log h.
OrderProbeResult strong_order_probe(const NeutralModel& model, const Segment& xi,
                                    const std::vector<double>& h_list, double T,
                                    long n_paths, const SchemeConfig& cfg);

}  // namespace nsfde
