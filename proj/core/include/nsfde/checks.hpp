#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsfde/ledger.hpp"
#include "nsfde/model.hpp"
#include "nsfde/rng.hpp"

namespace nsfde {

/// Outcome of a randomized falsification run. "pass" means no violation was
/// found over `trials` sampled histories at the given tolerance; it is
/// falsification, not proof.
struct CheckReport {
    std::string name;
    long trials = 0;
    bool pass = false;
    /// Contraction check: largest observed ratio |D(phi)-D(psi)|^2 / RHS
    /// integral (compare against declared k). Inequality checks: largest
    /// normalized violation (LHS-RHS) / (|LHS|+|RHS|).
    double worst = 0.0;
    double threshold = 0.0;
    long worst_index = -1;
    std::vector<Segment> witness;  // {phi, psi} or {phi}; worst sample
    std::string detail;
};

struct CheckConfig {
    long trials = 10000;
    std::uint64_t seed = 0;
    double tol = 1e-9;       // relative check tolerance
    double grid_step = 0.05; // sampler grid
    int threads = 1;
};

/// |D(phi)-D(psi)|^2 <= k * int |phi-psi|^2 dmu over sampled pairs.
CheckReport verify_h1(const NeutralModel& model, const CheckConfig& cfg);

/// [phi(0)-psi(0)-(D(phi)-D(psi))]^T [b(phi)-b(psi)]
///   <= -l1 |phi(0)-psi(0)|^2 + l2 int |phi-psi|^2 dmu.
CheckReport verify_h2_drift(const NeutralModel& model, const CheckConfig& cfg);

/// |sigma(phi)-sigma(psi)|^2 <= l3 |phi(0)-psi(0)|^2 + l4 int |phi-psi|^2 dmu.
CheckReport verify_h2_diffusion(const NeutralModel& model, const CheckConfig& cfg);

/// One-argument dissipativity with the ledger's alpha1, alpha2, N:
/// 2[phi(0)-D(phi)]^T b(phi) + |sigma(phi)|^2
///   <= -alpha1 |phi(0)|^2 + alpha2 int |phi|^2 dmu + N.
CheckReport monotone_check(const NeutralModel& model, const ConstantLedger& ledger,
                           const CheckConfig& cfg);

/// Random history shapes used by the checkers: smooth trigonometric sums,
/// piecewise-constant plateaus (including fully constant), sparse spikes,
/// and exponentially weighted profiles. Exposed for tests.
Segment sample_segment(const CounterRng& rng, std::uint64_t unit, int dim,
                       double grid_step, int depth);

/// Pairs mix independent draws, small perturbations of a shared base, and
/// constant-vs-zero contrasts.
std::pair<Segment, Segment> sample_pair(const CounterRng& rng, std::uint64_t unit,
                                        int dim, double grid_step, int depth);

}  // namespace nsfde
