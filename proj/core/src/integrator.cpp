#include "nsfde/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>

#include "nsfde/errors.hpp"
#include "nsfde/ledger.hpp"
#include "nsfde/numeric.hpp"
#include "nsfde/parallel.hpp"

namespace nsfde {

namespace {

struct AtomLookup {
    int back_steps;    // floor(-theta / h)
    double frac;       // interpolation weight toward the older neighbor
    double weight;
};

/// Shared per-(model, cfg) step machinery: exponential kernel recursions,
/// atom lookups, and the coefficient of the unknown newest point inside
/// D(X_{n+1}) (the fixed-point contraction driver).
struct StepPlan {
    std::vector<AtomLookup> atoms;
    std::vector<double> exp_decay;   // e^{-rho h}
    std::vector<double> exp_c0, exp_c1;  // slice coefficients (weighted)
    double newest_coeff = 0.0;       // d I_next / d x_{n+1}
    double contraction = 0.0;        // ||kappa|| * newest_coeff
    int steps = 0;
    int pre_points = 0;

    StepPlan(const NeutralModel& model, const SchemeConfig& cfg) {
        const double h = cfg.h;
        steps = static_cast<int>(std::lround(cfg.T / h));
        if (steps < 1) throw RangeError("scheme: T must cover at least one step");
        if (!(cfg.fp_tol > 0.0)) throw RangeError("scheme: fp_tol must be > 0");

        for (const auto& a : model.mu().atoms()) {
            const double pos = -a.theta / h;
            AtomLookup lk;
            lk.back_steps = static_cast<int>(std::floor(pos));
            lk.frac = pos - lk.back_steps;
            lk.weight = a.weight;
            atoms.push_back(lk);
            if (lk.back_steps == 0) newest_coeff += a.weight * (1.0 - lk.frac);
        }
        for (const auto& e : model.mu().exps()) {
            const double x = e.rho * h;
            const double decay = std::exp(-x);
            const double q = one_minus_exp_over(x);
            exp_decay.push_back(decay);
            exp_c0.push_back(e.weight * (q - decay));
            exp_c1.push_back(e.weight * (1.0 - q));
            newest_coeff += e.weight * (1.0 - q);
        }
        contraction = model.neutral().kappa.norm() * newest_coeff;
    }
};

class PathEngine {
public:
    PathEngine(const NeutralModel& model, const StepPlan& plan, const Segment& xi,
               const SchemeConfig& cfg, long path_index)
        : model_(model), plan_(plan), cfg_(cfg), path_index_(path_index) {
        if (xi.dim() != model.dim()) {
            throw ShapeMismatchError("initial data dimension does not match the model");
        }
        if (std::abs(xi.grid_step() - cfg.h) > 1e-12 * std::max(1.0, cfg.h)) {
            throw ShapeMismatchError("initial data grid step does not match the scheme");
        }
        pre_points_ = xi.points();
        values_.resize(model.dim(), pre_points_ + plan.steps);
        values_.leftCols(pre_points_) = xi.values();
        cursor_ = pre_points_ - 1;

        // Exact kernel integrals of the initial window seed the recursions.
        const auto& exps = model.mu().exps();
        acc_.assign(exps.size(), Eigen::VectorXd::Zero(model.dim()));
        for (std::size_t j = 0; j < exps.size(); ++j) {
            const auto w = exp_component_weights(exps[j], pre_points_, cfg.h);
            for (int i = 0; i < pre_points_; ++i) {
                if (w[i] != 0.0) acc_[j] += w[i] * values_.col(i);
            }
        }
        y_ = values_.col(cursor_) - model.neutral_from(measure_integral());
    }

    Eigen::VectorXd measure_integral() const {
        Eigen::VectorXd I = Eigen::VectorXd::Zero(model_.dim());
        for (const auto& a : acc_) I += a;
        for (const auto& lk : plan_.atoms) {
            I += lk.weight * lookup(cursor_, lk);
        }
        return I;
    }

    const Eigen::VectorXd& y() const { return y_; }
    Eigen::VectorXd state() const { return values_.col(cursor_); }
    int step_index() const { return cursor_ - (pre_points_ - 1); }

    /// Advance one step with the given Brownian increment.
    void step(const Eigen::VectorXd& dw, SimDiagnostics& diag) {
        const Eigen::VectorXd x_n = values_.col(cursor_);
        const Eigen::VectorXd I_n = measure_integral();
        const Eigen::VectorXd b_n = model_.drift_from(x_n, I_n);
        const Eigen::MatrixXd s_n = model_.diffusion_from(x_n, I_n);
        const Eigen::VectorXd y_next = y_ + cfg_.h * b_n + s_n * dw;

        // Known part of I at the next segment (everything except x_{n+1}).
        Eigen::VectorXd base = Eigen::VectorXd::Zero(model_.dim());
        for (std::size_t j = 0; j < acc_.size(); ++j) {
            base += plan_.exp_decay[j] * acc_[j] + plan_.exp_c0[j] * x_n;
        }
        for (const auto& lk : plan_.atoms) {
            if (lk.back_steps == 0) {
                if (lk.frac > 0.0) base += lk.weight * lk.frac * values_.col(cursor_);
            } else {
                base += lk.weight * lookup(cursor_ + 1, lk);
            }
        }

        const auto& kappa = model_.neutral().kappa;
        Eigen::VectorXd x = x_n;
        double residual = 0.0;
        if (cfg_.predictor) {
            x = y_next + kappa * (base + plan_.newest_coeff * x_n);
            residual = (y_next + kappa * (base + plan_.newest_coeff * x) - x).norm();
        } else {
            bool converged = false;
            for (int it = 0; it < cfg_.fp_max_iter; ++it) {
                const Eigen::VectorXd x_new = y_next + kappa * (base + plan_.newest_coeff * x);
                residual = (x_new - x).norm();
                x = x_new;
                diag.max_fp_iters = std::max(diag.max_fp_iters, it + 1);
                if (residual <= cfg_.fp_tol * (1.0 + x.norm())) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                std::ostringstream msg;
                msg << "neutral fixed point did not converge in " << cfg_.fp_max_iter
                    << " iterations (contraction estimate " << plan_.contraction << ")";
                throw SchemeError(msg.str(), plan_.contraction);
            }
        }
        diag.max_transform_residual = std::max(diag.max_transform_residual, residual);

        const double t_next = (step_index() + 1) * cfg_.h;
        if (!x.allFinite() || x.norm() > cfg_.blow_up_limit) {
            std::ostringstream msg;
            msg << "path " << path_index_ << " exceeded |x| = " << cfg_.blow_up_limit
                << " at t = " << t_next;
            throw BlowUpError(msg.str(), t_next, path_index_);
        }

        for (std::size_t j = 0; j < acc_.size(); ++j) {
            acc_[j] = plan_.exp_decay[j] * acc_[j] + plan_.exp_c0[j] * x_n +
                      plan_.exp_c1[j] * x;
        }
        ++cursor_;
        values_.col(cursor_) = x;
        y_ = y_next;
    }

    Path finish() const {
        Segment pre(cfg_.h, values_.leftCols(pre_points_));
        return Path(std::move(pre), values_.rightCols(plan_.steps));
    }

    /// Squared C_r norm of the window of `points` grid nodes ending at the
    /// current state (difference against `other` when given).
    double window_crnorm_sq(double r, const PathEngine* other = nullptr) const {
        double best = 0.0;
        for (int i = 0; i < pre_points_; ++i) {
            const int col = cursor_ - (pre_points_ - 1 - i);
            const double w = std::exp(r * -(pre_points_ - 1 - i) * cfg_.h);
            double nrm;
            if (other) {
                nrm = (values_.col(col) - other->values_.col(col)).norm();
            } else {
                nrm = values_.col(col).norm();
            }
            best = std::max(best, w * nrm);
        }
        return best * best;
    }

    Segment window_segment(int max_points) const {
        Eigen::MatrixXd vals = values_.middleCols(cursor_ - (pre_points_ - 1), pre_points_);
        Segment seg(cfg_.h, std::move(vals));
        if (seg.points() <= max_points) return seg;
        const int stride = (seg.points() + max_points - 1) / max_points;
        return decimate(seg, stride);
    }

private:
    Eigen::VectorXd lookup(int col, const AtomLookup& lk) const {
        const int hi = col - lk.back_steps;
        if (lk.frac == 0.0) return values_.col(hi);
        return (1.0 - lk.frac) * values_.col(hi) + lk.frac * values_.col(hi - 1);
    }

    const NeutralModel& model_;
    const StepPlan& plan_;
    SchemeConfig cfg_;
    long path_index_;
    int pre_points_ = 0;
    int cursor_ = 0;
    Eigen::MatrixXd values_;
    std::vector<Eigen::VectorXd> acc_;
    Eigen::VectorXd y_;
};

void require_admissible_or_forced(const NeutralModel& model, const SchemeConfig& cfg) {
    if (cfg.force) return;
    const ConstantLedger ledger = constant_ledger(model);
    if (!ledger.admissible) {
        std::string what = "model fails the admissibility ledger (set force to simulate):";
        for (const auto& reason : ledger.reasons) what += " " + reason + ";";
        throw SchemeError(what);
    }
}

void require_window(const NeutralModel& model, const Segment& xi, const SchemeConfig& cfg) {
    const double mu2r = r_moment(model.mu(), 2.0 * model.r());
    if (!std::isfinite(mu2r)) throw MeasureError("scheme: measure not in M_{2r}");
    const double needed = required_depth(model.mu(), model.r(), cfg.tol_tail * mu2r, cfg.h);
    if (xi.t_mem() + 0.5 * cfg.h < needed) {
        const double bound = cr_norm(xi, model.r()) * cr_norm(xi, model.r()) *
                             tail_mass(model.mu(), 2.0 * model.r(), xi.t_mem());
        std::ostringstream msg;
        msg << "initial window T_mem = " << xi.t_mem() << " is shorter than required "
            << needed << " (truncation bound " << bound << ")";
        throw TailTruncationError(msg.str(), bound);
    }
}

}  // namespace

SimResult simulate_path(const NeutralModel& model, const Segment& xi,
                        const SchemeConfig& cfg, long path_index) {
    require_admissible_or_forced(model, cfg);
    require_window(model, xi, cfg);
    const StepPlan plan(model, cfg);
    NoiseStream noise(cfg.master_seed, model.noise_dim(), cfg.h);

    PathEngine engine(model, plan, xi, cfg, path_index);
    SimDiagnostics diag;
    diag.contraction = plan.contraction;
    Eigen::VectorXd dw(model.noise_dim());
    for (int n = 0; n < plan.steps; ++n) {
        noise.increment(static_cast<std::uint64_t>(path_index), static_cast<std::uint64_t>(n), dw);
        engine.step(dw, diag);
    }
    return SimResult{engine.finish(), diag};
}

SimResult simulate_path_with_increments(const NeutralModel& model, const Segment& xi,
                                        const SchemeConfig& cfg,
                                        const Eigen::MatrixXd& increments) {
    require_admissible_or_forced(model, cfg);
    require_window(model, xi, cfg);
    const StepPlan plan(model, cfg);
    if (increments.rows() != model.noise_dim() || increments.cols() < plan.steps) {
        throw ShapeMismatchError("increments must be noise_dim x steps");
    }
    PathEngine engine(model, plan, xi, cfg, 0);
    SimDiagnostics diag;
    diag.contraction = plan.contraction;
    for (int n = 0; n < plan.steps; ++n) {
        engine.step(increments.col(n), diag);
    }
    return SimResult{engine.finish(), diag};
}

std::pair<SimResult, SimResult> simulate_coupled_pair(const NeutralModel& model,
                                                      const Segment& xi, const Segment& eta,
                                                      const SchemeConfig& cfg,
                                                      long pair_index) {
    if (!xi.same_shape(eta)) {
        throw ShapeMismatchError("coupled pair needs matching initial-data shapes");
    }
    require_admissible_or_forced(model, cfg);
    require_window(model, xi, cfg);
    const StepPlan plan(model, cfg);
    NoiseStream noise(cfg.master_seed, model.noise_dim(), cfg.h);

    PathEngine a(model, plan, xi, cfg, pair_index);
    PathEngine b(model, plan, eta, cfg, pair_index);
    SimDiagnostics da, db;
    da.contraction = db.contraction = plan.contraction;
    Eigen::VectorXd dw(model.noise_dim());
    for (int n = 0; n < plan.steps; ++n) {
        noise.increment(static_cast<std::uint64_t>(pair_index), static_cast<std::uint64_t>(n), dw);
        a.step(dw, da);
        b.step(dw, db);
    }
    return {SimResult{a.finish(), da}, SimResult{b.finish(), db}};
}

namespace {

constexpr long kBlock = 64;  // paths per aggregation block

std::vector<int> curve_step_indices(const std::vector<double>& requested, double h,
                                    int steps) {
    std::vector<int> idx;
    if (requested.empty()) {
        const int stride = std::max(1, (steps + 1999) / 2000);
        for (int n = 0; n <= steps; n += stride) idx.push_back(n);
        if (idx.back() != steps) idx.push_back(steps);
    } else {
        for (double t : requested) {
            const long n = std::lround(t / h);
            if (n < 0 || n > steps) throw RangeError("curve time outside [0, T]");
            idx.push_back(static_cast<int>(n));
        }
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }
    return idx;
}

std::vector<int> checkpoint_step_indices(const std::vector<double>& requested, double h,
                                         int steps) {
    std::vector<int> idx;
    for (double t : requested) {
        const long n = std::lround(t / h);
        if (n < 0 || n > steps) throw RangeError("checkpoint outside [0, T]");
        idx.push_back(static_cast<int>(n));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

CurveSeries finalize_curve(const std::vector<int>& steps_idx, double h,
                           std::span<const double> sum, std::span<const double> sum_sq,
                           long n) {
    CurveSeries out;
    out.t.reserve(steps_idx.size());
    out.mean.reserve(steps_idx.size());
    out.stderr_.reserve(steps_idx.size());
    for (std::size_t i = 0; i < steps_idx.size(); ++i) {
        const double mean = sum[i] / static_cast<double>(n);
        double se = 0.0;
        if (n > 1) {
            const double var =
                std::max(0.0, (sum_sq[i] - static_cast<double>(n) * mean * mean) /
                                  static_cast<double>(n - 1));
            se = std::sqrt(var / static_cast<double>(n));
        }
        out.t.push_back(steps_idx[i] * h);
        out.mean.push_back(mean);
        out.stderr_.push_back(se);
    }
    return out;
}

/// Fixed-block accumulator: blocks are defined by path index alone, each
/// block sums its paths in order, and blocks merge in block order, so the
/// totals do not depend on which thread ran which block.
struct BlockSums {
    explicit BlockSums(std::size_t width) : width(width) {}
    void init(long blocks) { data.assign(static_cast<std::size_t>(blocks) * width, 0.0); }
    double* block(long b) { return data.data() + static_cast<std::size_t>(b) * width; }
    std::vector<double> merged(long blocks) const {
        std::vector<double> total(width, 0.0);
        for (long b = 0; b < blocks; ++b) {
            const double* src = data.data() + static_cast<std::size_t>(b) * width;
            for (std::size_t i = 0; i < width; ++i) total[i] += src[i];
        }
        return total;
    }
    std::size_t width;
    std::vector<double> data;
};

}  // namespace

Ensemble simulate_ensemble(const NeutralModel& model, const Segment& xi, long n_paths,
                           const SchemeConfig& cfg, const EnsembleRequest& request) {
    if (n_paths < 1) throw RangeError("simulate_ensemble: n_paths must be >= 1");
    require_admissible_or_forced(model, cfg);
    require_window(model, xi, cfg);
    const StepPlan plan(model, cfg);
    NoiseStream noise(cfg.master_seed, model.noise_dim(), cfg.h);

    const auto curve_idx = curve_step_indices(request.curve_times, cfg.h, plan.steps);
    const auto cp_idx = checkpoint_step_indices(request.checkpoints, cfg.h, plan.steps);
    const std::size_t nc = curve_idx.size();
    const int d = model.dim();

    const long blocks = (n_paths + kBlock - 1) / kBlock;
    // Layout per curve index: |x|^2, |x|^4, runsup, runsup^2, then per-dim
    // mean and square sums.
    const std::size_t width = nc * (4 + 2 * static_cast<std::size_t>(d));
    BlockSums sums(width);
    sums.init(blocks);

    std::vector<double> cp_cr(static_cast<std::size_t>(n_paths) * cp_idx.size(), 0.0);
    std::vector<std::vector<std::optional<Segment>>> cp_segments;
    if (request.store_segments) {
        cp_segments.assign(cp_idx.size(),
                           std::vector<std::optional<Segment>>(static_cast<std::size_t>(n_paths)));
    }

    SchemeConfig path_cfg = cfg;
    path_cfg.force = true;  // gate already checked once

    parallel_for(blocks, resolve_threads(cfg.threads), [&](long blk) {
        double* acc = sums.block(blk);
        Eigen::VectorXd dw(model.noise_dim());
        const long lo = blk * kBlock;
        const long hi = std::min(n_paths, lo + kBlock);
        for (long p = lo; p < hi; ++p) {
            PathEngine engine(model, plan, xi, path_cfg, p);
            SimDiagnostics diag;
            double runsup = 0.0;
            std::size_t next_curve = 0;
            std::size_t next_cp = 0;
            for (int n = 0; n <= plan.steps; ++n) {
                if (n > 0) {
                    noise.increment(static_cast<std::uint64_t>(p),
                                    static_cast<std::uint64_t>(n - 1), dw);
                    engine.step(dw, diag);
                    runsup = std::max(runsup, engine.state().squaredNorm());
                }
                if (next_curve < nc && curve_idx[next_curve] == n) {
                    const Eigen::VectorXd x = engine.state();
                    const double sq = x.squaredNorm();
                    double* row = acc + next_curve * (4 + 2 * static_cast<std::size_t>(d));
                    row[0] += sq;
                    row[1] += sq * sq;
                    row[2] += runsup;
                    row[3] += runsup * runsup;
                    for (int c = 0; c < d; ++c) {
                        row[4 + 2 * c] += x[c];
                        row[5 + 2 * c] += x[c] * x[c];
                    }
                    ++next_curve;
                }
                if (next_cp < cp_idx.size() && cp_idx[next_cp] == n) {
                    const double cr2 = engine.window_crnorm_sq(model.r());
                    cp_cr[static_cast<std::size_t>(p) * cp_idx.size() + next_cp] = cr2;
                    if (request.store_segments) {
                        cp_segments[next_cp][static_cast<std::size_t>(p)] =
                            engine.window_segment(request.segment_max_points);
                    }
                    ++next_cp;
                }
            }
        }
    });

    const auto total = sums.merged(blocks);
    Ensemble out;
    out.n_paths = n_paths;
    out.grid_step = cfg.h;
    out.r = model.r();

    const std::size_t stride = 4 + 2 * static_cast<std::size_t>(d);
    std::vector<double> s0(nc), s1(nc);
    auto take = [&](std::size_t offset_a, std::size_t offset_b) {
        for (std::size_t i = 0; i < nc; ++i) {
            s0[i] = total[i * stride + offset_a];
            s1[i] = total[i * stride + offset_b];
        }
    };
    take(0, 1);
    out.second_moment = finalize_curve(curve_idx, cfg.h, s0, s1, n_paths);
    take(2, 3);
    out.running_sup = finalize_curve(curve_idx, cfg.h, s0, s1, n_paths);
    for (int c = 0; c < d; ++c) {
        take(4 + 2 * static_cast<std::size_t>(c), 5 + 2 * static_cast<std::size_t>(c));
        out.mean_components.push_back(finalize_curve(curve_idx, cfg.h, s0, s1, n_paths));
    }

    for (int idx : cp_idx) out.checkpoint_times.push_back(idx * cfg.h);
    if (!cp_idx.empty()) {
        out.crnorm_sq.t = out.checkpoint_times;
        for (std::size_t c = 0; c < cp_idx.size(); ++c) {
            std::vector<double> vals(static_cast<std::size_t>(n_paths));
            for (long p = 0; p < n_paths; ++p) {
                vals[static_cast<std::size_t>(p)] =
                    cp_cr[static_cast<std::size_t>(p) * cp_idx.size() + c];
            }
            const auto ms = mean_stderr(vals);
            out.crnorm_sq.mean.push_back(ms.mean);
            out.crnorm_sq.stderr_.push_back(ms.stderr_);
        }
    }
    if (request.store_segments) {
        out.segments.reserve(cp_idx.size());
        for (auto& per_cp : cp_segments) {
            std::vector<Segment> segs;
            segs.reserve(per_cp.size());
            for (auto& s : per_cp) segs.push_back(std::move(*s));
            out.segments.push_back(std::move(segs));
        }
    }
    return out;
}

CoupledEnsemble simulate_coupled_ensemble(const NeutralModel& model, const Segment& xi,
                                          const Segment& eta, long n_pairs,
                                          const SchemeConfig& cfg,
                                          const EnsembleRequest& request) {
    if (n_pairs < 1) throw RangeError("simulate_coupled_ensemble: n_pairs must be >= 1");
    if (!xi.same_shape(eta)) {
        throw ShapeMismatchError("coupled ensemble needs matching initial-data shapes");
    }
    require_admissible_or_forced(model, cfg);
    require_window(model, xi, cfg);
    const StepPlan plan(model, cfg);
    NoiseStream noise(cfg.master_seed, model.noise_dim(), cfg.h);

    const auto curve_idx = curve_step_indices(request.curve_times, cfg.h, plan.steps);
    const auto cp_idx = checkpoint_step_indices(request.checkpoints, cfg.h, plan.steps);
    const std::size_t nc = curve_idx.size();
    const int window_steps = std::max(1, static_cast<int>(std::lround(request.window / cfg.h)));

    const long blocks = (n_pairs + kBlock - 1) / kBlock;
    // Layout per curve index: diff^2, (diff^2)^2, winsup, winsup^2,
    // runsup, runsup^2.
    const std::size_t width = nc * 6;
    BlockSums sums(width);
    sums.init(blocks);
    std::vector<double> cp_cr(static_cast<std::size_t>(n_pairs) * cp_idx.size(), 0.0);

    SchemeConfig path_cfg = cfg;
    path_cfg.force = true;

    parallel_for(blocks, resolve_threads(cfg.threads), [&](long blk) {
        double* acc = sums.block(blk);
        Eigen::VectorXd dw(model.noise_dim());
        const long lo = blk * kBlock;
        const long hi = std::min(n_pairs, lo + kBlock);
        for (long p = lo; p < hi; ++p) {
            PathEngine ea(model, plan, xi, path_cfg, p);
            PathEngine eb(model, plan, eta, path_cfg, p);
            SimDiagnostics da, db;
            double runsup = 0.0;
            // Monotonic deque for the sliding-window maximum of |diff|^2.
            std::deque<std::pair<int, double>> win;
            auto push_window = [&](int n, double v) {
                while (!win.empty() && win.back().second <= v) win.pop_back();
                win.emplace_back(n, v);
                while (!win.empty() && win.front().first <= n - window_steps) win.pop_front();
            };
            const double d0 = (ea.state() - eb.state()).squaredNorm();
            push_window(0, d0);
            std::size_t next_curve = 0;
            std::size_t next_cp = 0;
            for (int n = 0; n <= plan.steps; ++n) {
                if (n > 0) {
                    noise.increment(static_cast<std::uint64_t>(p),
                                    static_cast<std::uint64_t>(n - 1), dw);
                    ea.step(dw, da);
                    eb.step(dw, db);
                    const double dsq = (ea.state() - eb.state()).squaredNorm();
                    runsup = std::max(runsup, dsq);
                    push_window(n, dsq);
                }
                if (next_curve < nc && curve_idx[next_curve] == n) {
                    const double dsq = (ea.state() - eb.state()).squaredNorm();
                    const double wsup = win.empty() ? dsq : win.front().second;
                    double* row = acc + next_curve * 6;
                    row[0] += dsq;
                    row[1] += dsq * dsq;
                    row[2] += wsup;
                    row[3] += wsup * wsup;
                    row[4] += runsup;
                    row[5] += runsup * runsup;
                    ++next_curve;
                }
                if (next_cp < cp_idx.size() && cp_idx[next_cp] == n) {
                    cp_cr[static_cast<std::size_t>(p) * cp_idx.size() + next_cp] =
                        ea.window_crnorm_sq(model.r(), &eb);
                    ++next_cp;
                }
            }
        }
    });

    const auto total = sums.merged(blocks);
    CoupledEnsemble out;
    out.n_pairs = n_pairs;
    out.grid_step = cfg.h;
    out.window = window_steps * cfg.h;

    std::vector<double> s0(nc), s1(nc);
    auto take = [&](std::size_t a, std::size_t b) {
        for (std::size_t i = 0; i < nc; ++i) {
            s0[i] = total[i * 6 + a];
            s1[i] = total[i * 6 + b];
        }
    };
    take(0, 1);
    out.diff_sq = finalize_curve(curve_idx, cfg.h, s0, s1, n_pairs);
    take(2, 3);
    out.window_sup = finalize_curve(curve_idx, cfg.h, s0, s1, n_pairs);
    take(4, 5);
    out.running_sup = finalize_curve(curve_idx, cfg.h, s0, s1, n_pairs);

    for (int idx : cp_idx) out.checkpoint_times.push_back(idx * cfg.h);
    if (!cp_idx.empty()) {
        out.diff_crnorm_sq.t = out.checkpoint_times;
        for (std::size_t c = 0; c < cp_idx.size(); ++c) {
            std::vector<double> vals(static_cast<std::size_t>(n_pairs));
            for (long p = 0; p < n_pairs; ++p) {
                vals[static_cast<std::size_t>(p)] =
                    cp_cr[static_cast<std::size_t>(p) * cp_idx.size() + c];
            }
            const auto ms = mean_stderr(vals);
            out.diff_crnorm_sq.mean.push_back(ms.mean);
            out.diff_crnorm_sq.stderr_.push_back(ms.stderr_);
        }
    }
    return out;
}

OrderProbeResult strong_order_probe(const NeutralModel& model, const Segment& xi,
                                    const std::vector<double>& h_list, double T,
                                    long n_paths, const SchemeConfig& cfg) {
    if (h_list.size() < 3) {
        throw ConfigError("strong_order_probe needs at least 3 step sizes", "h_list");
    }
    for (std::size_t i = 0; i + 1 < h_list.size(); ++i) {
        if (!(h_list[i] > h_list[i + 1])) {
            throw ConfigError("h_list must be strictly descending", "h_list");
        }
        const double ratio = h_list[i] / h_list[i + 1];
        if (std::abs(ratio - std::lround(ratio)) > 1e-9) {
            throw ConfigError("each h must be an integer multiple of the next", "h_list");
        }
    }
    const double h_ref = h_list.back() / 4.0;
    const long steps_ref = std::lround(T / h_ref);

    // Scheme validation probe: run regardless of the admissibility ledger.
    SchemeConfig run_cfg = cfg;
    run_cfg.force = true;
    run_cfg.T = T;

    NoiseStream noise(cfg.master_seed, model.noise_dim(), h_ref);
    const std::size_t levels = h_list.size();
    std::vector<double> err_sq(static_cast<std::size_t>(n_paths) * levels, 0.0);

    auto build_xi = [&](double h) {
        const int depth = std::max(1, static_cast<int>(std::floor(xi.t_mem() / h + 1e-9)));
        return Segment::from_function(h, depth, xi.dim(),
                                      [&](double theta) { return xi.eval(theta); });
    };

    parallel_for(n_paths, resolve_threads(cfg.threads), [&](long p) {
        Eigen::MatrixXd fine(model.noise_dim(), steps_ref);
        Eigen::VectorXd dw(model.noise_dim());
        for (long n = 0; n < steps_ref; ++n) {
            noise.increment(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n), dw);
            fine.col(n) = dw;
        }
        SchemeConfig ref_cfg = run_cfg;
        ref_cfg.h = h_ref;
        const Eigen::VectorXd x_ref =
            simulate_path_with_increments(model, build_xi(h_ref), ref_cfg, fine)
                .path.post_values()
                .rightCols(1);
        for (std::size_t li = 0; li < levels; ++li) {
            const double h = h_list[li];
            const long factor = std::lround(h / h_ref);
            const long steps = steps_ref / factor;
            Eigen::MatrixXd coarse(model.noise_dim(), steps);
            for (long n = 0; n < steps; ++n) {
                coarse.col(n) = fine.middleCols(n * factor, factor).rowwise().sum();
            }
            SchemeConfig level_cfg = run_cfg;
            level_cfg.h = h;
            const Eigen::VectorXd x_h =
                simulate_path_with_increments(model, build_xi(h), level_cfg, coarse)
                    .path.post_values()
                    .rightCols(1);
            err_sq[static_cast<std::size_t>(p) * levels + li] = (x_h - x_ref).squaredNorm();
        }
    });

    OrderProbeResult out;
    out.h_values = h_list;
    std::vector<double> log_h(levels), log_err(levels);
    for (std::size_t li = 0; li < levels; ++li) {
        std::vector<double> per_path(static_cast<std::size_t>(n_paths));
        for (long p = 0; p < n_paths; ++p) {
            per_path[static_cast<std::size_t>(p)] =
                err_sq[static_cast<std::size_t>(p) * levels + li];
        }
        const double rms = std::sqrt(pairwise_sum(per_path) / static_cast<double>(n_paths));
        out.rms_errors.push_back(rms);
        log_h[li] = std::log(h_list[li]);
        log_err[li] = std::log(rms);
    }
    out.slope = fit_line(log_h, log_err).slope;
    return out;
}

}  // namespace nsfde
