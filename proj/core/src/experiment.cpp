#include "nsfde/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nsfde/checks.hpp"
#include "nsfde/errors.hpp"
#include "nsfde/integrator.hpp"
#include "nsfde/parallel.hpp"
#include "nsfde/stability.hpp"

namespace nsfde {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.flush()) throw Error("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& path) {
    if (!obj.is_object()) throw ConfigError("expected an object at " + path, path);
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown field: " + path + "." + key, path + "." + key);
        }
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

SchemeConfig parse_scheme(const json& cfg) {
    if (!cfg.contains("scheme")) throw ConfigError("missing field: scheme", "scheme");
    const json& js = cfg.at("scheme");
    reject_unknown_keys(js,
                        {"h", "T", "fp_tol", "fp_max_iter", "tol_tail", "master_seed",
                         "force", "predictor", "blow_up_limit"},
                        "scheme");
    SchemeConfig s;
    s.h = js.at("h").get<double>();
    s.T = js.at("T").get<double>();
    s.fp_tol = get_or(js, "fp_tol", s.fp_tol);
    s.fp_max_iter = get_or(js, "fp_max_iter", s.fp_max_iter);
    s.tol_tail = get_or(js, "tol_tail", s.tol_tail);
    s.master_seed = get_or<std::uint64_t>(js, "master_seed", 0);
    s.force = get_or(js, "force", false);
    s.predictor = get_or(js, "predictor", false);
    s.blow_up_limit = get_or(js, "blow_up_limit", s.blow_up_limit);
    if (!(s.h > 0.0) || !(s.T >= s.h)) {
        throw ConfigError("scheme requires h > 0 and T >= h", "scheme");
    }
    return s;
}

int initial_depth(const NeutralModel& model, const SchemeConfig& scheme,
                  std::optional<double> t_mem_request) {
    const double mu2r = r_moment(model.mu(), 2.0 * model.r());
    const double needed =
        required_depth(model.mu(), model.r(), scheme.tol_tail * mu2r, scheme.h);
    double t_mem = needed;
    if (t_mem_request) {
        if (*t_mem_request + 0.5 * scheme.h < needed) {
            throw ConfigError("initial t_mem shorter than the required window", "initial.t_mem");
        }
        t_mem = *t_mem_request;
    }
    return std::max(1, static_cast<int>(std::lround(t_mem / scheme.h)));
}

Segment parse_initial(const json& spec, const NeutralModel& model,
                      const SchemeConfig& scheme, const std::string& path) {
    reject_unknown_keys(spec, {"type", "value", "amplitude", "omega", "phase", "slope", "t_mem"},
                        path);
    std::optional<double> t_mem;
    if (spec.contains("t_mem")) t_mem = spec.at("t_mem").get<double>();
    const int depth = initial_depth(model, scheme, t_mem);
    const std::string type = spec.at("type").get<std::string>();
    const int d = model.dim();
    if (type == "constant") {
        Eigen::VectorXd v;
        const json& jv = spec.at("value");
        if (jv.is_number()) {
            v = Eigen::VectorXd::Constant(d, jv.get<double>());
        } else {
            if (static_cast<int>(jv.size()) != d) {
                throw ConfigError("initial value length != dim", path + ".value");
            }
            v.resize(d);
            for (int i = 0; i < d; ++i) v[i] = jv.at(static_cast<std::size_t>(i)).get<double>();
        }
        return Segment::constant(scheme.h, depth, v);
    }
    if (type == "cosine") {
        const double amp = get_or(spec, "amplitude", 1.0);
        const double omega = get_or(spec, "omega", 1.0);
        const double phase = get_or(spec, "phase", 0.0);
        return Segment::from_function(scheme.h, depth, d, [&](double theta) {
            return Eigen::VectorXd::Constant(d, amp * std::cos(omega * theta + phase));
        });
    }
    if (type == "ramp") {
        const double slope = get_or(spec, "slope", 1.0);
        return Segment::from_function(scheme.h, depth, d, [&](double theta) {
            return Eigen::VectorXd::Constant(d, slope * theta);
        });
    }
    throw ConfigError("unknown initial type: " + type, path + ".type");
}

std::string json_to_text(const json& j) { return j.dump(2) + "\n"; }

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

json check_to_json(const CheckReport& rep) {
    return json{{"name", rep.name},   {"trials", rep.trials},
                {"pass", rep.pass},   {"worst", rep.worst},
                {"threshold", rep.threshold}, {"detail", rep.detail}};
}

json bound_checks_to_json(const std::vector<BoundCheck>& checks) {
    json out = json::array();
    for (const auto& c : checks) {
        out.push_back({{"t", c.t}, {"estimate", c.estimate}, {"stderr", c.stderr_},
                       {"bound", c.bound}, {"pass", c.pass}});
    }
    return out;
}

bool all_pass(const std::vector<BoundCheck>& checks) {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

struct RunContext {
    fs::path out_dir;
    std::vector<std::string> artifacts;
    std::vector<std::string> violations;

    void write(const std::string& name, const std::string& content) {
        write_file_atomic(out_dir / name, content);
        artifacts.push_back(name);
    }
};

void write_witnesses(RunContext& ctx, const CheckReport& rep, const std::string& tag) {
    const char* roles[2] = {"phi", "psi"};
    for (std::size_t i = 0; i < rep.witness.size() && i < 2; ++i) {
        std::ostringstream csv;
        write_csv(rep.witness[i], csv);
        ctx.write("witness_" + tag + "_" + roles[i] + ".csv", csv.str());
    }
}

void run_checks_into(const NeutralModel& model, const ConstantLedger& ledger,
                     const CheckConfig& ccfg, RunContext& ctx, json& report) {
    json checks = json::array();
    for (const auto& rep :
         {verify_h1(model, ccfg), verify_h2_drift(model, ccfg), verify_h2_diffusion(model, ccfg),
          monotone_check(model, ledger, ccfg)}) {
        checks.push_back(check_to_json(rep));
        if (!rep.pass) {
            ctx.violations.push_back(rep.detail);
            std::string tag = rep.name.substr(0, rep.name.find(' '));
            write_witnesses(ctx, rep, tag);
        }
    }
    report["checks"] = checks;
}

void run_simulate_into(const NeutralModel& model, const Segment& xi, long n_paths,
                       const SchemeConfig& scheme, const std::vector<double>& checkpoints,
                       const ConstantLedger& ledger, RunContext& ctx, json& report) {
    EnsembleRequest request;
    request.checkpoints = checkpoints;
    const Ensemble ens = simulate_ensemble(model, xi, n_paths, scheme, request);

    const double xi_cr_sq = std::pow(cr_norm(xi, model.r()), 2);
    const double slack = 10.0 * scheme.h;
    std::vector<BoundCheck> moment_bound, segment_bound;
    if (ledger.admissible) {
        moment_bound = check_curve_bound(
            second_moment_curve(ens),
            [&](double t) { return ledger.C1 + ledger.C2 * xi_cr_sq * std::exp(-ledger.lambda * t); },
            slack);
        segment_bound = check_curve_bound(
            segment_norm_curve(ens),
            [&](double t) { return ledger.C4 + ledger.C5 * xi_cr_sq * std::exp(-ledger.lambda * t); },
            slack);
        if (!all_pass(moment_bound)) {
            ctx.violations.push_back("second-moment bound violated (see moments.csv)");
        }
        if (!all_pass(segment_bound)) {
            ctx.violations.push_back("segment-norm bound violated (see checkpoints.csv)");
        }
    }

    std::ostringstream moments;
    write_curve_csv(ens.second_moment, moment_bound, moments);
    ctx.write("moments.csv", moments.str());
    std::ostringstream cps;
    write_curve_csv(ens.crnorm_sq, segment_bound, cps);
    ctx.write("checkpoints.csv", cps.str());

    report["simulate"] = {{"n_paths", n_paths},
                          {"xi_crnorm_sq", xi_cr_sq},
                          {"moment_bound", bound_checks_to_json(moment_bound)},
                          {"segment_bound", bound_checks_to_json(segment_bound)}};
}

void run_coupling_into(const NeutralModel& model, const Segment& xi, const Segment& eta,
                       long n_pairs, const SchemeConfig& scheme,
                       const std::vector<double>& checkpoints, const ConstantLedger& ledger,
                       double window, RunContext& ctx, json& report) {
    EnsembleRequest request;
    request.checkpoints = checkpoints;
    request.window = window;
    const CouplingReport rep =
        coupling_decay(model, xi, eta, scheme, n_pairs, ledger, request);

    std::ostringstream csv;
    write_coupling_csv(rep.data, csv);
    ctx.write("coupling.csv", csv.str());
    std::ostringstream cps;
    write_curve_csv(rep.data.diff_crnorm_sq, rep.segment_bound, cps);
    ctx.write("coupling_checkpoints.csv", cps.str());

    if (!rep.decaying) {
        ctx.violations.push_back("coupling envelope is not decaying (bound-violation candidate)");
    }
    if (!all_pass(rep.running_sup_bound)) {
        ctx.violations.push_back("running-sup coupling bound violated (see coupling.csv)");
    }
    if (!all_pass(rep.segment_bound)) {
        ctx.violations.push_back("segment-norm coupling bound violated");
    }

    json jc;
    jc["n_pairs"] = n_pairs;
    jc["init_gap_crnorm_sq"] = rep.init_gap_crnorm_sq;
    jc["decaying"] = rep.decaying;
    if (rep.window_fit) {
        jc["window_rate"] = rep.window_fit->rate;
        jc["window_fit_r2"] = rep.window_fit->r2;
    }
    jc["running_sup_bound"] = bound_checks_to_json(rep.running_sup_bound);
    jc["segment_bound"] = bound_checks_to_json(rep.segment_bound);
    report["coupling"] = jc;
}

void run_distribution_into(const NeutralModel& model, const std::vector<Segment>& initials,
                           const SchemeConfig& scheme, const std::vector<double>& checkpoints,
                           const DistributionConfig& dcfg, RunContext& ctx, json& report) {
    const DLReport rep =
        stability_in_distribution_report(model, initials, scheme, checkpoints, dcfg);

    std::ostringstream cross;
    write_dl_csv(rep, cross);
    ctx.write("dl_cross.csv", cross.str());

    std::ostringstream consec;
    consec << "ensemble,t_from,t_to,dl\n";
    for (std::size_t e = 0; e < rep.consecutive.size(); ++e) {
        for (const auto& d : rep.consecutive[e]) {
            consec << e << ',' << d.t_from << ',' << d.t_to << ',' << d.dl << "\n";
        }
    }
    ctx.write("dl_consecutive.csv", consec.str());

    if (!rep.cross_decreasing) {
        ctx.violations.push_back("cross-initial-data d_L is not decreasing beyond the noise floor");
    }
    if (!rep.settled) {
        ctx.violations.push_back("cross-initial-data d_L did not settle within floor + threshold");
    }

    json jd;
    jd["family_size"] = rep.family_size;
    jd["threshold"] = rep.threshold;
    jd["cross_decreasing"] = rep.cross_decreasing;
    jd["settled"] = rep.settled;
    json cps = json::array();
    for (const auto& cp : rep.cross) {
        cps.push_back({{"t", cp.t}, {"cross", cp.cross}, {"floor_a", cp.floor_a},
                       {"floor_b", cp.floor_b}});
    }
    jd["cross"] = cps;
    report["dl"] = jd;
}

std::vector<double> parse_checkpoints(const json& cfg, double T) {
    std::vector<double> cps = get_or(cfg, "checkpoints", std::vector<double>{});
    if (cps.empty()) {
        for (double t : {1.0, 2.0, 4.0, 8.0, 16.0}) {
            if (t <= T + 1e-9) cps.push_back(t);
        }
        if (cps.empty()) cps.push_back(T);
    }
    for (double t : cps) {
        if (t < 0.0 || t > T + 1e-9) throw ConfigError("checkpoint outside [0, T]", "checkpoints");
    }
    return cps;
}

const std::vector<std::string> kCommonKeys = {"kind", "model", "scheme", "out_dir",
                                              "threads", "emit_timestamp"};

std::vector<std::string> with_common(std::initializer_list<std::string> extra) {
    std::vector<std::string> keys = kCommonKeys;
    keys.insert(keys.end(), extra.begin(), extra.end());
    return keys;
}

}  // namespace

int exit_code_for(const json& report) {
    if (report.contains("error")) return kExitError;
    if (report.contains("verdict") && !report.at("verdict").at("pass").get<bool>()) {
        return kExitViolation;
    }
    return kExitOk;
}

RunOutcome run_experiment(const json& config, const RunOverrides& overrides) {
    if (!config.is_object()) throw ConfigError("config must be a JSON object", "");
    if (!config.contains("kind")) throw ConfigError("missing field: kind", "kind");
    const std::string kind = config.at("kind").get<std::string>();

    RunContext ctx;
    std::string out_dir = get_or<std::string>(config, "out_dir", "");
    if (overrides.out_dir) out_dir = *overrides.out_dir;
    if (out_dir.empty()) throw ConfigError("no output directory (out_dir or --out)", "out_dir");
    ctx.out_dir = out_dir;

    json report;
    report["kind"] = kind;

    SchemeConfig scheme = parse_scheme(config);
    if (overrides.seed) scheme.master_seed = *overrides.seed;
    int threads = get_or(config, "threads", 0);
    if (overrides.threads) threads = *overrides.threads;
    scheme.threads = resolve_threads(threads);

    auto model_from_config = [&]() {
        if (!config.contains("model")) throw ConfigError("missing field: model", "model");
        return NeutralModel::from_json(config.at("model"));
    };

    CheckConfig ccfg;
    ccfg.seed = scheme.master_seed;
    ccfg.threads = scheme.threads;

    if (kind == "check") {
        reject_unknown_keys(config, with_common({"trials", "tol", "grid_step"}), "config");
        const NeutralModel model = model_from_config();
        ccfg.trials = get_or<long>(config, "trials", ccfg.trials);
        ccfg.tol = get_or(config, "tol", ccfg.tol);
        ccfg.grid_step = get_or(config, "grid_step", ccfg.grid_step);
        const ConstantLedger ledger = constant_ledger(model);
        report["ledger"] = ledger.to_json();
        run_checks_into(model, ledger, ccfg, ctx, report);
    } else if (kind == "constants") {
        reject_unknown_keys(config, with_common({"eps1", "eps2", "lambda"}), "config");
        const NeutralModel model = model_from_config();
        std::optional<double> eps1, eps2, lambda;
        if (config.contains("eps1")) eps1 = config.at("eps1").get<double>();
        if (config.contains("eps2")) eps2 = config.at("eps2").get<double>();
        if (config.contains("lambda")) lambda = config.at("lambda").get<double>();
        report["ledger"] = constant_ledger(model, eps1, eps2, lambda).to_json();
    } else if (kind == "simulate") {
        reject_unknown_keys(config, with_common({"n_paths", "checkpoints", "initial"}), "config");
        const NeutralModel model = model_from_config();
        const Segment xi = parse_initial(config.at("initial"), model, scheme, "initial");
        const auto checkpoints = parse_checkpoints(config, scheme.T);
        const ConstantLedger ledger = constant_ledger(model);
        report["ledger"] = ledger.to_json();
        run_simulate_into(model, xi, get_or<long>(config, "n_paths", 1000), scheme,
                          checkpoints, ledger, ctx, report);
    } else if (kind == "coupling") {
        reject_unknown_keys(
            config, with_common({"n_pairs", "checkpoints", "initial", "initial_b", "window"}),
            "config");
        const NeutralModel model = model_from_config();
        const Segment xi = parse_initial(config.at("initial"), model, scheme, "initial");
        const Segment eta = parse_initial(config.at("initial_b"), model, scheme, "initial_b");
        const auto checkpoints = parse_checkpoints(config, scheme.T);
        const ConstantLedger ledger = constant_ledger(model);
        report["ledger"] = ledger.to_json();
        run_coupling_into(model, xi, eta, get_or<long>(config, "n_pairs", 1000), scheme,
                          checkpoints, ledger, get_or(config, "window", 1.0), ctx, report);
    } else if (kind == "distribution") {
        reject_unknown_keys(config,
                            with_common({"n_paths", "checkpoints", "initials", "family_size",
                                         "dl_threshold", "segment_max_points"}),
                            "config");
        const NeutralModel model = model_from_config();
        if (!config.contains("initials") || config.at("initials").size() < 2) {
            throw ConfigError("distribution needs >= 2 entries in initials", "initials");
        }
        std::vector<Segment> initials;
        int i = 0;
        for (const auto& spec : config.at("initials")) {
            initials.push_back(
                parse_initial(spec, model, scheme, "initials[" + std::to_string(i++) + "]"));
        }
        const auto checkpoints = parse_checkpoints(config, scheme.T);
        DistributionConfig dcfg;
        dcfg.n_paths = get_or<long>(config, "n_paths", dcfg.n_paths);
        dcfg.family_size = get_or(config, "family_size", dcfg.family_size);
        dcfg.threshold = get_or(config, "dl_threshold", dcfg.threshold);
        dcfg.segment_max_points = get_or(config, "segment_max_points", dcfg.segment_max_points);
        run_distribution_into(model, initials, scheme, checkpoints, dcfg, ctx, report);
    } else if (kind == "order") {
        reject_unknown_keys(config, with_common({"n_paths", "h_list", "initial"}), "config");
        const NeutralModel model = model_from_config();
        const std::vector<double> h_list = config.at("h_list").get<std::vector<double>>();
        SchemeConfig probe_scheme = scheme;
        probe_scheme.h = h_list.back() / 4.0;
        const Segment xi = parse_initial(config.at("initial"), model, probe_scheme, "initial");
        const auto probe = strong_order_probe(model, xi, h_list, scheme.T,
                                              get_or<long>(config, "n_paths", 256), scheme);
        std::ostringstream csv;
        csv << "h,rms_error\n";
        for (std::size_t i = 0; i < probe.h_values.size(); ++i) {
            csv << probe.h_values[i] << ',' << probe.rms_errors[i] << "\n";
        }
        ctx.write("order.csv", csv.str());
        report["order"] = {{"slope", probe.slope}, {"h_list", probe.h_values},
                           {"rms_errors", probe.rms_errors}};
    } else if (kind == "example5") {
        reject_unknown_keys(config,
                            with_common({"c", "eps", "rho", "r", "trials", "n_paths", "n_pairs",
                                         "checkpoints", "family_size"}),
                            "config");
        const NeutralModel model = model_from_config();
        const double eps = config.at("eps").get<double>();
        const double mu2r = r_moment(model.mu(), 2.0 * model.r());

        ccfg.trials = get_or<long>(config, "trials", 4000);
        const ConstantLedger ledger = constant_ledger(model);
        report["ledger"] = ledger.to_json();
        report["threshold_c"] = (mu2r < 4.0) ? json(example5_threshold(eps, mu2r)) : json();
        run_checks_into(model, ledger, ccfg, ctx, report);

        if (ledger.admissible) {
            const auto checkpoints = parse_checkpoints(config, scheme.T);
            const long n_paths = get_or<long>(config, "n_paths", 512);
            const long n_pairs = get_or<long>(config, "n_pairs", 512);
            const Segment xi = Segment::constant(
                scheme.h, initial_depth(model, scheme, std::nullopt), 1.0);
            const Segment eta = Segment::constant(scheme.h, xi.depth(), 0.0);
            run_simulate_into(model, xi, n_paths, scheme, checkpoints, ledger, ctx, report);
            run_coupling_into(model, xi, eta, n_pairs, scheme, checkpoints, ledger, 1.0, ctx,
                              report);
            DistributionConfig dcfg;
            dcfg.n_paths = std::max<long>(64, n_paths / 2);
            dcfg.family_size = get_or(config, "family_size", dcfg.family_size);
            run_distribution_into(model, {xi, eta}, scheme, checkpoints, dcfg, ctx, report);
        } else {
            report["note"] = "parameter set not admissible; simulation phases skipped";
        }
    } else {
        throw ConfigError("unknown experiment kind: " + kind, "kind");
    }

    report["verdict"] = {{"pass", ctx.violations.empty()}, {"violations", ctx.violations}};
    report["meta"] = {{"seed", scheme.master_seed}, {"threads", scheme.threads}};
    if (get_or(config, "emit_timestamp", true)) {
        report["meta"]["timestamp"] = timestamp_utc();
    }
    ctx.artifacts.push_back("report.json");
    report["artifacts"] = ctx.artifacts;
    write_file_atomic(ctx.out_dir / "report.json", json_to_text(report));

    return RunOutcome{exit_code_for(report), report};
}

RunOutcome run_experiment_file(const fs::path& config_path, const RunOverrides& overrides) {
    json config;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config file: " + config_path.string());
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        RunOutcome out;
        out.exit_code = kExitError;
        out.report["error"] = std::string("config parse error: ") + e.what();
        return out;
    } catch (const ConfigError& e) {
        RunOutcome out;
        out.exit_code = kExitError;
        out.report["error"] = e.what();
        return out;
    }
    try {
        return run_experiment(config, overrides);
    } catch (const Error& e) {
        RunOutcome out;
        out.exit_code = kExitError;
        out.report["error"] = e.what();
        return out;
    }
}

RunOutcome run_example5(double c, double eps, double rho, double r,
                        const json& overrides, const RunOverrides& run) {
    json config;
    config["kind"] = "example5";
    config["c"] = c;
    config["eps"] = eps;
    config["rho"] = rho;
    config["r"] = r;
    config["model"] = make_example_model(c, eps, rho, r).to_json();
    config["scheme"] = {{"h", 1e-3}, {"T", 16.0}, {"master_seed", 0}};
    if (!overrides.is_null() && !overrides.empty()) {
        config.merge_patch(overrides);
    }
    try {
        return run_experiment(config, run);
    } catch (const Error& e) {
        RunOutcome out;
        out.exit_code = kExitError;
        out.report["error"] = e.what();
        return out;
    }
}

}  // namespace nsfde
