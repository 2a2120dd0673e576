#include "covkit/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "covkit/bench.hpp"
#include "covkit/chains.hpp"
#include "covkit/diagnostics.hpp"
#include "covkit/estimators.hpp"
#include "covkit/io.hpp"
#include "covkit/rng.hpp"
#include "covkit/streaming.hpp"
#include "covkit/windows.hpp"

namespace covkit {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConditionFailed = 3;
constexpr int kExitNumeric = 4;

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json rowmajor = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) rowmajor.push_back(m(i, j));
    return rowmajor;
}

json estimate_to_json(const CovEstimate& est) {
    json doc;
    doc["method"] = method_name(est.method);
    doc["window"] = est.window ? json(est.window->name()) : json(nullptr);
    doc["b_used"] = est.b_used;
    doc["n_used"] = est.n_used;
    doc["p"] = est.matrix.rows();
    doc["matrix"] = matrix_to_json(est.matrix);
    doc["min_eigenvalue"] = est.min_eigenvalue;
    doc["wall_time_ms"] = est.wall_time_ms;
    return doc;
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << doc.dump(2) << "\n";
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw IoError("cannot open '" + out_path + "' for writing");
    os << doc.dump(2) << "\n";
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("COVKIT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// "ar1:<phi>" or "var1:<p>[:<scale>[:<offset>]]"; the coefficient matrix of
// a var1 model is drawn from a seed decorrelated from the chain seeds.
ReferenceModel parse_model(const std::string& text, std::uint64_t seed) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    try {
        if (parts.size() == 2 && parts[0] == "ar1") return Ar1Model{std::stod(parts[1]), seed};
        if (parts.size() >= 2 && parts.size() <= 4 && parts[0] == "var1") {
            const Index p = std::stol(parts[1]);
            const double scale = parts.size() >= 3 ? std::stod(parts[2]) : 1.0;
            const double offset = parts.size() >= 4 ? std::stod(parts[3]) : 1.0;
            return Var1Model{make_phi(p, seed ^ 0xA5A5A5A5A5A5A5A5ULL, offset, scale), seed};
        }
    } catch (const std::logic_error&) {
        throw ConfigError("invalid model argument in '" + text + "'");
    }
    throw ConfigError("unknown model '" + text +
                      "'; expected ar1:<phi> or var1:<p>[:<scale>[:<offset>]]");
}

Eigen::MatrixXd generate_model(const ReferenceModel& model, Index n) {
    if (std::holds_alternative<Ar1Model>(model)) return ar1_generate(std::get<Ar1Model>(model), n);
    return var1_generate(std::get<Var1Model>(model), n);
}

// "bm", "obm", "sv:<window>", "wbm:<window>"
MethodChoice parse_method_choice(const std::string& text, bool fast) {
    const auto colon = text.find(':');
    MethodChoice choice;
    choice.fast = fast;
    choice.method = parse_method(text.substr(0, colon));
    if (colon != std::string::npos) choice.window = LagWindow::parse(text.substr(colon + 1));
    if ((choice.method == Method::SV || choice.method == Method::WBM) && !choice.window)
        throw ConfigError("method '" + text + "' requires a window, e.g. " +
                          method_name(choice.method) + ":flat-top");
    return choice;
}

struct CommonEstimatorFlags {
    std::string method = "wbm";
    std::string window;
    std::string schedule = "pow:0.3333333333333333";
    bool no_fast = false;

    EstimatorSpec to_spec() const {
        EstimatorSpec spec;
        spec.method = parse_method(method);
        spec.window = window.empty() ? std::nullopt : std::optional<LagWindow>(LagWindow::parse(window));
        if (spec.method == Method::BM || spec.method == Method::OBM)
            spec.window.reset();  // batch means take no window
        else if (!spec.window)
            throw ConfigError("--method " + method + " requires --window");
        spec.schedule = BatchSchedule::parse(schedule);
        spec.fast = !no_fast;
        return spec;
    }
};

void add_estimator_flags(CLI::App* cmd, CommonEstimatorFlags& flags) {
    cmd->add_option("--method", flags.method, "Estimator: bm, obm, sv, wbm");
    cmd->add_option("--window", flags.window,
                    "Lag window: bartlett, tukey-hanning, flat-top, truncation, parzen:<q>, "
                    "scaled-bartlett:<eta>");
    cmd->add_option("--schedule", flags.schedule,
                    "Batch/truncation schedule: pow:<nu>, doubling:<nu>, fixed:<b>");
    cmd->add_flag("--no-fast", flags.no_fast,
                  "Use the generic lag sum for flat-top wbm instead of the two-term form");
}

int run_estimate(const std::string& input, ChainFormat format, const CommonEstimatorFlags& flags,
                 const std::string& out_path, std::ostream& out) {
    const Eigen::MatrixXd chain = load_chain(input, format);
    const CovEstimate est = run_estimator(chain, flags.to_spec());
    emit(estimate_to_json(est), out_path, out);
    return kExitOk;
}

int run_simulate(const std::string& model_text, Index n, std::uint64_t seed,
                 const std::string& out_path, ChainFormat format, bool header) {
    const ReferenceModel model = parse_model(model_text, seed);
    save_chain(out_path, generate_model(model, n), format, header);
    return kExitOk;
}

int run_check_window(const std::string& window_name, Index b, double tol,
                     const std::string& out_path, std::ostream& out) {
    const LagWindow window = LagWindow::parse(window_name);
    const ConditionReport report = check_conditions(window, b, tol);
    json doc;
    doc["window"] = window.name();
    doc["b"] = report.b_used;
    doc["tol"] = report.tol;
    doc["sum_k_delta2"] = report.sum_k_delta2;
    doc["abs_sum_delta2"] = report.abs_sum_delta2;
    doc["cond1_holds"] = report.cond1_holds;
    doc["cond1_on_grid"] = report.cond1_on_grid;
    json trend = json::array();
    for (const auto& [gb, s] : report.abs_sum_trend) trend.push_back(json::array({gb, s}));
    doc["abs_sum_trend"] = trend;
    doc["abs_sum_decays"] = report.abs_sum_decays;
    doc["consistency_ok"] = report.consistency_ok;
    emit(doc, out_path, out);
    return report.consistency_ok ? kExitOk : kExitConditionFailed;
}

int run_ess(const std::string& input, ChainFormat format, const CommonEstimatorFlags& flags,
            double level, const std::string& out_path, std::ostream& out) {
    const Eigen::MatrixXd chain = load_chain(input, format);
    const EstimatorSpec spec = flags.to_spec();
    const CovEstimate est = run_estimator(chain, spec);
    const Ess ess = multivariate_ess(chain, est);
    const RegionSpec region =
        make_region(level, chain.colwise().mean().transpose(), est, chain.rows());
    json doc;
    doc["method"] = method_name(est.method);
    doc["window"] = est.window ? json(est.window->name()) : json(nullptr);
    doc["b"] = est.b_used;
    doc["n"] = chain.rows();
    doc["ess"] = ess.value;
    doc["level"] = level;
    doc["volume"] = region_volume(region);
    doc["psd_projected"] = ess.psd_projected;
    emit(doc, out_path, out);
    return kExitOk;
}

int run_stop(const std::string& model_text, const std::string& input, ChainFormat format,
             std::uint64_t seed, const StoppingConfig& config, const std::string& estimator_name,
             const std::string& out_path, std::ostream& out) {
    StoppingConfig cfg = config;
    if (estimator_name == "bm")
        cfg.estimator = StoppingEstimator::BM;
    else if (estimator_name == "wbm-flat-top")
        cfg.estimator = StoppingEstimator::WbmFlatTop;
    else
        throw ConfigError("unknown stopping estimator '" + estimator_name +
                          "'; valid names: bm, wbm-flat-top");

    StoppingResult result;
    if (!model_text.empty()) {
        const ReferenceModel model = parse_model(model_text, seed);
        if (std::holds_alternative<Ar1Model>(model)) {
            Ar1Model m = std::get<Ar1Model>(model);
            Rng rng(m.seed);
            double x = rng.normal() / std::sqrt(1.0 - m.phi * m.phi);
            result = sequential_stop(
                [&] {
                    x = m.phi * x + rng.normal();
                    return Eigen::VectorXd::Constant(1, x).eval();
                },
                cfg);
        } else {
            Var1Model m = std::get<Var1Model>(model);
            const Eigen::MatrixXd v = var1_stationary(m.coeff);
            Rng rng(m.seed);
            Eigen::LLT<Eigen::MatrixXd> llt(v);
            Eigen::VectorXd x = Eigen::MatrixXd(llt.matrixL()) * rng.normal_vector(m.coeff.rows());
            result = sequential_stop(
                [&] {
                    x = m.coeff * x + rng.normal_vector(m.coeff.rows());
                    return x;
                },
                cfg);
        }
    } else {
        // consume rows of a stored chain as the sample source
        const Eigen::MatrixXd chain = load_chain(input, format);
        Index row = 0;
        if (cfg.max_n == 0 || cfg.max_n > chain.rows()) cfg.max_n = chain.rows();
        result = sequential_stop(
            [&] {
                if (row >= chain.rows())
                    throw NumericError("sample source exhausted at n = " + std::to_string(row));
                return chain.row(row++).transpose().eval();
            },
            cfg);
    }

    json doc;
    doc["estimator"] = estimator_name;
    doc["schedule"] = cfg.schedule.name();
    doc["ess_threshold"] = cfg.ess_threshold;
    doc["stopped_at"] = result.stopped_at;
    doc["ess"] = result.final_ess;
    doc["reached_threshold"] = result.reached_threshold;
    doc["psd_projected"] = result.psd_projected_any;
    json trace = json::array();
    for (const auto& [n, e] : result.ess_trace) trace.push_back(json::array({n, e}));
    doc["trace"] = trace;
    emit(doc, out_path, out);
    return kExitOk;
}

int run_coverage(const std::string& model_text, Index n, Index reps, double level,
                 std::uint64_t seed, const CommonEstimatorFlags& flags, int threads,
                 const std::string& out_path, std::ostream& out) {
    const ReferenceModel model = parse_model(model_text, seed);
    const EstimatorSpec spec = flags.to_spec();
    const CoverageResult result = coverage_experiment(model, n, spec, level, reps, seed, threads);
    json doc;
    doc["method"] = method_name(spec.method);
    doc["window"] = spec.window ? json(spec.window->name()) : json(nullptr);
    doc["b"] = result.b_used;
    doc["n"] = n;
    doc["level"] = level;
    doc["reps"] = result.reps;
    doc["coverage"] = result.coverage;
    doc["mc_se"] = result.mc_se;
    doc["psd_projected"] = result.psd_projected_count > 0;
    doc["psd_projected_count"] = result.psd_projected_count;
    emit(doc, out_path, out);
    return kExitOk;
}

struct BenchFlags {
    std::string mode = "time";
    std::vector<Index> ps{10};
    std::vector<Index> ns{100000};
    std::vector<std::string> methods;
    std::vector<double> scales{0.2, 0.6};
    std::vector<std::string> windows{"bartlett", "tukey-hanning", "flat-top"};
    std::string schedule = "pow:0.3333333333333333";
    std::string model = "ar1:0.5";
    Index reps = 10;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_csv;
    std::string out_json;
    bool no_fast = false;
};

void write_csv(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << text;
}

int run_bench(const BenchFlags& flags, std::ostream& out, std::ostream& err) {
    const BatchSchedule schedule = BatchSchedule::parse(flags.schedule);
    const int threads = resolve_threads(flags.threads);
    std::ostringstream csv;
    json report;
    report["mode"] = flags.mode;
    report["environment"] = cpu_fingerprint();
    report["threads"] = threads;
    report["seed"] = flags.seed;
    csv.precision(17);

    if (flags.mode == "time") {
        TimingConfig config;
        config.ps = flags.ps;
        config.ns = flags.ns;
        config.schedule = schedule;
        config.reps = flags.reps;
        config.seed = flags.seed;
        std::vector<std::string> methods = flags.methods;
        if (methods.empty())
            methods = {"wbm:flat-top", "wbm:bartlett", "wbm:tukey-hanning",
                       "sv:flat-top",  "sv:bartlett",  "sv:tukey-hanning", "bm", "obm"};
        for (const auto& m : methods)
            config.choices.push_back(parse_method_choice(m, !flags.no_fast));
        const auto cells = bench_time(config, &err);
        csv << "mode,p,n,b,method,window,reps,threads,mean_time_ms,median_time_ms,se_time_ms,"
               "mean_mse\n";
        json rows = json::array();
        for (const auto& c : cells) {
            const std::string window = c.choice.window ? c.choice.window->name() : "";
            csv << "time," << c.p << ',' << c.n << ',' << c.b << ','
                << method_name(c.choice.method) << ',' << window << ',' << c.reps << ','
                << threads << ',' << c.mean_ms << ',' << c.median_ms << ',' << c.se_ms << ','
                << c.mean_mse << '\n';
            rows.push_back({{"p", c.p},
                            {"n", c.n},
                            {"b", c.b},
                            {"method", method_name(c.choice.method)},
                            {"window", window},
                            {"reps", c.reps},
                            {"mean_time_ms", c.mean_ms},
                            {"median_time_ms", c.median_ms},
                            {"se_time_ms", c.se_ms},
                            {"mean_mse", c.mean_mse}});
        }
        report["cells"] = rows;
    } else if (flags.mode == "var-ratio") {
        VarianceRatioConfig config{parse_model(flags.model, flags.seed),
                                   flags.ns.front(),
                                   {},
                                   schedule,
                                   flags.reps,
                                   flags.seed,
                                   threads};
        std::vector<std::string> methods = flags.methods;
        if (methods.empty()) methods = {"wbm:flat-top", "sv:flat-top", "bm", "sv:bartlett"};
        for (const auto& m : methods)
            config.choices.push_back(parse_method_choice(m, !flags.no_fast));
        const auto cells = bench_variance_ratio(config, &err);
        const Index b = batch_size(config.n, schedule);
        csv << "mode,n,b,method,window,reps,threads,mean,variance\n";
        json rows = json::array();
        for (const auto& c : cells) {
            const std::string window = c.choice.window ? c.choice.window->name() : "";
            csv << "var-ratio," << config.n << ',' << b << ',' << method_name(c.choice.method)
                << ',' << window << ',' << config.reps << ',' << threads << ',' << c.mean << ','
                << c.variance << '\n';
            rows.push_back({{"method", method_name(c.choice.method)},
                            {"window", window},
                            {"reps", config.reps},
                            {"mean", c.mean},
                            {"variance", c.variance}});
        }
        report["cells"] = rows;
    } else if (flags.mode == "mse") {
        MseRatioConfig config;
        config.p = flags.ps.front();
        config.n = flags.ns.front();
        config.scales = flags.scales;
        config.windows.clear();
        for (const auto& w : flags.windows) config.windows.push_back(LagWindow::parse(w));
        config.schedule = schedule;
        config.reps = flags.reps;
        config.seed = flags.seed;
        config.threads = threads;
        const auto cells = bench_mse_ratio(config, &err);
        const Index b = batch_size(config.n, schedule);
        csv << "mode,p,n,b,scale,window,reps,threads,mean_mse_wbm,mean_mse_sv,ratio\n";
        json rows = json::array();
        for (const auto& c : cells) {
            csv << "mse," << config.p << ',' << config.n << ',' << b << ',' << c.scale << ','
                << c.window.name() << ',' << config.reps << ',' << threads << ','
                << c.mean_mse_wbm << ',' << c.mean_mse_sv << ',' << c.ratio << '\n';
            rows.push_back({{"scale", c.scale},
                            {"window", c.window.name()},
                            {"reps", config.reps},
                            {"mean_mse_wbm", c.mean_mse_wbm},
                            {"mean_mse_sv", c.mean_mse_sv},
                            {"ratio", c.ratio}});
        }
        report["cells"] = rows;
    } else {
        throw ConfigError("unknown bench mode '" + flags.mode +
                          "'; valid modes: time, var-ratio, mse");
    }

    write_csv(flags.out_csv, csv.str(), out);
    if (!flags.out_json.empty()) {
        std::ofstream os(flags.out_json);
        if (!os) throw IoError("cannot open '" + flags.out_json + "' for writing");
        os << report.dump(2) << "\n";
    }
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"covkit: long-run covariance estimation for correlated samplers"};
    app.require_subcommand(1);

    // estimate
    auto* estimate = app.add_subcommand("estimate", "Estimate the long-run covariance of a chain");
    std::string est_input, est_format = "auto", est_out;
    CommonEstimatorFlags est_flags;
    estimate->add_option("--input", est_input, "Chain file (CSV or binary)")->required();
    estimate->add_option("--format", est_format, "Input format: auto, csv, bin");
    add_estimator_flags(estimate, est_flags);
    estimate->add_option("--out", est_out, "Write the JSON result here instead of stdout");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a reference chain");
    std::string sim_model, sim_out, sim_format = "auto";
    Index sim_n = 0;
    std::uint64_t sim_seed = 1;
    bool sim_header = false;
    simulate->add_option("--model", sim_model, "ar1:<phi> or var1:<p>[:<scale>[:<offset>]]")
        ->required();
    simulate->add_option("--n", sim_n, "Chain length")->required();
    simulate->add_option("--seed", sim_seed, "Generator seed");
    simulate->add_option("--out", sim_out, "Output file")->required();
    simulate->add_option("--format", sim_format, "Output format: auto, csv, bin");
    simulate->add_flag("--header", sim_header, "Write a CSV header row");

    // check-window
    auto* check = app.add_subcommand("check-window", "Check lag-window consistency conditions");
    std::string chk_window, chk_out;
    Index chk_b = 4096;
    double chk_tol = 1e-9;
    check->add_option("--window", chk_window, "Window name")->required();
    check->add_option("--b", chk_b, "Largest truncation point to check");
    check->add_option("--tol", chk_tol, "Tolerance for sum(k*delta2) == 1");
    check->add_option("--out", chk_out, "Write the JSON report here instead of stdout");

    // ess
    auto* ess = app.add_subcommand("ess", "Multivariate effective sample size of a chain");
    std::string ess_input, ess_format = "auto", ess_out;
    double ess_level = 0.95;
    CommonEstimatorFlags ess_flags;
    ess_flags.window = "flat-top";  // diagnostics default to the flat-top wbm estimator
    ess->add_option("--input", ess_input, "Chain file (CSV or binary)")->required();
    ess->add_option("--format", ess_format, "Input format: auto, csv, bin");
    add_estimator_flags(ess, ess_flags);
    ess->add_option("--level", ess_level, "Confidence level for the reported region volume");
    ess->add_option("--out", ess_out, "Write the JSON result here instead of stdout");

    // stop
    auto* stop = app.add_subcommand("stop", "Run the sequential stopping rule");
    std::string stop_model, stop_input, stop_format = "auto", stop_out;
    std::string stop_estimator = "wbm-flat-top", stop_schedule = "doubling:0.3333333333333333";
    std::uint64_t stop_seed = 1;
    StoppingConfig stop_cfg;
    stop_cfg.min_n = 1000;
    stop_cfg.check_interval = 100;
    stop->add_option("--model", stop_model, "Sample from ar1:<phi> or var1:<p>[:...]");
    stop->add_option("--input", stop_input, "Consume rows of a stored chain instead");
    stop->add_option("--format", stop_format, "Input format: auto, csv, bin");
    stop->add_option("--seed", stop_seed, "Generator seed");
    stop->add_option("--ess-threshold", stop_cfg.ess_threshold, "Stop once ESS reaches this")
        ->required();
    stop->add_option("--min-n", stop_cfg.min_n, "First check happens at this sample count");
    stop->add_option("--check-interval", stop_cfg.check_interval, "Pushes between checks");
    stop->add_option("--schedule", stop_schedule, "doubling:<nu> batch schedule");
    stop->add_option("--estimator", stop_estimator, "bm or wbm-flat-top");
    stop->add_option("--max-n", stop_cfg.max_n, "Give up after this many samples (0 = unbounded)");
    stop->add_option("--out", stop_out, "Write the JSON result here instead of stdout");

    // coverage
    auto* coverage = app.add_subcommand("coverage", "Confidence-region coverage experiment");
    std::string cov_model, cov_out;
    Index cov_n = 0, cov_reps = 500;
    double cov_level = 0.9;
    std::uint64_t cov_seed = 1;
    int cov_threads = 0;
    CommonEstimatorFlags cov_flags;
    cov_flags.window = "flat-top";
    coverage->add_option("--model", cov_model, "ar1:<phi> or var1:<p>[:...]")->required();
    coverage->add_option("--n", cov_n, "Chain length per replication")->required();
    coverage->add_option("--reps", cov_reps, "Replications");
    coverage->add_option("--level", cov_level, "Nominal confidence level");
    coverage->add_option("--seed", cov_seed, "Base seed; replication r uses seed + r");
    add_estimator_flags(coverage, cov_flags);
    coverage->add_option("--threads", cov_threads, "Parallelize replications");
    coverage->add_option("--out", cov_out, "Write the JSON result here instead of stdout");

    // bench
    auto* bench = app.add_subcommand("bench", "Timing / variance-ratio / MSE experiments");
    BenchFlags bench_flags;
    bench->add_option("--mode", bench_flags.mode, "time, var-ratio or mse");
    bench->add_option("--p", bench_flags.ps, "Dimensions (time mode grid; first used otherwise)");
    bench->add_option("--n", bench_flags.ns, "Chain lengths");
    bench->add_option("--methods", bench_flags.methods,
                      "Estimators, e.g. wbm:flat-top sv:bartlett bm obm");
    bench->add_option("--scales", bench_flags.scales, "Coefficient scales (mse mode)");
    bench->add_option("--windows", bench_flags.windows, "Windows (mse mode)");
    bench->add_option("--schedule", bench_flags.schedule, "Batch/truncation schedule");
    bench->add_option("--model", bench_flags.model, "Reference model (var-ratio mode)");
    bench->add_option("--reps", bench_flags.reps, "Replications per cell");
    bench->add_option("--seed", bench_flags.seed, "Base seed");
    bench->add_option("--threads", bench_flags.threads,
                      "Parallelize replications (never a timed kernel)");
    bench->add_option("--out", bench_flags.out_csv, "Write tidy CSV here instead of stdout");
    bench->add_option("--json", bench_flags.out_json, "Also write a JSON report here");
    bench->add_flag("--no-fast", bench_flags.no_fast, "Disable the flat-top wbm fast path");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*estimate)
            return run_estimate(est_input, parse_format(est_format), est_flags, est_out, out);
        if (*simulate)
            return run_simulate(sim_model, sim_n, sim_seed, sim_out, parse_format(sim_format),
                                sim_header);
        if (*check) return run_check_window(chk_window, chk_b, chk_tol, chk_out, out);
        if (*ess)
            return run_ess(ess_input, parse_format(ess_format), ess_flags, ess_level, ess_out, out);
        if (*stop) {
            if (stop_model.empty() == stop_input.empty())
                throw ConfigError("stop: exactly one of --model and --input is required");
            stop_cfg.schedule = BatchSchedule::parse(stop_schedule);
            return run_stop(stop_model, stop_input, parse_format(stop_format), stop_seed, stop_cfg,
                            stop_estimator, stop_out, out);
        }
        if (*coverage)
            return run_coverage(cov_model, cov_n, cov_reps, cov_level, cov_seed, cov_flags,
                                resolve_threads(cov_threads), cov_out, out);
        if (*bench) return run_bench(bench_flags, out, err);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        err << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << json{{"error", {{"type", "io"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitNumeric;
    } catch (const NumericError& e) {
        err << json{{"error", {{"type", "numeric"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitNumeric;
    }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args, out, err);
}

}  // namespace covkit
