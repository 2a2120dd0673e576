#include "covkit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

namespace covkit {

std::string MethodChoice::label() const {
    std::string s = method_name(method);
    if (window) s += "/" + window->name();
    return s;
}

namespace {

CovEstimate run_choice(const Eigen::Ref<const Eigen::MatrixXd>& chain, const MethodChoice& choice,
                       Index b) {
    switch (choice.method) {
        case Method::BM:
            return bm(chain, b);
        case Method::OBM:
            return obm(chain, b);
        case Method::SV:
            if (!choice.window) throw ConfigError("sv requires a window");
            return sv(chain, *choice.window, b);
        case Method::WBM:
            if (!choice.window) throw ConfigError("wbm requires a window");
            if (choice.fast && choice.window->kind == WindowKind::BartlettFlatTop && b >= 4)
                return wbm_flat_top_fast(chain, b);
            return wbm(chain, *choice.window, b);
    }
    throw ConfigError("unknown method");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                     static_cast<double>(v.size()));
}

Eigen::MatrixXd generate(const ReferenceModel& model, Index n, std::uint64_t rep_seed) {
    if (std::holds_alternative<Ar1Model>(model)) {
        Ar1Model m = std::get<Ar1Model>(model);
        m.seed = rep_seed;
        return ar1_generate(m, n);
    }
    Var1Model m = std::get<Var1Model>(model);
    m.seed = rep_seed;
    return var1_generate(m, n);
}

template <typename Fn>
void parallel_reps(Index reps, int threads, Fn&& body) {
    if (threads <= 1) {
        for (Index r = 0; r < reps; ++r) body(r);
        return;
    }
    std::atomic<Index> counter{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (Index r = counter.fetch_add(1); r < reps; r = counter.fetch_add(1)) body(r);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

std::vector<TimingCell> bench_time(const TimingConfig& config, std::ostream* progress) {
    if (config.reps < 1) throw ConfigError("bench_time requires reps >= 1");
    if (config.choices.empty()) throw ConfigError("bench_time requires at least one method");
    std::vector<TimingCell> cells;
    for (const Index p : config.ps) {
        const Eigen::MatrixXd phi = make_phi(p, config.seed, config.phi_offset, config.phi_scale);
        const Eigen::MatrixXd truth = var1_true_sigma(phi);
        for (const Index n : config.ns) {
            const Index b = batch_size(n, config.schedule);
            std::vector<std::vector<double>> times(config.choices.size());
            std::vector<std::vector<double>> mses(config.choices.size());
            for (Index rep = 0; rep < config.reps; ++rep) {
                const Eigen::MatrixXd chain =
                    generate(Var1Model{phi, 0}, n, config.seed + 1 + static_cast<std::uint64_t>(rep));
                for (size_t c = 0; c < config.choices.size(); ++c) {
                    if (rep == 0) run_choice(chain, config.choices[c], b);  // warm-up, discarded
                    const CovEstimate est = run_choice(chain, config.choices[c], b);
                    times[c].push_back(est.wall_time_ms);
                    mses[c].push_back(mse(est.matrix, truth));
                }
                if (progress)
                    *progress << "bench: p=" << p << " n=" << n << " rep " << (rep + 1) << "/"
                              << config.reps << "\n";
            }
            for (size_t c = 0; c < config.choices.size(); ++c) {
                TimingCell cell;
                cell.p = p;
                cell.n = n;
                cell.b = b;
                cell.choice = config.choices[c];
                cell.reps = config.reps;
                cell.mean_ms = mean_of(times[c]);
                cell.median_ms = median(times[c]);
                cell.se_ms = se_of(times[c]);
                cell.mean_mse = mean_of(mses[c]);
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::vector<VarianceRatioCell> bench_variance_ratio(const VarianceRatioConfig& config,
                                                    std::ostream* progress) {
    if (config.reps < 2) throw ConfigError("bench_variance_ratio requires reps >= 2");
    if (config.choices.empty()) throw ConfigError("bench_variance_ratio requires methods");
    const Index b = batch_size(config.n, config.schedule);
    const size_t k = config.choices.size();
    std::vector<std::vector<double>> values(k,
                                            std::vector<double>(static_cast<size_t>(config.reps)));
    std::atomic<Index> done{0};
    parallel_reps(config.reps, config.threads, [&](Index r) {
        const Eigen::MatrixXd chain =
            generate(config.model, config.n, config.seed + static_cast<std::uint64_t>(r));
        for (size_t c = 0; c < k; ++c) {
            const CovEstimate est = run_choice(chain, config.choices[c], b);
            values[c][static_cast<size_t>(r)] = est.matrix(0, 0);
        }
        if (progress) {
            const Index d = ++done;
            if (d % 50 == 0) *progress << "variance-ratio: rep " << d << "/" << config.reps << "\n";
        }
    });

    std::vector<VarianceRatioCell> cells;
    for (size_t c = 0; c < k; ++c) {
        VarianceRatioCell cell;
        cell.choice = config.choices[c];
        cell.mean = mean_of(values[c]);
        double ss = 0.0;
        for (double x : values[c]) ss += (x - cell.mean) * (x - cell.mean);
        cell.variance = ss / (static_cast<double>(config.reps) - 1.0);
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::vector<MseRatioCell> bench_mse_ratio(const MseRatioConfig& config, std::ostream* progress) {
    if (config.reps < 2) throw ConfigError("bench_mse_ratio requires reps >= 2");
    const Index b = batch_size(config.n, config.schedule);
    std::vector<MseRatioCell> cells;
    const Eigen::MatrixXd base = make_phi(config.p, config.seed, config.phi_offset, 1.0);
    for (const double scale : config.scales) {
        const Eigen::MatrixXd phi = scale * base;
        const Eigen::MatrixXd truth = var1_true_sigma(phi);
        const size_t w = config.windows.size();
        std::vector<std::vector<double>> mse_wbm(w,
                                                 std::vector<double>(static_cast<size_t>(config.reps)));
        std::vector<std::vector<double>> mse_sv(w,
                                                std::vector<double>(static_cast<size_t>(config.reps)));
        std::atomic<Index> done{0};
        parallel_reps(config.reps, config.threads, [&](Index r) {
            const Eigen::MatrixXd chain =
                generate(Var1Model{phi, 0}, config.n, config.seed + 1 + static_cast<std::uint64_t>(r));
            for (size_t i = 0; i < w; ++i) {
                const LagWindow& window = config.windows[i];
                MethodChoice wbm_choice{Method::WBM, window, true};
                MethodChoice sv_choice{Method::SV, window, true};
                mse_wbm[i][static_cast<size_t>(r)] =
                    mse(run_choice(chain, wbm_choice, b).matrix, truth);
                mse_sv[i][static_cast<size_t>(r)] =
                    mse(run_choice(chain, sv_choice, b).matrix, truth);
            }
            if (progress) {
                const Index d = ++done;
                if (d % 10 == 0)
                    *progress << "mse-ratio: scale " << scale << " rep " << d << "/" << config.reps
                              << "\n";
            }
        });
        for (size_t i = 0; i < w; ++i) {
            MseRatioCell cell;
            cell.scale = scale;
            cell.window = config.windows[i];
            cell.mean_mse_wbm = mean_of(mse_wbm[i]);
            cell.mean_mse_sv = mean_of(mse_sv[i]);
            cell.ratio = cell.mean_mse_wbm / cell.mean_mse_sv;
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string cpu_fingerprint() {
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    std::string model = "unknown cpu";
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) model = line.substr(colon + 2);
            break;
        }
    }
    return model + " / " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

}  // namespace covkit
