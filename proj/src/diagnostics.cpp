#include "covkit/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "covkit/streaming.hpp"

namespace covkit {

namespace {

double gamma_p_series(double a, double x) {
    // P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a (a+1) ... (a+n))
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_continued_fraction(double a, double x) {
    // Q(a,x) via the Lentz continued fraction
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw ConfigError("regularized_gamma_p requires a > 0");
    if (x < 0.0) throw ConfigError("regularized_gamma_p requires x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double chi2_quantile(int df, double prob) {
    if (df < 1) throw ConfigError("chi2_quantile requires df >= 1");
    if (!(prob > 0.0 && prob < 1.0)) throw ConfigError("chi2_quantile requires 0 < prob < 1");
    const double a = 0.5 * df;
    auto cdf = [a](double q) { return regularized_gamma_p(a, 0.5 * q); };

    double lo = 0.0;
    double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
    while (cdf(hi) < prob) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e308) throw NumericError("chi2_quantile: bracket expansion failed");
    }
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < prob)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

PsdProjection psd_project(const Eigen::Ref<const Eigen::MatrixXd>& symmetric) {
    if (symmetric.rows() != symmetric.cols())
        throw ConfigError("psd_project: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric);
    if (es.info() != Eigen::Success) throw NumericError("psd_project: eigendecomposition failed");
    const Eigen::VectorXd lambda = es.eigenvalues();
    const double eps = 1e-10 * std::max(lambda.maxCoeff(), 1.0);

    PsdProjection result;
    result.min_eigenvalue_before = lambda.minCoeff();
    if (result.min_eigenvalue_before >= eps) {
        result.matrix = symmetric;
        return result;
    }
    const Eigen::VectorXd clamped = lambda.cwiseMax(eps);
    Eigen::MatrixXd rebuilt =
        es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    result.matrix = 0.5 * (rebuilt + rebuilt.transpose()).eval();
    result.projected = true;
    return result;
}

namespace {

// log det of a symmetric positive definite matrix; nullopt when not PD
std::optional<double> logdet_spd(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    if ((diag.array() <= 0.0).any()) return std::nullopt;
    return 2.0 * diag.array().log().sum();
}

}  // namespace

Ess ess_from_moments(Index n, const Eigen::Ref<const Eigen::MatrixXd>& lambda,
                     const Eigen::Ref<const Eigen::MatrixXd>& sigma_hat, bool was_projected) {
    const Index p = sigma_hat.rows();
    if (p > n) throw ConfigError("multivariate ESS requires p <= n");
    const auto logdet_sigma = logdet_spd(sigma_hat);
    if (!logdet_sigma)
        throw NumericError("multivariate ESS: covariance estimate not positive definite");
    Ess result;
    result.psd_projected = was_projected;
    const auto logdet_lambda = logdet_spd(lambda);
    if (!logdet_lambda) {
        result.value = 0.0;  // degenerate sample covariance
        return result;
    }
    result.value =
        static_cast<double>(n) * std::exp((*logdet_lambda - *logdet_sigma) / static_cast<double>(p));
    return result;
}

Ess multivariate_ess(const Eigen::Ref<const Eigen::MatrixXd>& chain, const CovEstimate& cov) {
    const PsdProjection proj = psd_project(cov.matrix);
    return ess_from_moments(chain.rows(), autocovariance(chain, 0), proj.matrix, proj.projected);
}

RegionSpec make_region(double level, Eigen::VectorXd center, const CovEstimate& cov, Index n) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("region level must be in (0, 1)");
    if (n < 1) throw ConfigError("region requires n >= 1");
    if (center.size() != cov.matrix.rows())
        throw ConfigError("region center dimension does not match covariance");
    PsdProjection proj = psd_project(cov.matrix);
    RegionSpec region;
    region.level = level;
    region.center = std::move(center);
    region.cov = std::move(proj.matrix);
    region.n = n;
    region.psd_projected = proj.projected;
    return region;
}

double region_volume(const RegionSpec& region) {
    const Index p = region.cov.rows();
    const auto logdet = logdet_spd(region.cov);
    if (!logdet) throw NumericError("region_volume: covariance not positive definite");
    const double q = chi2_quantile(static_cast<int>(p), region.level);
    const double hp = 0.5 * static_cast<double>(p);
    // unit-ball volume pi^(p/2) / Gamma(p/2 + 1), axes scaled by sqrt(q/n)
    const double log_volume = hp * std::log(M_PI) - std::lgamma(hp + 1.0) +
                              hp * std::log(q / static_cast<double>(region.n)) + 0.5 * *logdet;
    return std::exp(log_volume);
}

bool region_contains(const RegionSpec& region, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != region.center.size())
        throw ConfigError("region_contains: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(region.cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("region_contains: covariance not positive definite");
    const Eigen::VectorXd diff = region.center - theta;
    const double stat = static_cast<double>(region.n) * diff.dot(llt.solve(diff));
    return stat <= chi2_quantile(static_cast<int>(region.cov.rows()), region.level);
}

void StoppingConfig::validate() const {
    if (!(ess_threshold > 0.0)) throw ConfigError("stopping: ess_threshold must be > 0");
    if (check_interval < 1) throw ConfigError("stopping: check_interval must be >= 1");
    if (schedule.policy != BatchSchedule::Policy::Doubling)
        throw ConfigError("stopping: schedule must be a doubling rule (streaming ledger)");
    if (min_n < 1) throw ConfigError("stopping: min_n must be >= 1");
    const Index initial_b = doubling_batch_size(min_n, schedule.nu);
    if (min_n < 4 * initial_b)
        throw ConfigError("stopping: min_n must be at least 4x the initial batch size (" +
                          std::to_string(4 * initial_b) + ")");
    if (max_n != 0 && max_n < min_n) throw ConfigError("stopping: max_n must be >= min_n");
}

StoppingResult sequential_stop(const std::function<Eigen::VectorXd()>& next,
                               const StoppingConfig& config) {
    config.validate();
    StoppingResult result;
    std::optional<StreamingCov> stream;
    std::optional<WelfordCov> lambda;
    Index n = 0;
    while (true) {
        Eigen::VectorXd sample = next();
        if (!stream) {
            stream.emplace(sample.size(), config.schedule.nu);
            lambda.emplace(sample.size());
        }
        stream->push(sample);
        lambda->push(sample);
        ++n;

        const bool at_check = n >= config.min_n && (n - config.min_n) % config.check_interval == 0;
        if (at_check) {
            try {
                const CovEstimate est = config.estimator == StoppingEstimator::BM
                                            ? stream->estimate_bm()
                                            : stream->estimate_flat_top();
                const PsdProjection proj = psd_project(est.matrix);
                const Ess ess =
                    ess_from_moments(n, lambda->covariance_n(), proj.matrix, proj.projected);
                result.psd_projected_any |= ess.psd_projected;
                result.ess_trace.emplace_back(n, ess.value);
                if (ess.value >= config.ess_threshold) {
                    result.stopped_at = n;
                    result.final_ess = ess.value;
                    result.reached_threshold = true;
                    return result;
                }
            } catch (const NumericError& e) {
                const std::string what = e.what();
                if (what.find("closed batches") == std::string::npos)
                    throw NumericError("sequential_stop at n = " + std::to_string(n) + ": " + what);
                // ledger not ready yet; keep sampling
            }
        }
        if (config.max_n != 0 && n >= config.max_n) {
            result.stopped_at = n;
            result.final_ess = result.ess_trace.empty() ? 0.0 : result.ess_trace.back().second;
            return result;
        }
    }
}

CoverageResult coverage_experiment(const ReferenceModel& model, Index n,
                                   const EstimatorSpec& spec, double level, Index reps,
                                   std::uint64_t seed, int threads) {
    if (reps < 10) throw ConfigError("coverage_experiment requires reps >= 10");
    if (threads < 1) threads = 1;

    std::vector<unsigned char> hit(static_cast<size_t>(reps), 0);
    std::vector<unsigned char> projected(static_cast<size_t>(reps), 0);
    Index b_used = 0;

    auto run_rep = [&](Index r) {
        const std::uint64_t rep_seed = seed + static_cast<std::uint64_t>(r);
        Eigen::MatrixXd chain;
        if (std::holds_alternative<Ar1Model>(model)) {
            Ar1Model m = std::get<Ar1Model>(model);
            m.seed = rep_seed;
            chain = ar1_generate(m, n);
        } else {
            Var1Model m = std::get<Var1Model>(model);
            m.seed = rep_seed;
            chain = var1_generate(m, n);
        }
        const CovEstimate est = run_estimator(chain, spec);
        const RegionSpec region =
            make_region(level, chain.colwise().mean().transpose(), est, chain.rows());
        hit[static_cast<size_t>(r)] =
            region_contains(region, Eigen::VectorXd::Zero(chain.cols())) ? 1 : 0;
        projected[static_cast<size_t>(r)] = region.psd_projected ? 1 : 0;
        if (r == 0) b_used = est.b_used;
    };

    if (threads == 1) {
        for (Index r = 0; r < reps; ++r) run_rep(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<Index> counter{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (Index r = counter.fetch_add(1); r < reps; r = counter.fetch_add(1)) run_rep(r);
            });
        for (auto& th : pool) th.join();
    }

    CoverageResult result;
    result.reps = reps;
    Index hits = 0;
    for (auto h : hit) hits += h;
    for (auto p : projected) result.psd_projected_count += p;
    result.coverage = static_cast<double>(hits) / static_cast<double>(reps);
    result.mc_se =
        std::sqrt(result.coverage * (1.0 - result.coverage) / static_cast<double>(reps));
    result.b_used = b_used;
    return result;
}

}  // namespace covkit
