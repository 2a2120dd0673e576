#pragma once

#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "covkit/chains.hpp"
#include "covkit/estimators.hpp"

namespace covkit {

// Regularized lower incomplete gamma P(a, x); series for x < a + 1,
// continued fraction otherwise.
double regularized_gamma_p(double a, double x);

// Quantile of the chi-square distribution with df degrees of freedom via
// bracketed bisection of the regularized incomplete gamma; absolute
// tolerance 1e-10.
double chi2_quantile(int df, double prob);

// Clamp eigenvalues below eps = 1e-10 * max(lambda_max, 1) up to eps.
// An input that is already acceptable is returned unchanged.
struct PsdProjection {
    Eigen::MatrixXd matrix;
    bool projected = false;
    double min_eigenvalue_before = 0.0;
};
PsdProjection psd_project(const Eigen::Ref<const Eigen::MatrixXd>& symmetric);

// Multivariate effective sample size n * (det Lambda / det Sigma)^(1/p),
// with Lambda the lag-0 sample covariance (1/n normalization).  The
// estimate is PSD-projected before the determinant; a degenerate Lambda
// yields 0.
struct Ess {
    double value = 0.0;
    bool psd_projected = false;
};
Ess multivariate_ess(const Eigen::Ref<const Eigen::MatrixXd>& chain, const CovEstimate& cov);
Ess ess_from_moments(Index n, const Eigen::Ref<const Eigen::MatrixXd>& lambda,
                     const Eigen::Ref<const Eigen::MatrixXd>& sigma_hat, bool was_projected);

// Confidence ellipsoid { theta : n (center - theta)^T Sigma^{-1} (center -
// theta) <= chi2_{p, level} }.  The covariance is PSD-projected once at
// construction.
struct RegionSpec {
    double level = 0.9;
    Eigen::VectorXd center;
    Eigen::MatrixXd cov;
    Index n = 0;
    bool psd_projected = false;
};
RegionSpec make_region(double level, Eigen::VectorXd center, const CovEstimate& cov, Index n);
double region_volume(const RegionSpec& region);
bool region_contains(const RegionSpec& region, const Eigen::Ref<const Eigen::VectorXd>& theta);

enum class StoppingEstimator { BM, WbmFlatTop };

struct StoppingConfig {
    double ess_threshold = 0.0;
    Index min_n = 0;
    Index check_interval = 1;
    BatchSchedule schedule = BatchSchedule::doubling(1.0 / 3.0);
    StoppingEstimator estimator = StoppingEstimator::WbmFlatTop;
    Index max_n = 0;  // 0 = unbounded

    void validate() const;
};

struct StoppingResult {
    Index stopped_at = 0;
    double final_ess = 0.0;
    bool reached_threshold = false;
    bool psd_projected_any = false;
    std::vector<std::pair<Index, double>> ess_trace;
};

// Consume samples from `next` until the multivariate ESS crosses the
// threshold; checks happen every check_interval pushes once n >= min_n.
// A not-yet-ready estimator (too few closed batches) skips the check; any
// other estimator failure is rethrown tagged with the n it occurred at.
StoppingResult sequential_stop(const std::function<Eigen::VectorXd()>& next,
                               const StoppingConfig& config);

using ReferenceModel = std::variant<Ar1Model, Var1Model>;

struct CoverageResult {
    double coverage = 0.0;
    double mc_se = 0.0;
    Index reps = 0;
    Index psd_projected_count = 0;
    Index b_used = 0;
};

// Fraction of replications whose confidence region contains the true mean
// (zero for these reference chains).  Replication r runs on seed + r, so
// results are independent of the thread count.
CoverageResult coverage_experiment(const ReferenceModel& model, Index n,
                                   const EstimatorSpec& spec, double level, Index reps,
                                   std::uint64_t seed, int threads = 1);

}  // namespace covkit
