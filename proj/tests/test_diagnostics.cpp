#include <doctest.h>

#include <cmath>

#include "covkit/chains.hpp"
#include "covkit/diagnostics.hpp"
#include "covkit/rng.hpp"
#include "oracles.hpp"

using namespace covkit;

namespace {

CovEstimate as_estimate(const Eigen::MatrixXd& m) {
    CovEstimate est;
    est.matrix = m;
    est.b_used = 2;
    est.n_used = 100;
    return est;
}

}  // namespace

TEST_CASE("regularized incomplete gamma against closed forms") {
    // P(1, x) = 1 - exp(-x)
    for (double x : {0.1, 0.5, 1.0, 3.0, 10.0})
        CHECK(regularized_gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-13));
    CHECK(regularized_gamma_p(2.5, 0.0) == 0.0);
    CHECK(regularized_gamma_p(0.5, 200.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(regularized_gamma_p(0.0, 1.0), ConfigError);
}

TEST_CASE("chi-square quantiles match published values") {
    CHECK(chi2_quantile(1, 0.95) == doctest::Approx(3.841458820694124).epsilon(1e-9));
    CHECK(chi2_quantile(2, 0.50) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
    CHECK(chi2_quantile(10, 0.90) == doctest::Approx(15.987179172105265).epsilon(1e-9));
    CHECK(chi2_quantile(1, 0.90) == doctest::Approx(2.705543454095404).epsilon(1e-9));
    CHECK(chi2_quantile(5, 0.99) == doctest::Approx(15.08627246938899).epsilon(1e-9));
    CHECK(chi2_quantile(20, 0.975) == doctest::Approx(34.16960690283833).epsilon(1e-9));
    // df = 2 closed form across a grid
    for (double p = 0.05; p < 1.0; p += 0.05)
        CHECK(chi2_quantile(2, p) == doctest::Approx(-2.0 * std::log(1.0 - p)).epsilon(1e-9));
    CHECK_THROWS_AS(chi2_quantile(0, 0.5), ConfigError);
    CHECK_THROWS_AS(chi2_quantile(1, 1.0), ConfigError);
}

TEST_CASE("chi-square quantiles are monotone in probability and df") {
    for (int df : {1, 2, 5, 10, 30}) {
        double prev = 0.0;
        for (double p = 0.1; p < 1.0; p += 0.1) {
            const double q = chi2_quantile(df, p);
            CHECK(q > prev);
            prev = q;
        }
    }
    for (double p : {0.1, 0.5, 0.9}) {
        double prev = 0.0;
        for (int df = 1; df <= 20; ++df) {
            const double q = chi2_quantile(df, p);
            CHECK(q > prev);
            prev = q;
        }
    }
}

TEST_CASE("psd projection clamps only when needed and is idempotent") {
    const Eigen::MatrixXd pd = Eigen::Vector2d(1.0, 0.25).asDiagonal();
    const PsdProjection untouched = psd_project(pd);
    CHECK_FALSE(untouched.projected);
    CHECK(untouched.matrix == pd);

    Eigen::MatrixXd indefinite = Eigen::Vector2d(1.0, -0.5).asDiagonal();
    const PsdProjection fixed = psd_project(indefinite);
    CHECK(fixed.projected);
    CHECK(fixed.min_eigenvalue_before == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(fixed.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fixed.matrix(1, 1) == doctest::Approx(1e-10).epsilon(1e-6));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fixed.matrix, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= 0.999e-10);

    const PsdProjection again = psd_project(fixed.matrix);
    CHECK((again.matrix - fixed.matrix).norm() < 1e-15);
}

TEST_CASE("multivariate ess determinant ratio") {
    CHECK(ess_from_moments(1000, Eigen::MatrixXd::Constant(1, 1, 1.0),
                           Eigen::MatrixXd::Constant(1, 1, 4.0), false)
              .value == doctest::Approx(250.0).epsilon(1e-12));

    Rng rng(3);
    Eigen::MatrixXd chain(400, 3);
    for (Index t = 0; t < chain.rows(); ++t)
        for (Index j = 0; j < 3; ++j) chain(t, j) = rng.normal();
    const Eigen::MatrixXd lambda = autocovariance(chain, 0);
    const Ess at_lambda = multivariate_ess(chain, as_estimate(lambda));
    CHECK(at_lambda.value == doctest::Approx(400.0).epsilon(1e-10));
    CHECK_FALSE(at_lambda.psd_projected);

    // a negative direction gets projected before inversion
    Eigen::MatrixXd indefinite = lambda;
    indefinite(2, 2) = -1.0;
    CHECK(multivariate_ess(chain, as_estimate(indefinite)).psd_projected);
}

TEST_CASE("ess is invariant under linear reparametrization") {
    Rng rng(5);
    Eigen::MatrixXd chain = ar1_generate({0.5, 17}, 4000);
    Eigen::MatrixXd wide(chain.rows(), 2);
    for (Index t = 0; t < chain.rows(); ++t)
        wide.row(t) << chain(t, 0), 0.4 * chain(t, 0) + rng.normal();

    Eigen::MatrixXd a(2, 2);
    a << 2.0, 0.3, -0.5, 1.2;
    const Eigen::MatrixXd mapped = wide * a.transpose();

    const CovEstimate est = wbm_flat_top_fast(wide, 16);
    CovEstimate est_mapped;
    est_mapped.matrix = a * est.matrix * a.transpose();
    est_mapped.matrix = 0.5 * (est_mapped.matrix + est_mapped.matrix.transpose()).eval();

    const double e1 = multivariate_ess(wide, est).value;
    const double e2 = multivariate_ess(mapped, est_mapped).value;
    CHECK(std::abs(e1 - e2) / e1 < 1e-8);
}

TEST_CASE("flat-top ess stays near n for iid chains") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Eigen::MatrixXd chain = ar1_generate({0.0, 9000 + seed}, 100000);
        const Ess ess = multivariate_ess(chain, wbm_flat_top_fast(chain, 46));
        CHECK(ess.value / 100000.0 > 0.8);
        CHECK(ess.value / 100000.0 < 1.2);
    }
}

TEST_CASE("region volume follows the closed form and its scalings") {
    const RegionSpec unit = make_region(0.95, Eigen::VectorXd::Zero(1),
                                        as_estimate(Eigen::MatrixXd::Identity(1, 1)), 100);
    CHECK(region_volume(unit) == doctest::Approx(0.39199279690801075).epsilon(1e-9));

    Rng rng(7);
    Eigen::MatrixXd m(3, 3);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) m(i, j) = rng.normal();
    const Eigen::MatrixXd spd = m * m.transpose() + Eigen::MatrixXd::Identity(3, 3);

    const double v1 = region_volume(make_region(0.9, Eigen::VectorXd::Zero(3), as_estimate(spd), 500));
    const double v_scaled =
        region_volume(make_region(0.9, Eigen::VectorXd::Zero(3), as_estimate(3.0 * spd), 500));
    CHECK(v_scaled / v1 == doctest::Approx(std::pow(3.0, 1.5)).epsilon(1e-10));

    const double v_more_n =
        region_volume(make_region(0.9, Eigen::VectorXd::Zero(3), as_estimate(spd), 1000));
    CHECK(v_more_n / v1 == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-10));
}

TEST_CASE("region membership") {
    const Eigen::VectorXd center = Eigen::VectorXd::Zero(1);
    const RegionSpec region =
        make_region(0.95, center, as_estimate(Eigen::MatrixXd::Identity(1, 1)), 100);
    CHECK(region_contains(region, center));
    CHECK_FALSE(region_contains(region, Eigen::VectorXd::Constant(1, 0.5)));  // 25 > 3.84

    const double radius = std::sqrt(chi2_quantile(1, 0.95) / 100.0);
    CHECK(region_contains(region, Eigen::VectorXd::Constant(1, radius * (1.0 - 1e-9))));
    CHECK_FALSE(region_contains(region, Eigen::VectorXd::Constant(1, radius * (1.0 + 1e-9))));

    // membership is monotone in the level
    const RegionSpec wider =
        make_region(0.99, center, as_estimate(Eigen::MatrixXd::Identity(1, 1)), 100);
    for (double t = 0.0; t < 0.3; t += 0.05) {
        const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, t);
        if (region_contains(region, theta)) CHECK(region_contains(wider, theta));
    }
}

TEST_CASE("stopping config validation") {
    StoppingConfig config;
    config.ess_threshold = 1000;
    config.min_n = 1000;
    config.check_interval = 100;
    CHECK_NOTHROW(config.validate());

    StoppingConfig bad = config;
    bad.ess_threshold = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.schedule = BatchSchedule::power(0.5);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.min_n = 5;  // smaller than 4x the initial batch size
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.check_interval = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.max_n = 10;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sequential stopping on iid input stops near the threshold") {
    StoppingConfig config;
    config.ess_threshold = 5000;
    config.min_n = 1000;
    config.check_interval = 100;
    config.estimator = StoppingEstimator::BM;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(40000 + seed);
        const StoppingResult result =
            sequential_stop([&] { return Eigen::VectorXd::Constant(1, rng.normal()).eval(); },
                            config);
        CHECK(result.reached_threshold);
        CHECK(result.stopped_at >= 3500);
        CHECK(result.stopped_at <= 7500);
        CHECK(result.final_ess >= config.ess_threshold);
        CHECK(!result.ess_trace.empty());
        CHECK(result.ess_trace.back().first == result.stopped_at);
    }

    // the flat-top default is noisier, so taking the minimum over repeated
    // checks widens the stopping distribution; its mean still sits at the
    // threshold
    config.estimator = StoppingEstimator::WbmFlatTop;
    double mean_stop = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(40000 + seed);
        const StoppingResult result =
            sequential_stop([&] { return Eigen::VectorXd::Constant(1, rng.normal()).eval(); },
                            config);
        CHECK(result.stopped_at >= 2000);
        CHECK(result.stopped_at <= 9000);
        mean_stop += static_cast<double>(result.stopped_at);
    }
    mean_stop /= 50;
    CHECK(mean_stop >= 3500);
    CHECK(mean_stop <= 7500);
}

TEST_CASE("correlated chains stop later than iid chains on paired seeds") {
    StoppingConfig config;
    config.ess_threshold = 5000;
    config.min_n = 1000;
    config.check_interval = 200;
    int later = 0;
    const int seeds = 50;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        Rng rng_iid(70000 + seed);
        const StoppingResult iid = sequential_stop(
            [&] { return Eigen::VectorXd::Constant(1, rng_iid.normal()).eval(); }, config);

        Rng rng_ar(70000 + seed);
        double x = rng_ar.normal() / std::sqrt(1.0 - 0.81);
        const StoppingResult ar = sequential_stop(
            [&] {
                x = 0.9 * x + rng_ar.normal();
                return Eigen::VectorXd::Constant(1, x).eval();
            },
            config);
        if (ar.stopped_at > iid.stopped_at) ++later;
    }
    CHECK(later >= static_cast<int>(0.95 * seeds));
}

TEST_CASE("a threshold at or below min_n stops at the first check") {
    StoppingConfig config;
    config.ess_threshold = 500;
    config.min_n = 1000;
    config.check_interval = 250;
    Rng rng(4);
    const StoppingResult result = sequential_stop(
        [&] { return Eigen::VectorXd::Constant(1, rng.normal()).eval(); }, config);
    CHECK(result.stopped_at == 1000);
}

TEST_CASE("max_n caps a stop that would never trigger") {
    StoppingConfig config;
    config.ess_threshold = 1e12;
    config.min_n = 1000;
    config.check_interval = 500;
    config.max_n = 3000;
    Rng rng(8);
    const StoppingResult result = sequential_stop(
        [&] { return Eigen::VectorXd::Constant(1, rng.normal()).eval(); }, config);
    CHECK_FALSE(result.reached_threshold);
    CHECK(result.stopped_at == 3000);
}

TEST_CASE("coverage is near nominal for iid chains") {
    EstimatorSpec spec;
    spec.method = Method::BM;
    spec.window.reset();
    spec.schedule = BatchSchedule::power(0.5);
    const CoverageResult result =
        coverage_experiment(Ar1Model{0.0, 0}, 10000, spec, 0.9, 500, 1234);
    CHECK(result.coverage >= 0.86);
    CHECK(result.coverage <= 0.93);
    CHECK(result.mc_se == doctest::Approx(std::sqrt(result.coverage * (1 - result.coverage) / 500))
                              .epsilon(1e-12));
}

TEST_CASE("flat-top coverage beats bm coverage on a slowly mixing chain") {
    EstimatorSpec bm_spec;
    bm_spec.method = Method::BM;
    bm_spec.window.reset();
    EstimatorSpec ft_spec;  // defaults to flat-top wbm

    const Ar1Model model{0.9, 0};
    const CoverageResult bm_cov = coverage_experiment(model, 10000, bm_spec, 0.9, 300, 777);
    const CoverageResult ft_cov = coverage_experiment(model, 10000, ft_spec, 0.9, 300, 777);
    CHECK(ft_cov.coverage > bm_cov.coverage);
}

TEST_CASE("coverage is monotone in the level and deterministic across threads") {
    EstimatorSpec spec;
    spec.method = Method::BM;
    spec.window.reset();
    const Ar1Model model{0.5, 0};
    const CoverageResult lo = coverage_experiment(model, 2000, spec, 0.90, 200, 55);
    const CoverageResult hi = coverage_experiment(model, 2000, spec, 0.99, 200, 55);
    CHECK(hi.coverage >= lo.coverage);

    const CoverageResult serial = coverage_experiment(model, 2000, spec, 0.90, 200, 55, 1);
    const CoverageResult parallel = coverage_experiment(model, 2000, spec, 0.90, 200, 55, 4);
    CHECK(serial.coverage == parallel.coverage);

    CHECK_THROWS_AS(coverage_experiment(model, 2000, spec, 0.9, 5, 55), ConfigError);
}
