#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "covkit/diagnostics.hpp"
#include "covkit/estimators.hpp"

namespace covkit {

// Experiment drivers behind the `bench` subcommand.  All of them derive the
// replication-r seed as seed + r, so results do not depend on thread count
// or scheduling.

struct MethodChoice {
    Method method = Method::BM;
    std::optional<LagWindow> window;
    bool fast = true;

    std::string label() const;
};

struct TimingCell {
    Index p = 0;
    Index n = 0;
    Index b = 0;
    MethodChoice choice;
    Index reps = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double se_ms = 0.0;
    double mean_mse = 0.0;
};

struct TimingConfig {
    std::vector<Index> ps{10};
    std::vector<Index> ns{100000};
    std::vector<MethodChoice> choices;
    BatchSchedule schedule = BatchSchedule::power(1.0 / 3.0);
    Index reps = 10;
    std::uint64_t seed = 1;
    double phi_offset = 1.0;  // stable-coefficient construction B/(m+offset)
    double phi_scale = 1.0;
};

// Per grid cell: one reference VAR(1) chain per replication (shared across
// methods), a discarded warm-up run, then wall time around the estimator
// kernel only.  mean_mse is against the model's closed-form truth.
std::vector<TimingCell> bench_time(const TimingConfig& config, std::ostream* progress = nullptr);

struct VarianceRatioConfig {
    ReferenceModel model;
    Index n = 100000;
    std::vector<MethodChoice> choices;
    BatchSchedule schedule = BatchSchedule::power(1.0 / 3.0);
    Index reps = 300;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct VarianceRatioCell {
    MethodChoice choice;
    double mean = 0.0;      // mean of the (0,0) estimate across reps
    double variance = 0.0;  // variance of the (0,0) estimate across reps
};

// All chosen estimators run on the same chain per replication (paired
// seeds); reports the across-replication mean and variance of the leading
// diagonal entry.
std::vector<VarianceRatioCell> bench_variance_ratio(const VarianceRatioConfig& config,
                                                    std::ostream* progress = nullptr);

struct MseRatioConfig {
    Index p = 10;
    Index n = 100000;
    std::vector<double> scales{0.2, 0.6};
    std::vector<LagWindow> windows{LagWindow::bartlett(), LagWindow::tukey_hanning(),
                                   LagWindow::flat_top()};
    BatchSchedule schedule = BatchSchedule::power(1.0 / 3.0);
    Index reps = 100;
    std::uint64_t seed = 1;
    double phi_offset = 0.1;
    int threads = 1;
};

struct MseRatioCell {
    double scale = 0.0;
    LagWindow window;
    double mean_mse_wbm = 0.0;
    double mean_mse_sv = 0.0;
    double ratio = 0.0;
};

// VAR(1) chains with coefficient scale * B/(m + offset); for each window,
// the mean MSE of the weighted-BM estimator over the mean MSE of the SV
// estimator against the closed-form truth.
std::vector<MseRatioCell> bench_mse_ratio(const MseRatioConfig& config,
                                          std::ostream* progress = nullptr);

std::string cpu_fingerprint();

}  // namespace covkit
