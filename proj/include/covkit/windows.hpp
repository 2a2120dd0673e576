#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "covkit/errors.hpp"

namespace covkit {

using Index = Eigen::Index;

enum class WindowKind {
    Bartlett,
    TukeyHanning,
    BartlettFlatTop,
    SimpleTruncation,
    Parzen,
    ScaledBartlett,
};

// A lag-window family w(k, b): even in k, w(0) = 1, |w| <= 1, and w(k) = 0
// for |k| >= b.  Parzen carries an integer exponent q; the scale-modified
// Bartlett window carries a slope eta (positive, != 1).
struct LagWindow {
    WindowKind kind = WindowKind::Bartlett;
    int q = 0;
    double eta = 0.0;

    static LagWindow bartlett() { return {WindowKind::Bartlett, 0, 0.0}; }
    static LagWindow tukey_hanning() { return {WindowKind::TukeyHanning, 0, 0.0}; }
    static LagWindow flat_top() { return {WindowKind::BartlettFlatTop, 0, 0.0}; }
    static LagWindow truncation() { return {WindowKind::SimpleTruncation, 0, 0.0}; }
    static LagWindow parzen(int q) { return {WindowKind::Parzen, q, 0.0}; }
    static LagWindow scaled_bartlett(double eta) { return {WindowKind::ScaledBartlett, 0, eta}; }

    // Accepts "bartlett", "tukey-hanning", "flat-top", "truncation",
    // "parzen:<q>", "scaled-bartlett:<eta>".  Throws ConfigError listing the
    // valid names otherwise.
    static LagWindow parse(std::string_view name);
    std::string name() const;

    void validate() const;

    // The flat-top window references the half lag b/2, so a truncation point
    // passed by a caller is rounded down to the nearest even integer >= 2.
    // Other families use b unchanged.
    Index adjust_truncation(Index b) const;
};

bool operator==(const LagWindow& a, const LagWindow& b);

// Window weight w(k, b).  Exactly zero outside the support and even in k.
double window_weight(const LagWindow& w, Index k, Index b);

// First and second backward differences of the window in k:
//   delta1 = w(k-1) - w(k)
//   delta2 = w(k-1) - 2 w(k) + w(k+1)
double delta1(const LagWindow& w, Index k, Index b);
double delta2(const LagWindow& w, Index k, Index b);

// Numerical check of the consistency conditions a window must satisfy for
// the weighted batch-means estimator built from it to be strongly
// consistent: sum_{k=1}^{b} k * delta2(k) must equal 1, and
// sum_{k=1}^{b} |delta2(k)| must vanish as b grows.  The decay condition
// involves an unknowable chain-dependent rate, so it is reported as a raw
// trend over a geometric grid of b values rather than verified as a limit.
struct ConditionReport {
    Index b_used = 0;
    double tol = 1e-9;
    double sum_k_delta2 = 0.0;
    double abs_sum_delta2 = 0.0;
    bool cond1_holds = false;
    std::vector<std::pair<Index, double>> abs_sum_trend;
    bool cond1_on_grid = false;  // cond1 at every grid point of the trend
    bool abs_sum_decays = false;
    // cond1 everywhere && abs_sum decays: the window passes both proxies.
    bool consistency_ok = false;
};

ConditionReport check_conditions(const LagWindow& w, Index b, double tol = 1e-9);

}  // namespace covkit
