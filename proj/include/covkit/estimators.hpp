#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "covkit/errors.hpp"
#include "covkit/windows.hpp"

namespace covkit {

enum class Method { BM, OBM, SV, WBM };

std::string method_name(Method m);
Method parse_method(std::string_view name);

// A covariance estimate together with how it was produced.  The matrix is
// exactly symmetric; min_eigenvalue is recorded because flat-top estimators
// can be indefinite and downstream users must decide how to handle that.
template <typename Scalar>
struct CovEstimateT {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix matrix;
    Method method = Method::BM;
    std::optional<LagWindow> window;
    Index b_used = 0;
    Index n_used = 0;
    Scalar min_eigenvalue = Scalar(0);
    double wall_time_ms = 0.0;
};

using CovEstimate = CovEstimateT<double>;

// Truncation / batch-size policy as a function of the chain length.
struct BatchSchedule {
    enum class Policy { PowerRule, Doubling, Fixed };

    Policy policy = Policy::PowerRule;
    double nu = 1.0 / 3.0;
    Index fixed_b = 0;

    static BatchSchedule power(double nu);
    static BatchSchedule doubling(double nu);
    static BatchSchedule fixed(Index b);

    // "pow:<nu>", "doubling:<nu>" or "fixed:<b>"
    static BatchSchedule parse(std::string_view s);
    std::string name() const;
};

// PowerRule: floor(n^nu).  Doubling: smallest power of two >= n^nu.
// Fixed: b as given.  All clamped to [2, n/2].
Index batch_size(Index n, const BatchSchedule& schedule);

// Smallest power of two >= n^nu (unclamped); the doubling schedule used by
// the streaming estimator.
Index doubling_batch_size(Index n, double nu);

namespace detail {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class KernelTimer {
public:
    KernelTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        const auto dt = std::chrono::steady_clock::now() - start_;
        return std::chrono::duration<double, std::milli>(dt).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

template <typename Scalar>
Scalar min_eigenvalue(const MatX<Scalar>& m) {
    if (m.rows() == 1) return m(0, 0);
    Eigen::SelfAdjointEigenSolver<MatX<Scalar>> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Exact bitwise symmetry: averages m with its transpose into fresh storage.
template <typename Scalar>
MatX<Scalar> symmetrized(const MatX<Scalar>& m) {
    MatX<Scalar> s = Scalar(0.5) * (m + m.transpose());
    return s;
}

// Means of the last a*len rows split into a contiguous batches of length
// len; rows before the first full batch are discarded.
template <typename Derived>
MatX<typename Derived::Scalar> batch_means(const Eigen::MatrixBase<Derived>& chain, Index len) {
    const Index n = chain.rows();
    const Index a = n / len;
    const Index offset = n - a * len;
    MatX<typename Derived::Scalar> means(a, chain.cols());
    for (Index l = 0; l < a; ++l)
        means.row(l) = chain.middleRows(offset + l * len, len).colwise().mean();
    return means;
}

// scale * sum_l (row_l - rowbar)(row_l - rowbar)^T, with rowbar the column
// mean of the row set; evaluated as one centered Gram product.
template <typename Scalar>
MatX<Scalar> scaled_centered_gram(const MatX<Scalar>& rows, Scalar scale) {
    MatX<Scalar> centered = rows.rowwise() - rows.colwise().mean();
    MatX<Scalar> gram = centered.transpose() * centered;
    gram *= scale;
    return symmetrized(gram);
}

template <typename Scalar>
void finalize(CovEstimateT<Scalar>& est, const KernelTimer& timer) {
    est.wall_time_ms = timer.elapsed_ms();
    est.min_eigenvalue = min_eigenvalue(est.matrix);
}

inline void require_batch_range(Index n, Index b, const char* op) {
    if (n < 2) throw NumericError(std::string(op) + ": chain must have at least 2 rows");
    if (b < 2 || b > n / 2)
        throw NumericError(std::string(op) + ": batch size " + std::to_string(b) +
                           " outside [2, n/2] for n = " + std::to_string(n) +
                           " (need at least 2 batches)");
}

}  // namespace detail

// Lag-k sample autocovariance with the grand mean of the full chain and a
// 1/n normalization:  (1/n) sum_{t=1}^{n-k} (Y_t - Ybar)(Y_{t+k} - Ybar)^T.
template <typename Derived>
detail::MatX<typename Derived::Scalar> autocovariance(const Eigen::MatrixBase<Derived>& chain,
                                                      Index k) {
    using Scalar = typename Derived::Scalar;
    const Index n = chain.rows();
    if (k < 0 || k >= n)
        throw std::out_of_range("autocovariance: lag " + std::to_string(k) +
                                " outside [0, n-1] for n = " + std::to_string(n));
    detail::MatX<Scalar> centered = chain.rowwise() - chain.colwise().mean();
    detail::MatX<Scalar> gamma =
        centered.topRows(n - k).transpose() * centered.bottomRows(n - k) / Scalar(n);
    if (k == 0) return detail::symmetrized(gamma);
    return gamma;
}

// Batch-means estimator: a = floor(n/b) nonoverlapping batches over the
// most recent a*b rows, scaled by b/(a-1).
template <typename Derived>
CovEstimateT<typename Derived::Scalar> bm(const Eigen::MatrixBase<Derived>& chain, Index b) {
    using Scalar = typename Derived::Scalar;
    detail::require_batch_range(chain.rows(), b, "bm");
    const Index a = chain.rows() / b;

    detail::KernelTimer timer;
    detail::MatX<Scalar> means = detail::batch_means(chain, b);
    CovEstimateT<Scalar> est;
    est.matrix = detail::scaled_centered_gram(means, Scalar(b) / Scalar(a - 1));
    est.method = Method::BM;
    est.b_used = b;
    est.n_used = a * b;
    detail::finalize(est, timer);
    return est;
}

// Overlapping batch means: all n-b+1 sliding batches of length b, centered
// on the full-chain mean and scaled by n*b/((n-b)(n-b+1)).
template <typename Derived>
CovEstimateT<typename Derived::Scalar> obm(const Eigen::MatrixBase<Derived>& chain, Index b) {
    using Scalar = typename Derived::Scalar;
    using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
    const Index n = chain.rows();
    detail::require_batch_range(n, b, "obm");

    detail::KernelTimer timer;
    const Index m = n - b + 1;
    detail::MatX<Scalar> sliding(m, chain.cols());
    RowVec rolling = chain.topRows(b).colwise().sum();
    sliding.row(0) = rolling / Scalar(b);
    for (Index l = 1; l < m; ++l) {
        rolling += chain.row(l + b - 1) - chain.row(l - 1);
        sliding.row(l) = rolling / Scalar(b);
    }
    RowVec grand_mean = chain.colwise().mean();
    detail::MatX<Scalar> centered = sliding.rowwise() - grand_mean;
    const Scalar scale =
        Scalar(n) * Scalar(b) / (Scalar(n - b) * Scalar(n - b + 1));
    detail::MatX<Scalar> gram = centered.transpose() * centered;
    gram *= scale;

    CovEstimateT<Scalar> est;
    est.matrix = detail::symmetrized(gram);
    est.method = Method::OBM;
    est.b_used = b;
    est.n_used = n;
    detail::finalize(est, timer);
    return est;
}

// Spectral variance estimator: Gamma(0) + sum_{k=1}^{b} w(k)[Gamma(k) +
// Gamma(k)^T] with all autocovariances centered on the full-chain mean.
template <typename Derived>
CovEstimateT<typename Derived::Scalar> sv(const Eigen::MatrixBase<Derived>& chain,
                                          const LagWindow& window, Index b) {
    using Scalar = typename Derived::Scalar;
    const Index n = chain.rows();
    window.validate();
    b = window.adjust_truncation(b);
    detail::require_batch_range(n, b, "sv");

    detail::KernelTimer timer;
    detail::MatX<Scalar> centered = chain.rowwise() - chain.colwise().mean();
    detail::MatX<Scalar> acc = centered.transpose() * centered / Scalar(n);
    acc = detail::symmetrized(acc);
    for (Index k = 1; k <= b; ++k) {
        const double wk = window_weight(window, k, b);
        if (wk == 0.0) continue;
        detail::MatX<Scalar> gamma =
            centered.topRows(n - k).transpose() * centered.bottomRows(n - k) / Scalar(n);
        acc += Scalar(wk) * (gamma + gamma.transpose()).eval();
    }

    CovEstimateT<Scalar> est;
    est.matrix = detail::symmetrized(acc);
    est.method = Method::SV;
    est.window = window;
    est.b_used = b;
    est.n_used = n;
    detail::finalize(est, timer);
    return est;
}

// Flat-top SV expressed as the difference of two Bartlett SV estimators with
// truncation points b and b/2.
template <typename Derived>
CovEstimateT<typename Derived::Scalar> sv_flat_top_fast(const Eigen::MatrixBase<Derived>& chain,
                                                        Index b) {
    using Scalar = typename Derived::Scalar;
    b = LagWindow::flat_top().adjust_truncation(b);
    if (b < 4) throw NumericError("sv_flat_top_fast: requires even b >= 4");
    detail::require_batch_range(chain.rows(), b, "sv_flat_top_fast");

    detail::KernelTimer timer;
    CovEstimateT<Scalar> wide = sv(chain, LagWindow::bartlett(), b);
    CovEstimateT<Scalar> narrow = sv(chain, LagWindow::bartlett(), b / 2);

    CovEstimateT<Scalar> est;
    est.matrix = Scalar(2) * wide.matrix - narrow.matrix;
    est.method = Method::SV;
    est.window = LagWindow::flat_top();
    est.b_used = b;
    est.n_used = chain.rows();
    detail::finalize(est, timer);
    return est;
}

// Weighted batch-means estimator: for every lag k <= b with a nonzero
// second window difference, the covariance of the floor(n/k) nonoverlapping
// batch means at batch size k enters with weight k^2 * delta2(k) / (a_k - 1).
// Lags whose second difference vanishes (below 1e-15, absorbing rounding in
// piecewise-linear windows) are skipped without touching the chain.
template <typename Derived>
CovEstimateT<typename Derived::Scalar> wbm(const Eigen::MatrixBase<Derived>& chain,
                                           const LagWindow& window, Index b) {
    using Scalar = typename Derived::Scalar;
    const Index n = chain.rows();
    window.validate();
    b = window.adjust_truncation(b);
    detail::require_batch_range(n, b, "wbm");

    detail::KernelTimer timer;
    detail::MatX<Scalar> acc = detail::MatX<Scalar>::Zero(chain.cols(), chain.cols());
    for (Index k = 1; k <= b; ++k) {
        const double d2 = delta2(window, k, b);
        if (std::abs(d2) < 1e-15) continue;
        detail::MatX<Scalar> means = detail::batch_means(chain, k);
        const Index ak = means.rows();
        const Scalar scale = Scalar(k) * Scalar(k) * Scalar(d2) / Scalar(ak - 1);
        acc += detail::scaled_centered_gram(means, scale);
    }

    CovEstimateT<Scalar> est;
    est.matrix = detail::symmetrized(acc);
    est.method = Method::WBM;
    est.window = window;
    est.b_used = b;
    est.n_used = n;
    detail::finalize(est, timer);
    return est;
}

// Flat-top weighted BM via its two-term closed form 2*bm(b) - bm(b/2).
// The result can be indefinite; min_eigenvalue records by how much.
template <typename Derived>
CovEstimateT<typename Derived::Scalar> wbm_flat_top_fast(const Eigen::MatrixBase<Derived>& chain,
                                                         Index b) {
    using Scalar = typename Derived::Scalar;
    b = LagWindow::flat_top().adjust_truncation(b);
    if (b < 4) throw NumericError("wbm_flat_top_fast: requires even b >= 4");
    detail::require_batch_range(chain.rows(), b, "wbm_flat_top_fast");

    detail::KernelTimer timer;
    CovEstimateT<Scalar> wide = bm(chain, b);
    CovEstimateT<Scalar> narrow = bm(chain, b / 2);

    CovEstimateT<Scalar> est;
    est.matrix = Scalar(2) * wide.matrix - narrow.matrix;
    est.method = Method::WBM;
    est.window = LagWindow::flat_top();
    est.b_used = b;
    est.n_used = chain.rows();
    detail::finalize(est, timer);
    return est;
}

// Mean of squared entrywise differences.
template <typename DerivedA, typename DerivedB>
double mse(const Eigen::MatrixBase<DerivedA>& estimate, const Eigen::MatrixBase<DerivedB>& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw ConfigError("mse: dimension mismatch");
    const double count = static_cast<double>(estimate.rows() * estimate.cols());
    return (estimate - truth).template cast<double>().squaredNorm() / count;
}

// Estimator selection used by the CLI and experiment drivers.
struct EstimatorSpec {
    Method method = Method::WBM;
    std::optional<LagWindow> window = LagWindow::flat_top();
    BatchSchedule schedule = BatchSchedule::power(1.0 / 3.0);
    // For the flat-top WBM, use the two-term closed form instead of the
    // generic lag sum.  Results agree to rounding.
    bool fast = true;
};

CovEstimate run_estimator(const Eigen::Ref<const Eigen::MatrixXd>& chain,
                          const EstimatorSpec& spec);

}  // namespace covkit
