#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covkit/estimators.hpp"

namespace covkit {

// Online covariance estimation in O(a) memory.  Samples are folded into
// batch means whose batch size doubles whenever the smallest power of two
// >= n^nu increases; adjacent batches are then merged pairwise.  The ledger
// is kept at the half granularity b/2 so that both the BM estimate (batch
// size b, from merged pairs) and the flat-top estimate 2*BM(b) - BM(b/2)
// can be answered without revisiting samples.  The trailing partial batch
// is excluded from estimates.
class StreamingCov {
public:
    explicit StreamingCov(Index p, double nu = 1.0 / 3.0);

    void push(const Eigen::Ref<const Eigen::VectorXd>& sample);

    Index dim() const { return p_; }
    double nu() const { return nu_; }
    Index total_count() const { return total_; }
    Index current_b() const { return b_; }
    Index fine_granularity() const { return h_; }

    // Closed batches at the fine granularity h and at the full batch size b.
    Index fine_batch_count() const { return static_cast<Index>(fine_.size()); }
    Index coarse_batch_count() const {
        return h_ == b_ ? fine_batch_count() : fine_batch_count() / 2;
    }
    // Samples not yet in a closed batch at batch size b.
    Index open_count_at_b() const {
        const Index unpaired = h_ == b_ ? 0 : (fine_batch_count() % 2) * h_;
        return unpaired + open_count_;
    }

    const std::vector<Eigen::VectorXd>& fine_means() const { return fine_; }
    const Eigen::VectorXd& open_sum() const { return open_sum_; }
    Index open_count() const { return open_count_; }
    const Eigen::VectorXd& running_sum() const { return running_sum_; }

    // BM estimate over the closed batches at batch size current_b.
    // Requires at least 2 closed batches.
    CovEstimate estimate_bm() const;

    // Flat-top estimate 2*BM(b) - BM(b/2) over the two ledgers.
    // Requires current_b >= 4 and at least 4 closed batches.
    CovEstimate estimate_flat_top() const;

    // Rebuild a state from snapshot fields (see save_stream / load_stream).
    static StreamingCov restore(Index p, double nu, Index current_b, Index total_count,
                                std::vector<Eigen::VectorXd> fine_means,
                                Eigen::VectorXd open_sum, Index open_count,
                                Eigen::VectorXd running_sum);

private:
    void close_open_batch_if_full();
    void double_batch_size();
    Eigen::MatrixXd coarse_mean_matrix() const;
    Eigen::MatrixXd fine_mean_matrix() const;

    Index p_;
    double nu_;
    Index total_ = 0;
    Index b_ = 1;  // current batch size, power of two
    Index h_ = 1;  // ledger granularity, max(b/2, 1)
    std::vector<Eigen::VectorXd> fine_;
    Eigen::VectorXd open_sum_;
    Index open_count_ = 0;
    Eigen::VectorXd running_sum_;
};

// Versioned little-endian binary snapshot:
//   magic "CVKS", u32 version, u64 p, f64 nu, u64 current_b, u64 total_count,
//   u64 fine_count, u64 open_count, fine batch means (row order, f64),
//   open_sum (f64 x p), running_sum (f64 x p).
void save_stream(const StreamingCov& state, std::ostream& os);
void save_stream(const StreamingCov& state, const std::string& path);
StreamingCov load_stream(std::istream& is);
StreamingCov load_stream(const std::string& path);

// Numerically stable running mean / covariance of pushed vectors
// (covariance normalized by n, matching the lag-0 autocovariance).
class WelfordCov {
public:
    explicit WelfordCov(Index p)
        : mean_(Eigen::VectorXd::Zero(p)), m2_(Eigen::MatrixXd::Zero(p, p)) {}

    void push(const Eigen::Ref<const Eigen::VectorXd>& y) {
        ++n_;
        const Eigen::VectorXd delta = y - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * delta.transpose() * (static_cast<double>(n_ - 1) / n_);
    }

    Index count() const { return n_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    Eigen::MatrixXd covariance_n() const { return m2_ / static_cast<double>(n_); }

private:
    Index n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd m2_;
};

}  // namespace covkit
