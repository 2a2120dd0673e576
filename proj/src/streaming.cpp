#include "covkit/streaming.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <ostream>

namespace covkit {

static_assert(std::endian::native == std::endian::little,
              "stream snapshots are little-endian; big-endian hosts are not supported");

StreamingCov::StreamingCov(Index p, double nu) : p_(p), nu_(nu) {
    if (p < 1) throw ConfigError("StreamingCov requires p >= 1");
    if (!(nu > 0.0 && nu < 1.0)) throw ConfigError("StreamingCov requires 0 < nu < 1");
    open_sum_ = Eigen::VectorXd::Zero(p);
    running_sum_ = Eigen::VectorXd::Zero(p);
}

void StreamingCov::push(const Eigen::Ref<const Eigen::VectorXd>& sample) {
    if (sample.size() != p_)
        throw ConfigError("StreamingCov::push: sample dimension " +
                          std::to_string(sample.size()) + " != " + std::to_string(p_));
    ++total_;
    running_sum_ += sample;
    open_sum_ += sample;
    ++open_count_;
    close_open_batch_if_full();
    const Index target = doubling_batch_size(total_, nu_);
    while (b_ < target) double_batch_size();
}

void StreamingCov::close_open_batch_if_full() {
    if (open_count_ == h_) {
        fine_.push_back(open_sum_ / static_cast<double>(h_));
        open_sum_.setZero();
        open_count_ = 0;
    }
}

void StreamingCov::double_batch_size() {
    const Index new_b = 2 * b_;
    const Index new_h = std::max<Index>(new_b / 2, 1);
    if (new_h != h_) {
        // merge adjacent fine batches; equal counts, so the merged mean is
        // the plain average
        const Index pairs = static_cast<Index>(fine_.size()) / 2;
        std::vector<Eigen::VectorXd> merged;
        merged.reserve(pairs);
        for (Index i = 0; i < pairs; ++i)
            merged.push_back(0.5 * (fine_[2 * i] + fine_[2 * i + 1]));
        if (fine_.size() % 2 == 1) {
            // an unpaired trailing batch rejoins the open accumulation
            open_sum_ += fine_.back() * static_cast<double>(h_);
            open_count_ += h_;
        }
        fine_ = std::move(merged);
    }
    h_ = new_h;
    b_ = new_b;
}

Eigen::MatrixXd StreamingCov::fine_mean_matrix() const {
    Eigen::MatrixXd m(static_cast<Index>(fine_.size()), p_);
    for (Index i = 0; i < m.rows(); ++i) m.row(i) = fine_[static_cast<size_t>(i)].transpose();
    return m;
}

Eigen::MatrixXd StreamingCov::coarse_mean_matrix() const {
    if (h_ == b_) return fine_mean_matrix();
    const Index c = coarse_batch_count();
    Eigen::MatrixXd m(c, p_);
    for (Index i = 0; i < c; ++i)
        m.row(i) = 0.5 * (fine_[static_cast<size_t>(2 * i)] +
                          fine_[static_cast<size_t>(2 * i + 1)]).transpose();
    return m;
}

CovEstimate StreamingCov::estimate_bm() const {
    const Index c = coarse_batch_count();
    if (c < 2)
        throw NumericError("StreamingCov::estimate_bm: needs at least 2 closed batches, have " +
                           std::to_string(c));
    detail::KernelTimer timer;
    CovEstimate est;
    est.matrix = detail::scaled_centered_gram(coarse_mean_matrix(),
                                              static_cast<double>(b_) / static_cast<double>(c - 1));
    est.method = Method::BM;
    est.b_used = b_;
    est.n_used = c * b_;
    detail::finalize(est, timer);
    return est;
}

CovEstimate StreamingCov::estimate_flat_top() const {
    if (b_ < 4)
        throw NumericError("StreamingCov::estimate_flat_top: batch size must reach 4, is " +
                           std::to_string(b_));
    const Index c = coarse_batch_count();
    if (c < 4)
        throw NumericError(
            "StreamingCov::estimate_flat_top: needs at least 4 closed batches, have " +
            std::to_string(c));
    detail::KernelTimer timer;
    const Eigen::MatrixXd coarse = coarse_mean_matrix();
    const Eigen::MatrixXd fine = fine_mean_matrix();
    const Index f = fine.rows();
    Eigen::MatrixXd wide = detail::scaled_centered_gram(
        coarse, static_cast<double>(b_) / static_cast<double>(c - 1));
    Eigen::MatrixXd narrow = detail::scaled_centered_gram(
        fine, static_cast<double>(h_) / static_cast<double>(f - 1));

    CovEstimate est;
    est.matrix = 2.0 * wide - narrow;
    est.method = Method::WBM;
    est.window = LagWindow::flat_top();
    est.b_used = b_;
    est.n_used = c * b_;
    detail::finalize(est, timer);
    return est;
}

StreamingCov StreamingCov::restore(Index p, double nu, Index current_b, Index total_count,
                                   std::vector<Eigen::VectorXd> fine_means,
                                   Eigen::VectorXd open_sum, Index open_count,
                                   Eigen::VectorXd running_sum) {
    StreamingCov s(p, nu);
    s.total_ = total_count;
    s.b_ = current_b;
    s.h_ = std::max<Index>(current_b / 2, 1);
    s.fine_ = std::move(fine_means);
    s.open_sum_ = std::move(open_sum);
    s.open_count_ = open_count;
    s.running_sum_ = std::move(running_sum);
    return s;
}

namespace {

constexpr char kMagic[4] = {'C', 'V', 'K', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(value));
    if (!is) throw IoError("stream snapshot truncated");
    return value;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(sizeof(double)) * v.size());
}

Eigen::VectorXd read_vector(std::istream& is, Index p) {
    Eigen::VectorXd v(p);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double)) * p);
    if (!is) throw IoError("stream snapshot truncated");
    return v;
}

}  // namespace

void save_stream(const StreamingCov& state, std::ostream& os) {
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint64_t>(state.dim()));
    write_pod(os, state.nu());
    write_pod(os, static_cast<std::uint64_t>(state.current_b()));
    write_pod(os, static_cast<std::uint64_t>(state.total_count()));
    write_pod(os, static_cast<std::uint64_t>(state.fine_batch_count()));
    write_pod(os, static_cast<std::uint64_t>(state.open_count()));
    for (const auto& m : state.fine_means()) write_vector(os, m);
    write_vector(os, state.open_sum());
    write_vector(os, state.running_sum());
    if (!os) throw IoError("failed writing stream snapshot");
}

void save_stream(const StreamingCov& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    save_stream(state, os);
}

StreamingCov load_stream(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a stream snapshot (bad magic)");
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion)
        throw IoError("unsupported stream snapshot version " + std::to_string(version));
    const auto p = static_cast<Index>(read_pod<std::uint64_t>(is));
    const double nu = read_pod<double>(is);
    const auto current_b = static_cast<Index>(read_pod<std::uint64_t>(is));
    const auto total = static_cast<Index>(read_pod<std::uint64_t>(is));
    const auto fine_count = static_cast<Index>(read_pod<std::uint64_t>(is));
    const auto open_count = static_cast<Index>(read_pod<std::uint64_t>(is));
    if (p < 1 || current_b < 1 || fine_count < 0)
        throw IoError("corrupt stream snapshot header");
    std::vector<Eigen::VectorXd> fine;
    fine.reserve(static_cast<size_t>(fine_count));
    for (Index i = 0; i < fine_count; ++i) fine.push_back(read_vector(is, p));
    Eigen::VectorXd open_sum = read_vector(is, p);
    Eigen::VectorXd running_sum = read_vector(is, p);
    return StreamingCov::restore(p, nu, current_b, total, std::move(fine), std::move(open_sum),
                                 open_count, std::move(running_sum));
}

StreamingCov load_stream(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    return load_stream(is);
}

}  // namespace covkit
