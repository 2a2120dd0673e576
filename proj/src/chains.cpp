#include "covkit/chains.hpp"

#include <cmath>

#include "covkit/rng.hpp"

namespace covkit {

namespace {

constexpr Index kMaxVarDim = 60;  // the p^2 x p^2 solve is O(p^6)

void require_stable(double radius, const char* op) {
    if (!(radius < 1.0))
        throw ConfigError(std::string(op) + ": spectral radius " + std::to_string(radius) +
                          " must be < 1");
}

}  // namespace

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    if (m.rows() != m.cols()) throw ConfigError("spectral_radius: matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd ar1_generate(const Ar1Model& model, Index n) {
    if (n < 1) throw ConfigError("ar1_generate requires n >= 1");
    if (!(std::abs(model.phi) < 1.0))
        throw ConfigError("ar1_generate requires |phi| < 1, got " + std::to_string(model.phi));
    Rng rng(model.seed);
    Eigen::MatrixXd chain(n, 1);
    double x = rng.normal() / std::sqrt(1.0 - model.phi * model.phi);
    for (Index t = 0; t < n; ++t) {
        x = model.phi * x + rng.normal();
        chain(t, 0) = x;
    }
    return chain;
}

double ar1_true_sigma(double phi) {
    if (!(std::abs(phi) < 1.0))
        throw ConfigError("ar1_true_sigma requires |phi| < 1, got " + std::to_string(phi));
    return 1.0 / ((1.0 - phi) * (1.0 - phi));
}

Eigen::MatrixXd var1_stationary(const Eigen::Ref<const Eigen::MatrixXd>& phi) {
    const Index p = phi.rows();
    if (phi.cols() != p) throw ConfigError("var1_stationary: Phi must be square");
    if (p > kMaxVarDim)
        throw ConfigError("var1_stationary: p = " + std::to_string(p) + " exceeds the cap of " +
                          std::to_string(kMaxVarDim) + " (p^2 x p^2 dense solve)");
    require_stable(spectral_radius(phi), "var1_stationary");

    // vec(V) = (I - Phi (x) Phi)^{-1} vec(I); Kronecker block (i,j) scales
    // Phi by Phi(i,j), with column-major vec ordering
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(p * p, p * p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i)
            system.block(i * p, j * p, p, p) -= phi(i, j) * phi;
    Eigen::VectorXd vec_identity =
        Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd::Identity(p, p).eval().data(), p * p);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd solution = lu.solve(vec_identity);
    if (!solution.allFinite() ||
        (system * solution - vec_identity).norm() > 1e-6 * vec_identity.norm())
        throw NumericError("var1_stationary: singular system (model too close to instability)");

    Eigen::MatrixXd v = Eigen::Map<Eigen::MatrixXd>(solution.data(), p, p);
    return 0.5 * (v + v.transpose()).eval();
}

Eigen::MatrixXd var1_true_sigma(const Eigen::Ref<const Eigen::MatrixXd>& phi) {
    const Index p = phi.rows();
    const Eigen::MatrixXd v = var1_stationary(phi);
    const Eigen::MatrixXd resolvent =
        (Eigen::MatrixXd::Identity(p, p) - phi).partialPivLu().solve(v);
    Eigen::MatrixXd sigma = resolvent + resolvent.transpose() - v;
    return 0.5 * (sigma + sigma.transpose()).eval();
}

Eigen::MatrixXd var1_generate(const Var1Model& model, Index n) {
    if (n < 1) throw ConfigError("var1_generate requires n >= 1");
    const Index p = model.coeff.rows();
    const Eigen::MatrixXd v = var1_stationary(model.coeff);

    // square root of V for the stationary start
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    Eigen::MatrixXd root;
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
        root = es.eigenvectors() *
               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    Rng rng(model.seed);
    Eigen::MatrixXd chain(n, p);
    Eigen::VectorXd x = root * rng.normal_vector(p);
    for (Index t = 0; t < n; ++t) {
        x = model.coeff * x + rng.normal_vector(p);
        chain.row(t) = x.transpose();
    }
    return chain;
}

Eigen::MatrixXd make_phi(Index p, std::uint64_t seed, double offset, double scale) {
    if (p < 1) throw ConfigError("make_phi requires p >= 1");
    if (!(offset > 0.0)) throw ConfigError("make_phi requires offset > 0");
    if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("make_phi requires 0 < scale <= 1");
    Rng rng(seed);
    Eigen::MatrixXd a(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i) a(i, j) = rng.normal();
    Eigen::MatrixXd b = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    const double m = es.eigenvalues().maxCoeff();
    return (scale / (m + offset)) * b;
}

}  // namespace covkit
