#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "covkit/errors.hpp"
#include "covkit/estimators.hpp"

namespace covkit {

// Reference chains with closed-form long-run covariance, for validation and
// benchmarking.  Generation is deterministic given the seed and starts from
// the stationary distribution, so there is no burn-in transient.

struct Ar1Model {
    double phi = 0.0;
    std::uint64_t seed = 0;
};

struct Var1Model {
    Eigen::MatrixXd coeff;  // p x p, spectral radius < 1
    std::uint64_t seed = 0;
};

// X_t = phi * X_{t-1} + e_t with e_t iid N(0,1), X_0 ~ N(0, 1/(1-phi^2)).
Eigen::MatrixXd ar1_generate(const Ar1Model& model, Index n);

// Long-run variance of the AR(1) mean: 1/(1-phi)^2.
double ar1_true_sigma(double phi);

// X_t = Phi * X_{t-1} + e_t with e_t iid N_p(0, I), X_0 ~ N_p(0, V).
Eigen::MatrixXd var1_generate(const Var1Model& model, Index n);

// Stationary covariance V solving vec(V) = (I - Phi (x) Phi)^{-1} vec(I),
// i.e. the fixed point of V = Phi V Phi^T + I.  Dense LU on the p^2 x p^2
// system: O(p^6), so p is capped at 60.
Eigen::MatrixXd var1_stationary(const Eigen::Ref<const Eigen::MatrixXd>& phi);

// Long-run covariance of the VAR(1) mean:
// (I - Phi)^{-1} V + [(I - Phi)^{-1} V]^T - V.
Eigen::MatrixXd var1_true_sigma(const Eigen::Ref<const Eigen::MatrixXd>& phi);

// Random stable coefficient matrix: A has iid N(0,1) entries from the seed,
// B = A A^T with largest eigenvalue m, result = scale * B / (m + offset).
// The spectral radius is at most scale * m / (m + offset) < 1.
Eigen::MatrixXd make_phi(Index p, std::uint64_t seed, double offset = 1.0, double scale = 1.0);

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace covkit
