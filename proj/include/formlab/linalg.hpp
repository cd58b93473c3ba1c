#pragma once

#include <Eigen/Dense>

namespace formlab {

// a ⊗ I_m. Every per-node/per-edge matrix in this library is lifted to the
// ambient dimension this way.
Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& a, int m);

// 1_count ⊗ v (v repeated count times as one stacked vector).
Eigen::VectorXd tile(const Eigen::VectorXd& v, int count);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& a);

// Scale-relative threshold under which an eigenvalue counts as zero:
// 1e-9 * max(1, ||a||_2).
double eig_zero_tol(const Eigen::MatrixXd& a);

}  // namespace formlab
