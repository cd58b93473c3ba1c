#pragma once

#include <complex>
#include <map>
#include <utility>

#include <Eigen/Dense>

#include "formlab/formation.hpp"
#include "formlab/graph.hpp"

namespace formlab {

enum class MotionMode { Scalar, Matrix };

// Motion parameters mu_ij attached to directed neighbor pairs. In scalar mode
// mu_ij and mu_ji are independent reals; in matrix mode each stored entry is a
// dim x dim block. Pairs absent from the map are zero.
struct MotionParams {
    MotionMode mode = MotionMode::Scalar;
    int dim = 0;
    std::map<std::pair<int, int>, double> scalars;         // 0-based (i, j)
    std::map<std::pair<int, int>, Eigen::MatrixXd> blocks;

    double scalar(int i, int j) const;
    Eigen::MatrixXd block(int i, int j) const;  // zero block if absent
};

// Assembled maneuvering design: the closed loop is pdot = -(L̄ - kappa*Λ̂)p + L̄p*
// and every agent's designed steady velocity is v_star.
struct ManeuverDesign {
    MotionParams motion;
    double kappa = 0.0;
    Eigen::MatrixXd M_hat;       // mn x m|E|
    Eigen::MatrixXd Lambda_hat;  // M_hat * B̄^T
    Eigen::VectorXd v_star;      // implied common velocity, kappa*Λ̂p* = 1_n ⊗ v*
};

struct SpectrumReport {
    Eigen::VectorXcd eigenvalues;
    int zero_count = 0;
    double min_nonzero_real = 0.0;  // +inf when every eigenvalue is zero
    bool stable = false;            // zero_count == dim and min_nonzero_real > tol
    double kernel_residual = 0.0;   // max_l ||A (1_n ⊗ e_l)||_inf, checked directly
};

// Solves v* = kappa * sum_j mu_ij (p*_i - p*_j) per agent. Scalar mode uses a
// minimum-norm least-squares fit over the agent's desired relative positions
// (solving for the products kappa*mu, then dividing by kappa). Matrix mode
// places a single block on the edge to the lowest-index neighbor: a
// rotation+scaling block in 2D, an outer-product block otherwise.
MotionParams design_motion_params(const Graph& g, const ReferenceShape& shape,
                                  const Eigen::VectorXd& v_star, MotionMode mode,
                                  double kappa);

// Assembles M̂ (scalar: M per the tail/head sign convention, lifted by ⊗I_m;
// matrix: the same convention block-wise), Λ̂ = M̂ B̄^T, and the implied v*.
// Throws if the agents' implied velocities disagree.
ManeuverDesign build_maneuver(const MotionParams& motion, const Graph& g,
                              const ReferenceShape& shape, double kappa);

// Sufficient bound on |kappa| for tree graphs with uniform weights omega_star:
// omega_star * lambda_min(B̄^T B̄) / ||B̄^T M̂||_2. Returns +inf when M̂ has no
// effect through the graph (||B̄^T M̂||_2 = 0).
double kappa_bound(const Graph& g, const Eigen::MatrixXd& M_hat, double omega_star);

// Full complex spectrum of a closed-loop matrix. `dim` is the ambient
// dimension m; stable requires exactly m (numerically) zero eigenvalues and
// every other real part positive beyond the scale-relative tolerance.
SpectrumReport spectrum_check(const Eigen::MatrixXd& closed_loop, int dim);
SpectrumReport spectrum_check(const Eigen::MatrixXd& L_bar, double kappa,
                              const Eigen::MatrixXd& Lambda_hat, int dim);

// u = -(L̄ - kappa Λ̂) p + L̄ p*.
Eigen::VectorXd maneuver_control(const Configuration& p, const ManeuverDesign& design,
                                 const Eigen::MatrixXd& L_bar, const ReferenceShape& shape);

}  // namespace formlab
