#include "formlab/maneuver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "formlab/linalg.hpp"

namespace formlab {

double MotionParams::scalar(int i, int j) const {
    const auto it = scalars.find({i, j});
    return it == scalars.end() ? 0.0 : it->second;
}

Eigen::MatrixXd MotionParams::block(int i, int j) const {
    const auto it = blocks.find({i, j});
    return it == blocks.end() ? Eigen::MatrixXd::Zero(dim, dim) : it->second;
}

namespace {

void check_design_inputs(const Graph& g, const ReferenceShape& shape,
                         const Eigen::VectorXd& v_star) {
    if (shape.agent_count() != g.node_count()) {
        throw ValidationError("reference shape has " + std::to_string(shape.agent_count()) +
                              " agents but the graph has " + std::to_string(g.node_count()) +
                              " nodes");
    }
    if (v_star.size() != shape.dim()) {
        throw ValidationError("v* has dimension " + std::to_string(v_star.size()) +
                              ", expected " + std::to_string(shape.dim()));
    }
    if (!v_star.allFinite()) {
        throw ValidationError("v* must be finite");
    }
    if (!classify_graph(g).connected) {
        throw ValidationError("motion design requires a connected graph");
    }
}

}  // namespace

MotionParams design_motion_params(const Graph& g, const ReferenceShape& shape,
                                  const Eigen::VectorXd& v_star, MotionMode mode,
                                  double kappa) {
    check_design_inputs(g, shape, v_star);
    const int m = shape.dim();

    MotionParams params;
    params.mode = mode;
    params.dim = m;
    if (v_star.isZero(0.0)) {
        return params;  // static shape: every mu stays zero
    }
    if (kappa == 0.0) {
        throw ValidationError("kappa = 0 cannot realize a nonzero v*");
    }

    const Configuration& ref = shape.reference();
    const double shape_scale =
        std::max(1.0, ref.stacked().lpNorm<Eigen::Infinity>());

    for (int i = 0; i < g.node_count(); ++i) {
        const std::vector<int> nbrs = g.neighbors(i);
        if (mode == MotionMode::Scalar) {
            // Solve v* = sum_j (kappa mu_ij) (p*_i - p*_j) for the products,
            // minimum-norm when the agent has spare neighbors.
            Eigen::MatrixXd a(m, static_cast<Eigen::Index>(nbrs.size()));
            for (std::size_t c = 0; c < nbrs.size(); ++c) {
                a.col(static_cast<Eigen::Index>(c)) = ref.agent(i) - ref.agent(nbrs[c]);
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(a,
                Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-10);
            const Eigen::VectorXd x = svd.solve(v_star);
            const double residual = (a * x - v_star).norm();
            if (residual > 1e-9 * std::max(1.0, v_star.norm())) {
                std::ostringstream msg;
                msg << "scalar motion design infeasible for agent " << i + 1
                    << ": v* lies outside the span of its desired relative positions"
                    << " (an arbitrary v* needs at least m = " << m
                    << " independent neighbors); retry with matrix mode";
                throw ValidationError(msg.str());
            }
            for (std::size_t c = 0; c < nbrs.size(); ++c) {
                params.scalars[{i, nbrs[c]}] = x(static_cast<Eigen::Index>(c)) / kappa;
            }
        } else {
            // Single block on the edge to the lowest-index neighbor.
            const int j = nbrs.front();
            const Eigen::VectorXd d = ref.agent(i) - ref.agent(j);
            if (d.norm() <= 1e-12 * shape_scale) {
                std::ostringstream msg;
                msg << "matrix motion design: reference edge (" << i + 1 << "," << j + 1
                    << ") is degenerate (p*_" << i + 1 << " coincides with p*_" << j + 1
                    << ")";
                throw ValidationError(msg.str());
            }
            Eigen::MatrixXd mu(m, m);
            if (m == 2) {
                // Rotation+scaling block [[a,-b],[b,a]] with mu d = v*/kappa.
                const Eigen::VectorXd w = v_star / kappa;
                const double den = d.squaredNorm();
                const double ca = d.dot(w) / den;
                const double cb = (d(0) * w(1) - d(1) * w(0)) / den;
                mu << ca, -cb, cb, ca;
            } else {
                mu = v_star * d.transpose() / (kappa * d.squaredNorm());
            }
            params.blocks[{i, j}] = mu;
        }
    }

    // Assembling the design verifies every agent lands on the same v*.
    build_maneuver(params, g, shape, kappa);
    return params;
}

ManeuverDesign build_maneuver(const MotionParams& motion, const Graph& g,
                              const ReferenceShape& shape, double kappa) {
    const int m = shape.dim();
    const int n = g.node_count();
    const int ec = g.edge_count();
    if (shape.agent_count() != n) {
        throw ValidationError("reference shape does not match the graph size");
    }
    const bool empty_motion = motion.scalars.empty() && motion.blocks.empty();
    if (!empty_motion && motion.dim != 0 && motion.dim != m) {
        throw ValidationError("motion parameters were designed for dimension " +
                              std::to_string(motion.dim) + ", shape has " +
                              std::to_string(m));
    }

    const auto check_pair = [&](const std::pair<int, int>& key) {
        const auto [i, j] = key;
        if (i < 0 || i >= n || j < 0 || j >= n || !g.adjacent(i, j)) {
            throw ValidationError("motion parameter (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) +
                                  ") does not correspond to a graph edge");
        }
    };
    for (const auto& [key, value] : motion.scalars) {
        (void)value;
        check_pair(key);
    }
    for (const auto& [key, value] : motion.blocks) {
        check_pair(key);
        if (value.rows() != m || value.cols() != m) {
            throw ValidationError("matrix motion block must be " + std::to_string(m) + "x" +
                                  std::to_string(m));
        }
    }

    ManeuverDesign design;
    design.motion = motion;
    design.kappa = kappa;

    if (motion.mode == MotionMode::Scalar) {
        Eigen::MatrixXd small = Eigen::MatrixXd::Zero(n, ec);
        for (int k = 0; k < ec; ++k) {
            const Edge& e = g.edges()[k];
            small(e.tail, k) = motion.scalar(e.tail, e.head);
            small(e.head, k) = -motion.scalar(e.head, e.tail);
        }
        design.M_hat = kron_identity(small, m);
    } else {
        design.M_hat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) * n,
                                             static_cast<Eigen::Index>(m) * ec);
        for (int k = 0; k < ec; ++k) {
            const Edge& e = g.edges()[k];
            design.M_hat.block(e.tail * m, k * m, m, m) = motion.block(e.tail, e.head);
            design.M_hat.block(e.head * m, k * m, m, m) = -motion.block(e.head, e.tail);
        }
    }

    const Eigen::MatrixXd b_bar = kron_identity(build_incidence(g), m);
    design.Lambda_hat = design.M_hat * b_bar.transpose();

    const Eigen::VectorXd velocities = kappa * design.Lambda_hat * shape.reference().stacked();
    design.v_star = velocities.head(m);
    double deviation = 0.0;
    for (int i = 1; i < n; ++i) {
        deviation = std::max(
            deviation,
            (velocities.segment(i * m, m) - design.v_star).lpNorm<Eigen::Infinity>());
    }
    if (deviation > 1e-9) {
        std::ostringstream msg;
        msg << "design inconsistency: implied steady velocities differ across agents by "
            << deviation << "; all agents must be designed for the same v*";
        throw ValidationError(msg.str());
    }
    return design;
}

double kappa_bound(const Graph& g, const Eigen::MatrixXd& M_hat, double omega_star) {
    if (!(omega_star > 0.0)) {
        throw ValidationError("omega* must be positive");
    }
    if (!classify_graph(g).tree) {
        throw UnsupportedTopologyError(
            "kappa_bound requires a tree graph; run spectrum_check to assess stability "
            "on graphs with cycles");
    }
    for (int k = 0; k < g.edge_count(); ++k) {
        if (std::abs(g.weights()(k) - omega_star) > 1e-12 * std::max(1.0, omega_star)) {
            throw ValidationError("kappa_bound assumes uniform weights omega* = " +
                                  std::to_string(omega_star) + "; edge " +
                                  std::to_string(k + 1) + " has weight " +
                                  std::to_string(g.weights()(k)));
        }
    }
    if (M_hat.cols() == 0 || M_hat.cols() % g.edge_count() != 0) {
        throw ValidationError("M_hat column count does not match the edge count");
    }
    const int m = static_cast<int>(M_hat.cols()) / g.edge_count();
    if (M_hat.rows() != static_cast<Eigen::Index>(m) * g.node_count()) {
        throw ValidationError("M_hat row count does not match the node count");
    }

    const Eigen::MatrixXd b_bar = kron_identity(build_incidence(g), m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b_bar.transpose() * b_bar);
    const double lam_min = eig.eigenvalues()(0);
    const double denom = spectral_norm(b_bar.transpose() * M_hat);
    if (denom == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return omega_star * lam_min / denom;
}

SpectrumReport spectrum_check(const Eigen::MatrixXd& closed_loop, int dim) {
    if (closed_loop.rows() != closed_loop.cols()) {
        throw ValidationError("spectrum_check needs a square matrix");
    }
    if (dim < 1 || closed_loop.rows() % dim != 0) {
        throw ValidationError("closed-loop size is not a multiple of the ambient dimension");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(closed_loop, false);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "eigensolver failed to converge on the closed-loop matrix:\n" << closed_loop;
        throw NumericError(msg.str());
    }

    SpectrumReport report;
    report.eigenvalues = solver.eigenvalues();
    const double tol = eig_zero_tol(closed_loop);
    report.min_nonzero_real = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
        const std::complex<double> lambda = report.eigenvalues(i);
        if (std::abs(lambda) < tol) {
            ++report.zero_count;
        } else {
            report.min_nonzero_real = std::min(report.min_nonzero_real, lambda.real());
        }
    }
    report.stable = (report.zero_count == dim) && (report.min_nonzero_real > tol);

    const int n = static_cast<int>(closed_loop.rows()) / dim;
    double kernel_residual = 0.0;
    for (int l = 0; l < dim; ++l) {
        Eigen::VectorXd basis = Eigen::VectorXd::Zero(dim);
        basis(l) = 1.0;
        kernel_residual = std::max(
            kernel_residual, (closed_loop * tile(basis, n)).lpNorm<Eigen::Infinity>());
    }
    report.kernel_residual = kernel_residual;
    return report;
}

SpectrumReport spectrum_check(const Eigen::MatrixXd& L_bar, double kappa,
                              const Eigen::MatrixXd& Lambda_hat, int dim) {
    if (L_bar.rows() != Lambda_hat.rows() || L_bar.cols() != Lambda_hat.cols()) {
        throw ValidationError("L_bar and Lambda_hat sizes differ");
    }
    return spectrum_check(L_bar - kappa * Lambda_hat, dim);
}

Eigen::VectorXd maneuver_control(const Configuration& p, const ManeuverDesign& design,
                                 const Eigen::MatrixXd& L_bar, const ReferenceShape& shape) {
    if (p.stacked().size() != L_bar.rows() ||
        shape.reference().stacked().size() != L_bar.rows() ||
        design.Lambda_hat.rows() != L_bar.rows()) {
        throw ValidationError("maneuver_control: inconsistent dimensions");
    }
    return -(L_bar - design.kappa * design.Lambda_hat) * p.stacked() +
           L_bar * shape.reference().stacked();
}

}  // namespace formlab
