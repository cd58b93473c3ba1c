#include "formlab/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "formlab/linalg.hpp"

namespace formlab {

SensorModel SensorModel::create(Eigen::VectorXd scales,
                                std::vector<Eigen::MatrixXd> rotations) {
    const int n = static_cast<int>(scales.size());
    if (n < 1 || rotations.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("sensor model needs one scale and one rotation per agent");
    }
    for (int i = 0; i < n; ++i) {
        if (!(scales(i) > 0.0)) {
            throw ValidationError("agent " + std::to_string(i + 1) +
                                  ": scale factor must be positive, got " +
                                  std::to_string(scales(i)));
        }
    }
    const Eigen::Index m = rotations.front().rows();
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd& r = rotations[static_cast<std::size_t>(i)];
        if (r.rows() != m || r.cols() != m) {
            throw ValidationError("agent " + std::to_string(i + 1) +
                                  ": rotation has inconsistent size");
        }
        const double ortho =
            (r.transpose() * r - Eigen::MatrixXd::Identity(m, m)).lpNorm<Eigen::Infinity>();
        if (ortho > 1e-10) {
            std::ostringstream msg;
            msg << "agent " << i + 1 << ": misalignment matrix is not orthogonal "
                << "(||R^T R - I||_max = " << ortho << ")";
            throw ValidationError(msg.str());
        }
        if (std::abs(r.determinant() - 1.0) > 1e-10) {
            throw ValidationError("agent " + std::to_string(i + 1) +
                                  ": misalignment must be a proper rotation (det = +1)");
        }
    }
    return SensorModel(std::move(scales), std::move(rotations));
}

SensorModel SensorModel::from_angles(const Eigen::VectorXd& scales,
                                     const Eigen::VectorXd& angles) {
    if (scales.size() != angles.size()) {
        throw ValidationError("sensor model: scale and angle counts differ");
    }
    std::vector<Eigen::MatrixXd> rotations;
    rotations.reserve(static_cast<std::size_t>(angles.size()));
    for (Eigen::Index i = 0; i < angles.size(); ++i) {
        Eigen::MatrixXd r(2, 2);
        r << std::cos(angles(i)), -std::sin(angles(i)),
             std::sin(angles(i)),  std::cos(angles(i));
        rotations.push_back(std::move(r));
    }
    return create(scales, std::move(rotations));
}

SensorModel SensorModel::identity(int agent_count, int dim) {
    return create(Eigen::VectorXd::Ones(agent_count),
                  std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(agent_count),
                                               Eigen::MatrixXd::Identity(dim, dim)));
}

Eigen::MatrixXd build_sensor_matrix(const SensorModel& model) {
    const int n = model.agent_count();
    const int m = model.dim();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) * n,
                                              static_cast<Eigen::Index>(m) * n);
    for (int i = 0; i < n; ++i) {
        d.block(i * m, i * m, m, m) =
            model.scales()(i) * model.rotations()[static_cast<std::size_t>(i)];
    }
    return d;
}

namespace {

// Integrates the distorted relative positions back into agent positions by
// walking the tree from agent 1, then re-centers at the center of mass.
Configuration reconstruct_shape(const Graph& g, const RelPosStack& z, int root) {
    const int n = g.node_count();
    const int m = z.dim;
    Eigen::VectorXd positions = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * n);
    std::vector<bool> placed(static_cast<std::size_t>(n), false);
    placed[static_cast<std::size_t>(root)] = true;
    std::queue<int> frontier;
    frontier.push(root);
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (int k = 0; k < g.edge_count(); ++k) {
            const Edge& e = g.edges()[k];
            if (e.tail == v && !placed[static_cast<std::size_t>(e.head)]) {
                positions.segment(e.head * m, m) =
                    positions.segment(v * m, m) - z.edge(k);
                placed[static_cast<std::size_t>(e.head)] = true;
                frontier.push(e.head);
            } else if (e.head == v && !placed[static_cast<std::size_t>(e.tail)]) {
                positions.segment(e.tail * m, m) =
                    positions.segment(v * m, m) + z.edge(k);
                placed[static_cast<std::size_t>(e.tail)] = true;
                frontier.push(e.tail);
            }
        }
    }
    Eigen::VectorXd cm = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
        cm += positions.segment(i * m, m);
    }
    cm /= static_cast<double>(n);
    return Configuration(m, positions - tile(cm, n));
}

}  // namespace

RobustnessPrediction predict_distortion(const Graph& g, const ReferenceShape& shape,
                                        const SensorModel& model) {
    const int m = shape.dim();
    const int n = g.node_count();
    if (shape.agent_count() != n) {
        throw ValidationError("reference shape does not match the graph size");
    }
    if (model.agent_count() != n || model.dim() != m) {
        throw ValidationError("sensor model does not match the framework layout");
    }
    const GraphClass cls = classify_graph(g);
    if (!cls.tree) {
        throw UnsupportedTopologyError(
            "predict_distortion requires a connected tree graph (the closed-form "
            "distortion is only exact without cycles)");
    }

    const Eigen::MatrixXd b_bar = kron_identity(build_incidence(g), m);
    const Eigen::MatrixXd w_bar =
        kron_identity(Eigen::MatrixXd(g.weights().asDiagonal()), m);
    const Eigen::MatrixXd d_x = build_sensor_matrix(model);
    const Eigen::VectorXd z_star = b_bar.transpose() * shape.reference().stacked();

    const Eigen::MatrixXd core = b_bar.transpose() * d_x * b_bar;  // lifted B^T Dx B
    const Eigen::MatrixXd lhs = core * w_bar;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigma_max = svd.singularValues()(0);
    const double sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
    // Opposite misalignments can collapse the whole matrix to rounding noise,
    // which stays well-conditioned in the sigma_max/sigma_min sense; measure
    // against the perfect-sensing operator so that case registers as singular.
    const double reference_scale = spectral_norm(b_bar.transpose() * b_bar * w_bar);
    const double cond = sigma_min > 0.0
                            ? std::max(sigma_max, reference_scale) / sigma_min
                            : std::numeric_limits<double>::infinity();
    if (!(cond < 1e12)) {
        std::ostringstream msg;
        msg << "lifted B^T Dx B Dw is numerically singular (condition number " << cond
            << "); the sensing mismatch is too extreme for a distortion prediction";
        throw NumericError(msg.str());
    }

    RobustnessPrediction out{
        RelPosStack{m, svd.solve(b_bar.transpose() * b_bar * w_bar * z_star)},
        Eigen::VectorXd(),
        Eigen::MatrixXd(),
        Configuration(m, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * n)),
        0.0,
        false,
        SpectrumReport{}};

    // Drift stack: (D_x B̄ (B̄^T D_x B̄)^{-1} B̄^T B̄ - B̄) D̄_w z* = -(1_n ⊗ ṽ*).
    const Eigen::MatrixXd btb = b_bar.transpose() * b_bar;
    const Eigen::VectorXd weighted = w_bar * z_star;
    const Eigen::MatrixXd inner = core.colPivHouseholderQr().solve(btb);
    const Eigen::VectorXd drift = (d_x * b_bar * inner - b_bar) * weighted;

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
        mean += drift.segment(i * m, m);
    }
    mean /= static_cast<double>(n);
    out.v_tilde = -mean;
    double deviation = 0.0;
    for (int i = 0; i < n; ++i) {
        deviation = std::max(deviation,
                             (drift.segment(i * m, m) - mean).lpNorm<Eigen::Infinity>());
    }
    out.consistency_residual = deviation;

    out.M_breve = -(d_x * b_bar - b_bar * btb.llt().solve(b_bar.transpose() * d_x * b_bar)) *
                  w_bar;

    out.p_tilde = reconstruct_shape(g, out.z_tilde, 0);

    const Eigen::MatrixXd l_bar = kron_identity(build_laplacian(g), m);
    out.loop_spectrum = spectrum_check(d_x * l_bar, m);
    out.realizable = out.loop_spectrum.stable;
    return out;
}

Eigen::VectorXd faulty_control(const Configuration& p, const Graph& g,
                               const ReferenceShape& shape, const Eigen::MatrixXd& D_x) {
    const int m = p.dim();
    if (p.agent_count() != g.node_count() || shape.agent_count() != g.node_count() ||
        shape.dim() != m || D_x.rows() != p.stacked().size()) {
        throw ValidationError("faulty_control: inconsistent dimensions");
    }
    const Eigen::MatrixXd l_bar = kron_identity(build_laplacian(g), m);
    return -D_x * l_bar * p.stacked() + l_bar * shape.reference().stacked();
}

TwoAgentResidual two_agent_residual(double a, const Eigen::VectorXd& z_star_12) {
    if (!(a > 0.0)) {
        throw ValidationError("two_agent_residual: scale factor must be positive, got " +
                              std::to_string(a));
    }
    TwoAgentResidual out;
    out.z_tilde_12 = z_star_12 * 2.0 / (a + 1.0);
    out.v_residual = z_star_12 * (a - 1.0) / (a + 1.0);
    return out;
}

}  // namespace formlab
