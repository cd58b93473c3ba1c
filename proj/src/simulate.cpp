#include "formlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "formlab/linalg.hpp"

namespace formlab {

namespace {

Eigen::MatrixXd lifted_laplacian(const Graph& g, const ReferenceShape& shape) {
    if (shape.agent_count() != g.node_count()) {
        throw ValidationError("reference shape does not match the graph size");
    }
    return kron_identity(build_laplacian(g), shape.dim());
}

}  // namespace

DynamicsSpec nominal_dynamics(const Graph& g, const ReferenceShape& shape) {
    const Eigen::MatrixXd l_bar = lifted_laplacian(g, shape);
    return DynamicsSpec{ControllerKind::Nominal, shape.dim(), l_bar,
                        l_bar * shape.reference().stacked()};
}

DynamicsSpec maneuver_dynamics(const Graph& g, const ReferenceShape& shape,
                               const ManeuverDesign& design) {
    const Eigen::MatrixXd l_bar = lifted_laplacian(g, shape);
    if (design.Lambda_hat.rows() != l_bar.rows()) {
        throw ValidationError("maneuver design does not match the framework layout");
    }
    return DynamicsSpec{ControllerKind::Maneuver, shape.dim(),
                        l_bar - design.kappa * design.Lambda_hat,
                        l_bar * shape.reference().stacked()};
}

DynamicsSpec faulty_dynamics(const Graph& g, const ReferenceShape& shape,
                             const SensorModel& model) {
    const Eigen::MatrixXd l_bar = lifted_laplacian(g, shape);
    if (model.agent_count() != g.node_count() || model.dim() != shape.dim()) {
        throw ValidationError("sensor model does not match the framework layout");
    }
    return DynamicsSpec{ControllerKind::Faulty, shape.dim(),
                        build_sensor_matrix(model) * l_bar,
                        l_bar * shape.reference().stacked()};
}

Trajectory simulate(const DynamicsSpec& spec, const Configuration& p0, double dt,
                    double t_final) {
    if (!(dt > 0.0)) {
        throw ValidationError("dt must be positive");
    }
    if (!(t_final >= dt)) {
        throw ValidationError("t_final must be at least one step");
    }
    if (p0.dim() != spec.dim || p0.stacked().size() != spec.system.rows()) {
        throw ValidationError("initial configuration does not match the dynamics");
    }

    // Explicit integration only tolerates steps well inside the fastest mode.
    Eigen::EigenSolver<Eigen::MatrixXd> eig(spec.system, false);
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigensolver failed on the system matrix while sizing dt");
    }
    const double max_abs_re = eig.eigenvalues().real().cwiseAbs().maxCoeff();
    if (max_abs_re > 0.0) {
        const double dt_max = 1.0 / (2.0 * max_abs_re);
        if (dt > dt_max) {
            std::ostringstream msg;
            msg << "dt = " << dt << " exceeds the stable step bound " << dt_max
                << " (1 / (2 max|Re lambda|)); suggested dt = " << 0.5 * dt_max;
            throw NumericError(msg.str());
        }
    }

    const long steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
    const auto rhs = [&spec](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return spec.forcing - spec.system * x;
    };

    Trajectory traj;
    traj.dt = dt;
    traj.times.reserve(static_cast<std::size_t>(steps) + 1);
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.velocities.reserve(static_cast<std::size_t>(steps) + 1);

    Eigen::VectorXd p = p0.stacked();
    traj.times.push_back(0.0);
    traj.states.push_back(p);
    traj.velocities.push_back(rhs(p));

    for (long k = 1; k <= steps; ++k) {
        const Eigen::VectorXd k1 = rhs(p);
        const Eigen::VectorXd k2 = rhs(p + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = rhs(p + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = rhs(p + dt * k3);
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!p.allFinite() || p.norm() > 1e12) {
            traj.diverged = true;
            traj.divergence_step = k;
            traj.divergence_time = static_cast<double>(k) * dt;
            break;
        }
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(p);
        traj.velocities.push_back(rhs(p));
    }
    return traj;
}

ConvergenceMetrics convergence_metrics(const Trajectory& traj, const Graph& g,
                                       const RelPosStack& z_ref,
                                       const Eigen::VectorXd& v_ref) {
    if (traj.states.empty()) {
        throw ValidationError("empty trajectory");
    }
    const int m = z_ref.dim;
    if (v_ref.size() != m) {
        throw ValidationError("reference velocity dimension does not match z_ref");
    }
    const int n = g.node_count();
    const Eigen::VectorXd v_ref_stack = tile(v_ref, n);

    ConvergenceMetrics metrics;
    metrics.shape_error.reserve(traj.states.size());
    metrics.velocity_error.reserve(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const RelPosStack z = relative_positions(g, Configuration(m, traj.states[k]));
        metrics.shape_error.push_back((z.z - z_ref.z).norm());
        metrics.velocity_error.push_back((traj.velocities[k] - v_ref_stack).norm());
    }
    metrics.final_shape_error = metrics.shape_error.back();
    metrics.final_velocity_error = metrics.velocity_error.back();
    metrics.threshold = 1e-3 * std::max(1.0, z_ref.z.norm());
    metrics.settled = !traj.diverged && metrics.final_shape_error < metrics.threshold &&
                      metrics.final_velocity_error < metrics.threshold;

    metrics.settling_time = std::numeric_limits<double>::quiet_NaN();
    if (metrics.settled) {
        std::size_t first = traj.states.size();
        for (std::size_t k = traj.states.size(); k-- > 0;) {
            if (metrics.shape_error[k] < metrics.threshold &&
                metrics.velocity_error[k] < metrics.threshold) {
                first = k;
            } else {
                break;
            }
        }
        if (first < traj.states.size()) {
            metrics.settling_time = traj.times[first];
        }
    }
    return metrics;
}

}  // namespace formlab
