#pragma once

#include <vector>

#include <Eigen/Dense>

#include "formlab/formation.hpp"
#include "formlab/graph.hpp"
#include "formlab/maneuver.hpp"
#include "formlab/robustness.hpp"

namespace formlab {

enum class ControllerKind { Nominal, Maneuver, Faulty };

// All three controllers give an affine closed loop pdot = -system*p + forcing.
struct DynamicsSpec {
    ControllerKind kind = ControllerKind::Nominal;
    int dim = 0;
    Eigen::MatrixXd system;
    Eigen::VectorXd forcing;
};

DynamicsSpec nominal_dynamics(const Graph& g, const ReferenceShape& shape);
DynamicsSpec maneuver_dynamics(const Graph& g, const ReferenceShape& shape,
                               const ManeuverDesign& design);
DynamicsSpec faulty_dynamics(const Graph& g, const ReferenceShape& shape,
                             const SensorModel& model);

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> velocities;  // exact u(p(t_k)), not differences
    bool diverged = false;
    long divergence_step = -1;
    double divergence_time = 0.0;
};

// Classic fixed-step RK4. Rejects dt above 1/(2 max|Re lambda|) of the system
// matrix with a suggested step. A state that leaves ||p|| <= 1e12 (or goes
// non-finite) stops the run and is reported through the diverged fields.
Trajectory simulate(const DynamicsSpec& spec, const Configuration& p0, double dt,
                    double t_final);

struct ConvergenceMetrics {
    std::vector<double> shape_error;     // ||z(t) - z_ref||
    std::vector<double> velocity_error;  // ||pdot(t) - 1_n ⊗ v_ref||
    double final_shape_error = 0.0;
    double final_velocity_error = 0.0;
    double threshold = 0.0;  // 1e-3 * max(1, ||z_ref||)
    bool settled = false;
    double settling_time = 0.0;  // NaN when the run never settles
};

ConvergenceMetrics convergence_metrics(const Trajectory& traj, const Graph& g,
                                       const RelPosStack& z_ref,
                                       const Eigen::VectorXd& v_ref);

}  // namespace formlab
