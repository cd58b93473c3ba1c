#pragma once

#include <vector>

#include <Eigen/Dense>

#include "formlab/formation.hpp"
#include "formlab/graph.hpp"
#include "formlab/maneuver.hpp"

namespace formlab {

// Per-agent sensing defects: a positive scale factor and a proper rotation
// (misalignment) applied multiplicatively to every relative position the
// agent measures.
class SensorModel {
public:
    static SensorModel create(Eigen::VectorXd scales, std::vector<Eigen::MatrixXd> rotations);
    // 2D convenience: one misalignment angle (radians) per agent.
    static SensorModel from_angles(const Eigen::VectorXd& scales, const Eigen::VectorXd& angles);
    static SensorModel identity(int agent_count, int dim);

    int agent_count() const { return static_cast<int>(scales_.size()); }
    int dim() const { return static_cast<int>(rotations_.front().rows()); }
    const Eigen::VectorXd& scales() const { return scales_; }
    const std::vector<Eigen::MatrixXd>& rotations() const { return rotations_; }

private:
    SensorModel(Eigen::VectorXd scales, std::vector<Eigen::MatrixXd> rotations)
        : scales_(std::move(scales)), rotations_(std::move(rotations)) {}

    Eigen::VectorXd scales_;
    std::vector<Eigen::MatrixXd> rotations_;
};

// D_x: block-diagonal with block i = a_i * R_i. Always invertible.
Eigen::MatrixXd build_sensor_matrix(const SensorModel& model);

// Closed-form steady state of the faulty loop on a tree framework.
struct RobustnessPrediction {
    RelPosStack z_tilde;          // distorted relative positions ž*
    Eigen::VectorXd v_tilde;      // residual drift velocity ṽ*
    Eigen::MatrixXd M_breve;      // drift-generating matrix M̆
    Configuration p_tilde;        // distorted shape, re-centered at its c.m.
    double consistency_residual;  // max deviation of the agent drift blocks
    bool realizable = false;      // spectrum of D_x L̄ supports convergence
    SpectrumReport loop_spectrum;
};

RobustnessPrediction predict_distortion(const Graph& g, const ReferenceShape& shape,
                                        const SensorModel& model);

// u = -D_x L̄ p + L̄ p*.
Eigen::VectorXd faulty_control(const Configuration& p, const Graph& g,
                               const ReferenceShape& shape, const Eigen::MatrixXd& D_x);

// Hand-derived two-agent special case: agent 1 perfect, agent 2 with scale a.
struct TwoAgentResidual {
    Eigen::VectorXd z_tilde_12;  // 2 z*_12 / (a+1)
    Eigen::VectorXd v_residual;  // (a-1)/(a+1) z*_12
};
TwoAgentResidual two_agent_residual(double a, const Eigen::VectorXd& z_star_12);

}  // namespace formlab
