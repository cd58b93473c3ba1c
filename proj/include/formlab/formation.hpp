#pragma once

#include <Eigen/Dense>

#include "formlab/graph.hpp"

namespace formlab {

// Stacked configuration of agent positions: agent i occupies the slice
// [i*dim, (i+1)*dim) of the flat vector. The flat layout matches all the
// compact-form equations, so nothing ever gets reshaped.
class Configuration {
public:
    Configuration(int dim, Eigen::VectorXd stacked);

    int dim() const { return dim_; }
    int agent_count() const { return static_cast<int>(stacked_.size()) / dim_; }
    const Eigen::VectorXd& stacked() const { return stacked_; }
    Eigen::VectorXd agent(int i) const { return stacked_.segment(i * dim_, dim_); }

private:
    int dim_;
    Eigen::VectorXd stacked_;
};

// Reference shape p* split into its center of mass and the centered part:
// p* = (1_n ⊗ p_cm) + p*_c, with the centered part summing to zero per axis.
class ReferenceShape {
public:
    const Configuration& reference() const { return reference_; }
    const Eigen::VectorXd& center_of_mass() const { return center_of_mass_; }
    const Eigen::VectorXd& centered() const { return centered_; }
    int dim() const { return reference_.dim(); }
    int agent_count() const { return reference_.agent_count(); }

    friend ReferenceShape decompose_reference(const Configuration& p_star);

private:
    ReferenceShape(Configuration reference, Eigen::VectorXd center_of_mass,
                   Eigen::VectorXd centered)
        : reference_(std::move(reference)),
          center_of_mass_(std::move(center_of_mass)),
          centered_(std::move(centered)) {}

    Configuration reference_;
    Eigen::VectorXd center_of_mass_;
    Eigen::VectorXd centered_;
};

// Stacked relative positions z = B̄^T p; block k is p_tail(k) - p_head(k).
struct RelPosStack {
    int dim = 0;
    Eigen::VectorXd z;

    int edge_count() const { return static_cast<int>(z.size()) / dim; }
    Eigen::VectorXd edge(int k) const { return z.segment(k * dim, dim); }
};

ReferenceShape decompose_reference(const Configuration& p_star);

RelPosStack relative_positions(const Graph& g, const Configuration& p);

struct ShapeMembership {
    bool in_shape = false;
    Eigen::VectorXd offset;  // common translation b
    double residual = 0.0;   // ||(p - p*) - 1_n ⊗ b||
};

// Tests whether p is a pure translation of the reference shape.
ShapeMembership shape_membership(const Configuration& p, const ReferenceShape& shape,
                                 double tol);

// 1e-6 * max(1, ||z*||): scale-relative default for shape_membership.
double default_shape_tolerance(const Graph& g, const ReferenceShape& shape);

}  // namespace formlab
