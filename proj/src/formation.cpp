#include "formlab/formation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "formlab/errors.hpp"
#include "formlab/linalg.hpp"

namespace formlab {

Configuration::Configuration(int dim, Eigen::VectorXd stacked)
    : dim_(dim), stacked_(std::move(stacked)) {
    if (dim_ < 1) {
        throw ValidationError("configuration dimension must be >= 1, got " +
                              std::to_string(dim_));
    }
    if (stacked_.size() == 0 || stacked_.size() % dim_ != 0) {
        throw ValidationError("configuration length " + std::to_string(stacked_.size()) +
                              " is not a nonzero multiple of dim " + std::to_string(dim_));
    }
}

ReferenceShape decompose_reference(const Configuration& p_star) {
    const int m = p_star.dim();
    const int n = p_star.agent_count();
    Eigen::VectorXd cm = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
        cm += p_star.agent(i);
    }
    cm /= static_cast<double>(n);
    Eigen::VectorXd centered = p_star.stacked() - tile(cm, n);
    return ReferenceShape(p_star, std::move(cm), std::move(centered));
}

RelPosStack relative_positions(const Graph& g, const Configuration& p) {
    if (p.agent_count() != g.node_count()) {
        throw ValidationError("configuration has " + std::to_string(p.agent_count()) +
                              " agents but the graph has " +
                              std::to_string(g.node_count()) + " nodes");
    }
    const int m = p.dim();
    RelPosStack out;
    out.dim = m;
    out.z.resize(static_cast<Eigen::Index>(m) * g.edge_count());
    for (int k = 0; k < g.edge_count(); ++k) {
        const Edge& e = g.edges()[k];
        out.z.segment(k * m, m) = p.agent(e.tail) - p.agent(e.head);
    }
    return out;
}

ShapeMembership shape_membership(const Configuration& p, const ReferenceShape& shape,
                                 double tol) {
    if (!(tol > 0.0)) {
        throw ValidationError("membership tolerance must be positive");
    }
    if (p.dim() != shape.dim() || p.agent_count() != shape.agent_count()) {
        throw ValidationError("configuration does not match the reference shape layout");
    }
    const int m = p.dim();
    const int n = p.agent_count();
    const Eigen::VectorXd diff = p.stacked() - shape.reference().stacked();
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
        offset += diff.segment(i * m, m);
    }
    offset /= static_cast<double>(n);

    ShapeMembership out;
    out.offset = offset;
    out.residual = (diff - tile(offset, n)).norm();
    out.in_shape = out.residual <= tol;
    return out;
}

double default_shape_tolerance(const Graph& g, const ReferenceShape& shape) {
    const RelPosStack z_star = relative_positions(g, shape.reference());
    return 1e-6 * std::max(1.0, z_star.z.norm());
}

}  // namespace formlab
