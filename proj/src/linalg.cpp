#include "formlab/linalg.hpp"

#include <algorithm>

namespace formlab {

Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& a, int m) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() * m, a.cols() * m);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            if (a(r, c) != 0.0) {
                for (int k = 0; k < m; ++k) {
                    out(r * m + k, c * m + k) = a(r, c);
                }
            }
        }
    }
    return out;
}

Eigen::VectorXd tile(const Eigen::VectorXd& v, int count) {
    Eigen::VectorXd out(v.size() * count);
    for (int i = 0; i < count; ++i) {
        out.segment(i * v.size(), v.size()) = v;
    }
    return out;
}

double spectral_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
}

double eig_zero_tol(const Eigen::MatrixXd& a) {
    return 1e-9 * std::max(1.0, spectral_norm(a));
}

}  // namespace formlab
