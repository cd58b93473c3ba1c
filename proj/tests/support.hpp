#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "formlab/graph.hpp"
#include "formlab/rng.hpp"

namespace testsupport {

using formlab::Graph;
using formlab::Rng;

// Random tree: node i+1 attaches to a uniformly chosen earlier node, with a
// coin flip on the edge orientation.
inline Graph random_tree(Rng& rng, int n, bool dyadic_weights = false) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 2; i <= n; ++i) {
        const int parent = rng.uniform_int(1, i - 1);
        if (rng.uniform(0.0, 1.0) < 0.5) {
            edges.emplace_back(parent, i);
        } else {
            edges.emplace_back(i, parent);
        }
    }
    std::vector<double> weights;
    if (dyadic_weights) {
        // Multiples of 2^-8: sums stay exact in double arithmetic.
        for (std::size_t k = 0; k < edges.size(); ++k) {
            weights.push_back(rng.uniform_int(1, 1024) / 256.0);
        }
    }
    return Graph::create(n, edges, weights);
}

// Random connected graph: a tree plus extra non-duplicate edges.
inline Graph random_connected(Rng& rng, int n, int extra, bool dyadic_weights = false) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 2; i <= n; ++i) {
        edges.emplace_back(rng.uniform_int(1, i - 1), i);
    }
    auto has_edge = [&edges](int a, int b) {
        for (const auto& [t, h] : edges) {
            if ((t == a && h == b) || (t == b && h == a)) return true;
        }
        return false;
    };
    int attempts = 0;
    while (extra > 0 && attempts < 200) {
        ++attempts;
        const int a = rng.uniform_int(1, n);
        const int b = rng.uniform_int(1, n);
        if (a == b || has_edge(a, b)) continue;
        edges.emplace_back(a, b);
        --extra;
    }
    std::vector<double> weights;
    if (dyadic_weights) {
        for (std::size_t k = 0; k < edges.size(); ++k) {
            weights.push_back(rng.uniform_int(1, 1024) / 256.0);
        }
    }
    return Graph::create(n, edges, weights);
}

inline Eigen::VectorXd random_vector(Rng& rng, int size, double lo, double hi) {
    Eigen::VectorXd out(size);
    for (int i = 0; i < size; ++i) {
        out(i) = rng.uniform(lo, hi);
    }
    return out;
}

inline Eigen::MatrixXd rotation2d(double theta) {
    Eigen::MatrixXd r(2, 2);
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

// Random proper rotation via QR of a random matrix, determinant fixed to +1.
inline Eigen::MatrixXd random_rotation(Rng& rng, int m) {
    Eigen::MatrixXd a(m, m);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            a(r, c) = rng.uniform(-1.0, 1.0);
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    if (q.determinant() < 0.0) {
        q.col(0) *= -1.0;
    }
    return q;
}

// Generic dense Kronecker product (test-side; the library only lifts by I_m).
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
        }
    }
    return out;
}

}  // namespace testsupport
