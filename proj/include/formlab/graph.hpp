#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "formlab/errors.hpp"

namespace formlab {

// Directed edge of the underlying undirected graph. The orientation is fixed
// at ingestion (first element = tail, second = head) and all downstream
// formulas are consistent with it. Indices are 0-based internally.
struct Edge {
    int tail = 0;
    int head = 0;
};

// Undirected graph with an ordered edge set and strictly positive symmetric
// weights. Construct through create(), which validates and converts the
// 1-based node indices used by scenario files and error messages.
class Graph {
public:
    // edges_one_based: ordered (tail, head) pairs, nodes in [1..node_count].
    // weights: one positive value per edge; empty means all ones.
    static Graph create(int node_count,
                        const std::vector<std::pair<int, int>>& edges_one_based,
                        const std::vector<double>& weights = {});

    int node_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    // Neighbor node indices of `node` (0-based), ascending.
    std::vector<int> neighbors(int node) const;
    bool adjacent(int i, int j) const;

private:
    Graph() = default;

    int n_ = 0;
    std::vector<Edge> edges_;
    Eigen::VectorXd weights_;
};

struct GraphClass {
    bool connected = false;
    bool tree = false;
};

// Incidence matrix B (n x |E|): +1 at the tail, -1 at the head of each edge.
Eigen::MatrixXd build_incidence(const Graph& g);

// Weighted Laplacian assembled entry-wise from the neighbor weights. The
// identity L = B D_w B^T is not used here so tests can check both routes
// against each other.
Eigen::MatrixXd build_laplacian(const Graph& g);

// connected: single component by traversal; tree: connected and |E| = n-1.
GraphClass classify_graph(const Graph& g);

}  // namespace formlab
