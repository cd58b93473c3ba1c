#include "formlab/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

namespace formlab {

Graph Graph::create(int node_count, const std::vector<std::pair<int, int>>& edges_one_based,
                    const std::vector<double>& weights) {
    if (node_count < 2) {
        throw ValidationError("graph needs at least 2 nodes, got " +
                              std::to_string(node_count));
    }
    if (!weights.empty() && weights.size() != edges_one_based.size()) {
        throw ValidationError("weight count " + std::to_string(weights.size()) +
                              " does not match edge count " +
                              std::to_string(edges_one_based.size()));
    }

    Graph g;
    g.n_ = node_count;
    g.edges_.reserve(edges_one_based.size());
    g.weights_.resize(static_cast<Eigen::Index>(edges_one_based.size()));

    std::set<std::pair<int, int>> seen;  // undirected, normalized (min,max)
    for (std::size_t k = 0; k < edges_one_based.size(); ++k) {
        const auto [tail, head] = edges_one_based[k];
        std::ostringstream label;
        label << "edge " << k + 1 << " = (" << tail << "," << head << ")";
        if (tail < 1 || tail > node_count || head < 1 || head > node_count) {
            throw ValidationError(label.str() + ": node index out of range [1.." +
                                  std::to_string(node_count) + "]");
        }
        if (tail == head) {
            throw ValidationError(label.str() + ": self-loop");
        }
        const auto key = std::minmax(tail, head);
        if (!seen.insert(key).second) {
            throw ValidationError(label.str() + ": duplicate undirected edge {" +
                                  std::to_string(key.first) + "," +
                                  std::to_string(key.second) + "}");
        }
        const double w = weights.empty() ? 1.0 : weights[k];
        if (!(w > 0.0)) {
            throw ValidationError(label.str() + ": weight must be positive, got " +
                                  std::to_string(w));
        }
        g.edges_.push_back(Edge{tail - 1, head - 1});
        g.weights_(static_cast<Eigen::Index>(k)) = w;
    }
    return g;
}

std::vector<int> Graph::neighbors(int node) const {
    std::vector<int> out;
    for (const Edge& e : edges_) {
        if (e.tail == node) out.push_back(e.head);
        if (e.head == node) out.push_back(e.tail);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool Graph::adjacent(int i, int j) const {
    for (const Edge& e : edges_) {
        if ((e.tail == i && e.head == j) || (e.tail == j && e.head == i)) return true;
    }
    return false;
}

Eigen::MatrixXd build_incidence(const Graph& g) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(g.node_count(), g.edge_count());
    for (int k = 0; k < g.edge_count(); ++k) {
        b(g.edges()[k].tail, k) = 1.0;
        b(g.edges()[k].head, k) = -1.0;
    }
    return b;
}

Eigen::MatrixXd build_laplacian(const Graph& g) {
    const int n = g.node_count();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < g.edge_count(); ++k) {
        const Edge& e = g.edges()[k];
        const double w = g.weights()(k);
        l(e.tail, e.tail) += w;
        l(e.head, e.head) += w;
        l(e.tail, e.head) -= w;
        l(e.head, e.tail) -= w;
    }
    return l;
}

GraphClass classify_graph(const Graph& g) {
    const int n = g.node_count();
    std::vector<std::vector<int>> adj(n);
    for (const Edge& e : g.edges()) {
        adj[e.tail].push_back(e.head);
        adj[e.head].push_back(e.tail);
    }
    std::vector<bool> visited(n, false);
    std::vector<int> stack{0};
    visited[0] = true;
    int reached = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[v]) {
            if (!visited[w]) {
                visited[w] = true;
                ++reached;
                stack.push_back(w);
            }
        }
    }
    GraphClass out;
    out.connected = (reached == n);
    out.tree = out.connected && (g.edge_count() == n - 1);
    return out;
}

}  // namespace formlab
