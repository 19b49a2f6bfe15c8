#pragma once

#include <algorithm>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "dato/common.hpp"

namespace dato {

/// Undirected communication topology shared by the estimator and the
/// optimizer. Edges are stored once per unordered pair, sorted
/// lexicographically, so per-edge quantities (adaptive gains, incidence
/// columns) have a stable index. Immutable after construction.
class Graph {
 public:
  /// Builds a graph on nodes {0, ..., n_nodes-1}. Self-loops are rejected,
  /// duplicate and reversed pairs are merged. With require_connected (the
  /// default, and mandatory for simulation use) a disconnected input throws.
  Graph(int n_nodes, const std::vector<std::pair<int, int>>& edge_list,
        bool require_connected = true)
      : n_(n_nodes) {
    if (n_ < 1) throw config_error("graph: need at least one node");
    std::set<std::pair<int, int>> canon;
    for (auto [a, b] : edge_list) {
      if (a < 0 || b < 0 || a >= n_ || b >= n_)
        throw config_error("graph: edge endpoint out of range");
      if (a == b) throw config_error("graph: self-loops are not allowed");
      canon.insert({std::min(a, b), std::max(a, b)});
    }
    edges_.assign(canon.begin(), canon.end());
    nbrs_.assign(n_, {});
    for (auto [a, b] : edges_) {
      nbrs_[a].push_back(b);
      nbrs_[b].push_back(a);
    }
    for (auto& list : nbrs_) std::sort(list.begin(), list.end());
    if (require_connected && !is_connected())
      throw config_error("graph: topology is not connected");
  }

  /// Cycle 0-1-...-(n-1)-0. Needs n >= 3 so the cycle is simple.
  static Graph ring(int n) {
    if (n < 3) throw config_error("ring graph: need at least 3 nodes");
    std::vector<std::pair<int, int>> e;
    e.reserve(n);
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, e);
  }

  static Graph complete(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, e);
  }

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return nbrs_[i]; }
  int degree(int i) const { return static_cast<int>(nbrs_[i].size()); }

  /// L with l_ii = deg(i), l_ij = -1 on edges; row sums are zero and
  /// L is positive semidefinite.
  DenseMatrix laplacian() const {
    DenseMatrix l = DenseMatrix::Zero(n_, n_);
    for (auto [a, b] : edges_) {
      l(a, a) += 1.0;
      l(b, b) += 1.0;
      l(a, b) -= 1.0;
      l(b, a) -= 1.0;
    }
    return l;
  }

  /// N x |E| incidence matrix under the fixed lexicographic orientation:
  /// each edge leaves its smaller endpoint (-1) and enters the larger (+1).
  /// Satisfies laplacian() == D * D^T for any orientation choice.
  DenseMatrix incidence() const {
    DenseMatrix d = DenseMatrix::Zero(n_, num_edges());
    for (int k = 0; k < num_edges(); ++k) {
      d(edges_[k].first, k) = -1.0;
      d(edges_[k].second, k) = 1.0;
    }
    return d;
  }

  /// Second-smallest Laplacian eigenvalue; strictly positive iff connected.
  /// A single node is trivially connected, reported as +infinity.
  double algebraic_connectivity() const {
    if (n_ == 1) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(laplacian(),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1);
  }

  /// Exact reachability check (BFS from node 0).
  bool is_connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : nbrs_[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    return count == n_;
  }

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> nbrs_;
};

}  // namespace dato
