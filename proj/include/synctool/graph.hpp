#pragma once

// Weighted directed communication graphs and the Laplacian variants used by
// the protocols. Agent indices are zero-based in code; scenario files use
// one-based indices.

#include <vector>

#include "synctool/state_space.hpp"

namespace synctool::graph {

struct Edge {
  int from = 0;  // j
  int to = 0;    // i, so that a_ij = weight
  double weight = 1.0;
};

// Adjacency matrix A = [a_ij]; a_ij > 0 means agent i receives from agent j.
class CommGraph {
 public:
  explicit CommGraph(int n_agents);
  explicit CommGraph(Matrix weights);
  static CommGraph from_edges(int n_agents, const std::vector<Edge>& edges);

  int size() const { return static_cast<int>(weights_.rows()); }
  const Matrix& weights() const { return weights_; }
  double weight(int to, int from) const { return weights_(to, from); }
  std::vector<Edge> edges() const;

  // Flags the agents reachable from any of `sources` along directed edges.
  std::vector<bool> reachable_from(const std::vector<int>& sources) const;

  // Relabels agents: new index k corresponds to old index perm[k].
  CommGraph permuted(const std::vector<int>& perm) const;

 private:
  Matrix weights_;
};

// Root set C with flags iota_i = 1 iff i is in C.
class RootSet {
 public:
  RootSet(int n_agents, std::vector<int> members);

  int size() const { return static_cast<int>(flags_.size()); }
  const std::vector<int>& members() const { return members_; }
  bool iota(int i) const { return flags_.at(static_cast<std::size_t>(i)); }
  std::vector<double> iota_vector() const;

 private:
  std::vector<int> members_;
  std::vector<bool> flags_;
};

Matrix laplacian(const CommGraph& g);

bool has_spanning_tree(const CommGraph& g);

// l_hat_ij = l_ij - l_Nj for i, j < N (differences against the last agent).
Matrix reduced_laplacian(const Matrix& l);

// L + diag(iota).
Matrix expanded_laplacian(const Matrix& l, const RootSet& r);

bool root_set_covers(const CommGraph& g, const RootSet& r);

}  // namespace synctool::graph
