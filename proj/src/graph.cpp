#include "synctool/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "synctool/errors.hpp"

namespace synctool::graph {

CommGraph::CommGraph(int n_agents) {
  if (n_agents < 1) throw contract_error("a graph needs at least one agent");
  weights_ = Matrix::Zero(n_agents, n_agents);
}

CommGraph::CommGraph(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() < 1) {
    throw dimension_error("adjacency matrix must be square and nonempty");
  }
  if (!weights_.allFinite()) throw contract_error("adjacency weights must be finite");
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    if (weights_(i, i) != 0.0) {
      throw contract_error("self-loops are not allowed (a_ii must be 0)");
    }
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      if (weights_(i, j) < 0.0) throw contract_error("adjacency weights must be nonnegative");
    }
  }
}

CommGraph CommGraph::from_edges(int n_agents, const std::vector<Edge>& edges) {
  if (n_agents < 1) throw contract_error("a graph needs at least one agent");
  Matrix w = Matrix::Zero(n_agents, n_agents);
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= n_agents || e.to < 0 || e.to >= n_agents) {
      std::ostringstream os;
      os << "edge (" << e.from + 1 << " -> " << e.to + 1 << ") references an agent outside 1.."
         << n_agents;
      throw contract_error(os.str());
    }
    w(e.to, e.from) += e.weight;
  }
  return CommGraph(std::move(w));
}

std::vector<Edge> CommGraph::edges() const {
  std::vector<Edge> out;
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      if (weights_(i, j) != 0.0) {
        out.push_back(Edge{static_cast<int>(j), static_cast<int>(i), weights_(i, j)});
      }
    }
  }
  return out;
}

std::vector<bool> CommGraph::reachable_from(const std::vector<int>& sources) const {
  const int n = size();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::deque<int> queue;
  for (int s : sources) {
    if (s < 0 || s >= n) throw contract_error("reachability source out of range");
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const int j = queue.front();
    queue.pop_front();
    // Edge j -> i exists when a_ij != 0.
    for (int i = 0; i < n; ++i) {
      if (weights_(i, j) != 0.0 && !seen[static_cast<std::size_t>(i)]) {
        seen[static_cast<std::size_t>(i)] = true;
        queue.push_back(i);
      }
    }
  }
  return seen;
}

CommGraph CommGraph::permuted(const std::vector<int>& perm) const {
  const int n = size();
  if (static_cast<int>(perm.size()) != n) throw dimension_error("permutation size mismatch");
  Matrix w(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) w(a, b) = weights_(perm[a], perm[b]);
  return CommGraph(std::move(w));
}

RootSet::RootSet(int n_agents, std::vector<int> members)
    : members_(std::move(members)), flags_(static_cast<std::size_t>(n_agents), false) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  for (int m : members_) {
    if (m < 0 || m >= n_agents) throw contract_error("root set member out of range");
    flags_[static_cast<std::size_t>(m)] = true;
  }
}

std::vector<double> RootSet::iota_vector() const {
  std::vector<double> out(flags_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) out[i] = flags_[i] ? 1.0 : 0.0;
  return out;
}

Matrix laplacian(const CommGraph& g) {
  const Matrix& a = g.weights();
  Matrix l = -a;
  l.diagonal() = a.rowwise().sum();
  return l;
}

bool has_spanning_tree(const CommGraph& g) {
  for (int root = 0; root < g.size(); ++root) {
    const auto seen = g.reachable_from({root});
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return true;
  }
  return false;
}

Matrix reduced_laplacian(const Matrix& l) {
  if (l.rows() != l.cols()) throw dimension_error("Laplacian must be square");
  const auto n = l.rows();
  if (n < 2) throw dimension_error("reduced Laplacian needs at least two agents");
  Matrix out = l.topLeftCorner(n - 1, n - 1);
  out.rowwise() -= l.row(n - 1).head(n - 1);
  return out;
}

Matrix expanded_laplacian(const Matrix& l, const RootSet& r) {
  if (l.rows() != l.cols() || l.rows() != r.size()) {
    throw dimension_error("Laplacian and root set sizes differ");
  }
  Matrix out = l;
  for (int i = 0; i < r.size(); ++i) {
    if (r.iota(i)) out(i, i) += 1.0;
  }
  return out;
}

bool root_set_covers(const CommGraph& g, const RootSet& r) {
  if (r.size() != g.size()) throw dimension_error("root set and graph sizes differ");
  if (r.members().empty()) throw contract_error("root set must be nonempty");
  const auto seen = g.reachable_from(r.members());
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

}  // namespace synctool::graph
