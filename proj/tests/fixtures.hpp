#pragma once

// Agent families and graphs used across the test suites.

#include <algorithm>
#include <random>
#include <vector>

#include "synctool/graph.hpp"
#include "synctool/homog.hpp"
#include "synctool/lti.hpp"

namespace fixtures {

using synctool::Matrix;
using synctool::lti::AgentModel;

inline Matrix mat(int r, int c, std::initializer_list<double> v) {
  Matrix m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

// Four-state chain with two inputs.
inline AgentModel family1() {
  return AgentModel(mat(4, 4, {0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0}),
                    mat(4, 2, {0, 1, 0, 0, 1, 0, 0, 1}), mat(1, 4, {1, 0, 0, 0}), mat(4, 1, {1, 1, 0, 0}),
                    Matrix::Identity(4, 4));
}

// Triple integrator.
inline AgentModel family2() {
  return AgentModel(mat(3, 3, {0, 1, 0, 0, 0, 1, 0, 0, 0}), mat(3, 1, {0, 0, 1}), mat(1, 3, {1, 0, 0}),
                    mat(3, 1, {1, 1, 0}), Matrix::Identity(3, 3));
}

// Five states, two inputs, unstable open loop.
inline AgentModel family3() {
  return AgentModel(mat(5, 5, {-1, 0, 0, -1, 0, 0, 0, 1, 1, 0, 0, 1, -1, 1, 0, 0, 0, 0, 1, 1, -1, 1, 0, 1, 1}),
                    mat(5, 2, {0, 0, 0, 0, 0, 1, 0, 0, 1, 0}), mat(1, 5, {0, 0, 0, 1, 0}),
                    mat(5, 1, {1, 1, 0, 0, 0}), Matrix::Identity(5, 5));
}

// Companion form with characteristic polynomial s^3 - s - 1.
inline AgentModel family5() {
  return AgentModel(mat(3, 3, {0, 1, 0, 0, 0, 1, 1, 1, 0}), mat(3, 1, {0, 0, 1}), mat(1, 3, {1, 0, 0}),
                    mat(3, 1, {1, 0, 0}), Matrix::Identity(3, 3));
}

// Family of agent k (1-based) in the ten-agent example set.
inline AgentModel example_agent(int k) {
  switch (k) {
    case 1:
    case 6:
      return family1();
    case 2:
    case 7:
      return family2();
    case 5:
    case 10:
      return family5();
    default:
      return family3();
  }
}

inline synctool::homog::TargetModel example_target() {
  return synctool::homog::build_target(1, 3, mat(1, 3, {0, -1, 0}));
}

// Edges are (to, from) pairs, one-based, unit weights.
inline synctool::graph::CommGraph graph_from_pairs(int n, std::initializer_list<std::pair<int, int>> pairs) {
  std::vector<synctool::graph::Edge> edges;
  for (auto [to, from] : pairs) edges.push_back({from - 1, to - 1, 1.0});
  return synctool::graph::CommGraph::from_edges(n, edges);
}

inline synctool::graph::CommGraph case1_graph() { return graph_from_pairs(4, {{1, 4}, {2, 1}, {3, 1}, {4, 2}}); }

inline synctool::graph::CommGraph case2_graph() {
  return graph_from_pairs(10, {{2, 1}, {5, 10}, {3, 2}, {4, 3}, {5, 4}, {6, 5}, {7, 6}, {8, 7}, {9, 8}, {10, 9}, {1, 5}});
}

// Random digraph with a spanning tree: node k > 0 (after a random relabeling)
// hears from a random earlier node, plus `extra` random edges; weights in
// [0.5, 2].
inline synctool::graph::CommGraph random_rooted_graph(int n, int extra, std::mt19937_64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  Matrix a = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> parent(0, k - 1);
    a(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(parent(rng))]) = w(rng);
  }
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int e = 0; e < extra; ++e) {
    const int i = node(rng), j = node(rng);
    if (i != j) a(i, j) = w(rng);
  }
  return synctool::graph::CommGraph(a);
}

}  // namespace fixtures
