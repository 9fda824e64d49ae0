#pragma once

// Independent oracles for the tests. Nothing here calls into moralization or
// the library's separation code.

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "surrogate/covariance.hpp"
#include "surrogate/graph.hpp"
#include "surrogate/sem.hpp"

namespace testsupport {

using surrogate::graph::PathDiagram;
using surrogate::graph::VertexSet;

// d-separation by enumerating every simple path of the skeleton. Bidirected
// edges count as arrowheads at both ends.
inline bool dsep_by_paths(const PathDiagram& g, const VertexSet& a, const VertexSet& b,
                          const VertexSet& c) {
  // adjacency with arrowhead flags: head_at[v][w] is true if the edge between
  // v and w points into w.
  std::map<std::string, std::map<std::string, std::pair<bool, bool>>> adj;  // (into v, into w)
  for (const auto& e : g.directed_edges()) {
    adj[e.from][e.to].second = true;
    adj[e.to][e.from].first = true;
  }
  for (const auto& e : g.bidirected_edges()) {
    adj[e.a][e.b] = {true, true};
    adj[e.b][e.a] = {true, true};
  }
  std::map<std::string, std::set<std::string>> desc;
  for (const auto& [v, o] : g.vertices()) {
    (void)o;
    std::set<std::string> seen{v};
    std::vector<std::string> stack{v};
    while (!stack.empty()) {
      auto cur = stack.back();
      stack.pop_back();
      for (const auto& e : g.directed_edges())
        if (e.from == cur && seen.insert(e.to).second) stack.push_back(e.to);
    }
    desc[v] = seen;
  }
  auto collider_open = [&](const std::string& v) {
    for (const auto& d : desc[v])
      if (c.count(d)) return true;
    return false;
  };

  bool open_found = false;
  std::vector<std::string> path;
  std::set<std::string> on_path;
  std::function<void(const std::string&)> walk = [&](const std::string& v) {
    if (open_found) return;
    if (path.size() > 1 && b.count(v)) {
      // check every interior vertex
      for (std::size_t i = 1; i + 1 < path.size(); ++i) {
        const auto& prev = path[i - 1];
        const auto& mid = path[i];
        const auto& next = path[i + 1];
        bool into_mid_from_prev = adj[prev][mid].second;
        bool into_mid_from_next = adj[next][mid].second;
        bool collider = into_mid_from_prev && into_mid_from_next;
        if (collider ? !collider_open(mid) : c.count(mid) != 0) return;
      }
      open_found = true;
      return;
    }
    for (const auto& [w, flags] : adj[v]) {
      (void)flags;
      if (on_path.count(w)) continue;
      path.push_back(w);
      on_path.insert(w);
      walk(w);
      on_path.erase(w);
      path.pop_back();
    }
  };
  for (const auto& s : a) {
    path = {s};
    on_path = {s};
    walk(s);
    if (open_found) return false;
  }
  return true;
}

// Undirected separation by enumerating simple paths.
inline bool usep_by_paths(const surrogate::graph::UndirectedGraph& h, const VertexSet& a,
                          const VertexSet& b, const VertexSet& c) {
  bool open_found = false;
  std::set<std::string> on_path;
  std::function<void(const std::string&)> walk = [&](const std::string& v) {
    if (open_found) return;
    for (const auto& w : h.neighbors(v)) {
      if (on_path.count(w) || c.count(w)) continue;
      if (b.count(w)) {
        open_found = true;
        return;
      }
      on_path.insert(w);
      walk(w);
      on_path.erase(w);
    }
  };
  for (const auto& s : a) {
    if (b.count(s)) return false;
    on_path = {s};
    walk(s);
    if (open_found) return false;
  }
  return true;
}

inline Eigen::MatrixXd random_pd(surrogate::sem::Rng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

inline surrogate::Labels numbered(const std::string& stem, int n) {
  surrogate::Labels out;
  for (int i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

inline std::vector<std::string> names_of(const PathDiagram& g) {
  const auto vs = g.vertex_set();
  return {vs.begin(), vs.end()};
}

inline std::vector<std::string> pick(surrogate::sem::Rng& rng, std::vector<std::string> pool,
                                     std::size_t k) {
  for (std::size_t i = 0; i < pool.size(); ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  pool.resize(k);
  return pool;
}

// A random diagram that may carry bidirected edges between non-adjacent pairs.
inline PathDiagram random_diagram(surrogate::sem::Rng& rng, std::size_t n, double p_edge,
                                  double p_bi) {
  const PathDiagram dag = surrogate::sem::random_dag(rng, n, p_edge);
  PathDiagram::Builder b(dag);
  const auto order = dag.topological_order();
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j)
      if (!dag.has_edge(order[i], order[j]) && !dag.has_edge(order[j], order[i]) &&
          rng.bernoulli(p_bi))
        b.add_bidirected(order[i], order[j]);
  return b.build();
}

}  // namespace testsupport
