#include "surrogate/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <queue>

#include "surrogate/error.hpp"

namespace surrogate::graph {

namespace {

const VertexSet kEmpty;

void require_disjoint(const VertexSet& a, const VertexSet& b, const VertexSet& c) {
  auto overlaps = [](const VertexSet& x, const VertexSet& y) {
    return std::any_of(x.begin(), x.end(), [&](const VertexId& v) { return y.count(v) != 0; });
  };
  if (overlaps(a, b) || overlaps(a, c) || overlaps(b, c)) {
    throw Error(ErrorKind::OverlappingSets,
                "separation query sets must be pairwise disjoint: " + to_string(a) + ", " +
                    to_string(b) + ", " + to_string(c));
  }
}

VertexSet closure(const PathDiagram& g, const VertexSet& start, bool upward) {
  VertexSet seen;
  std::deque<VertexId> frontier;
  for (const auto& v : start) {
    g.require_vertex(v);
    if (seen.insert(v).second) frontier.push_back(v);
  }
  while (!frontier.empty()) {
    VertexId v = frontier.front();
    frontier.pop_front();
    for (const auto& next : upward ? parents_of(g, v) : children_of(g, v)) {
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  return seen;
}

}  // namespace

BidirectedEdge::BidirectedEdge(VertexId x, VertexId y) : a(std::move(x)), b(std::move(y)) {
  if (b < a) std::swap(a, b);
}

bool is_valid_identifier(const std::string& name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name[0]);
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(name.begin() + 1, name.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_';
  });
}

bool PathDiagram::is_latent(const VertexId& v) const {
  require_vertex(v);
  return vertices_.at(v) == Observability::Latent;
}

bool PathDiagram::has_edge(const VertexId& from, const VertexId& to) const {
  return directed_.count(DirectedEdge{from, to}) != 0;
}

bool PathDiagram::has_bidirected(const VertexId& a, const VertexId& b) const {
  return bidirected_.count(BidirectedEdge(a, b)) != 0;
}

VertexSet PathDiagram::vertex_set() const {
  VertexSet out;
  for (const auto& [v, _] : vertices_) out.insert(v);
  return out;
}

VertexSet PathDiagram::observed() const {
  VertexSet out;
  for (const auto& [v, o] : vertices_)
    if (o == Observability::Observed) out.insert(v);
  return out;
}

VertexSet PathDiagram::latent() const {
  VertexSet out;
  for (const auto& [v, o] : vertices_)
    if (o == Observability::Latent) out.insert(v);
  return out;
}

std::vector<VertexId> PathDiagram::topological_order() const {
  std::map<VertexId, std::size_t> indegree;
  for (const auto& [v, _] : vertices_) indegree[v] = parents_.at(v).size();
  std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> ready;
  for (const auto& [v, d] : indegree)
    if (d == 0) ready.push(v);
  std::vector<VertexId> order;
  while (!ready.empty()) {
    VertexId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (const auto& c : children_.at(v))
      if (--indegree[c] == 0) ready.push(c);
  }
  return order;
}

void PathDiagram::require_vertex(const VertexId& v) const {
  if (!has_vertex(v)) throw Error(ErrorKind::UnknownVertex, "unknown vertex '" + v + "'");
}

void PathDiagram::require_vertices(const VertexSet& vs) const {
  for (const auto& v : vs) require_vertex(v);
}

const VertexSet& parents_of(const PathDiagram& g, const VertexId& v) {
  auto it = g.parents_.find(v);
  return it == g.parents_.end() ? kEmpty : it->second;
}

const VertexSet& children_of(const PathDiagram& g, const VertexId& v) {
  auto it = g.children_.find(v);
  return it == g.children_.end() ? kEmpty : it->second;
}

PathDiagram::Builder::Builder(const PathDiagram& start) {
  for (const auto& [v, o] : start.vertices_) vertices_.emplace_back(v, o);
  directed_.assign(start.directed_.begin(), start.directed_.end());
  bidirected_.assign(start.bidirected_.begin(), start.bidirected_.end());
}

PathDiagram::Builder& PathDiagram::Builder::add_vertex(const VertexId& v, Observability o) {
  vertices_.emplace_back(v, o);
  return *this;
}

PathDiagram::Builder& PathDiagram::Builder::add_edge(const VertexId& from, const VertexId& to) {
  directed_.push_back(DirectedEdge{from, to});
  return *this;
}

PathDiagram::Builder& PathDiagram::Builder::add_bidirected(const VertexId& a, const VertexId& b) {
  // Self-loop check needs the raw pair, before normalization.
  if (a == b) throw Error(ErrorKind::InvalidGraph, "self-loop " + a + " <-> " + b);
  bidirected_.emplace_back(a, b);
  return *this;
}

PathDiagram PathDiagram::Builder::build() const {
  PathDiagram g;
  for (const auto& [v, o] : vertices_) {
    if (!is_valid_identifier(v))
      throw Error(ErrorKind::InvalidGraph, "invalid vertex name '" + v + "'");
    if (!g.vertices_.emplace(v, o).second)
      throw Error(ErrorKind::InvalidGraph, "duplicate vertex '" + v + "'");
    g.parents_[v];
    g.children_[v];
  }
  auto endpoint = [&](const VertexId& v) {
    if (!g.has_vertex(v)) throw Error(ErrorKind::InvalidGraph, "undeclared vertex '" + v + "'");
  };
  for (const auto& e : directed_) {
    endpoint(e.from);
    endpoint(e.to);
    if (e.from == e.to) throw Error(ErrorKind::InvalidGraph, "self-loop " + e.from + " -> " + e.to);
    if (!g.directed_.insert(e).second)
      throw Error(ErrorKind::InvalidGraph, "duplicate edge " + e.from + " -> " + e.to);
    g.parents_[e.to].insert(e.from);
    g.children_[e.from].insert(e.to);
  }
  for (const auto& e : bidirected_) {
    endpoint(e.a);
    endpoint(e.b);
    if (e.a == e.b) throw Error(ErrorKind::InvalidGraph, "self-loop " + e.a + " <-> " + e.b);
    if (!g.bidirected_.insert(e).second)
      throw Error(ErrorKind::InvalidGraph, "duplicate edge " + e.a + " <-> " + e.b);
  }
  if (g.topological_order().size() != g.vertices_.size())
    throw Error(ErrorKind::InvalidGraph, "directed edges contain a cycle");
  return g;
}

UndirectedGraph::UndirectedGraph(VertexSet vertices) : vertices_(std::move(vertices)) {
  for (const auto& v : vertices_) adjacency_[v];
}

void UndirectedGraph::add_edge(const VertexId& a, const VertexId& b) {
  if (a == b) throw Error(ErrorKind::InvalidGraph, "self-loop " + a + " - " + b);
  if (!has_vertex(a) || !has_vertex(b))
    throw Error(ErrorKind::UnknownVertex, "edge " + a + " - " + b + " has an unknown endpoint");
  edges_.insert(a < b ? std::pair{a, b} : std::pair{b, a});
  adjacency_[a].insert(b);
  adjacency_[b].insert(a);
}

bool UndirectedGraph::has_edge(const VertexId& a, const VertexId& b) const {
  return edges_.count(a < b ? std::pair{a, b} : std::pair{b, a}) != 0;
}

const VertexSet& UndirectedGraph::neighbors(const VertexId& v) const {
  auto it = adjacency_.find(v);
  if (it == adjacency_.end()) throw Error(ErrorKind::UnknownVertex, "unknown vertex '" + v + "'");
  return it->second;
}

VertexSet relatives(const PathDiagram& g, const VertexId& v, Relation kind) {
  g.require_vertex(v);
  switch (kind) {
    case Relation::Parents: return parents_of(g, v);
    case Relation::Children: return children_of(g, v);
    case Relation::Ancestors: return closure(g, {v}, true);
    case Relation::Descendants: return closure(g, {v}, false);
  }
  return {};
}

VertexSet ancestors(const PathDiagram& g, const VertexSet& vs) { return closure(g, vs, true); }

VertexSet descendants(const PathDiagram& g, const VertexSet& vs) { return closure(g, vs, false); }

PathDiagram canonicalize_latents(const PathDiagram& g) {
  if (g.bidirected_edges().empty()) return g;
  PathDiagram::Builder b;
  for (const auto& [v, o] : g.vertices()) b.add_vertex(v, o);
  for (const auto& e : g.directed_edges()) b.add_edge(e.from, e.to);
  int next = 1;
  for (const auto& e : g.bidirected_edges()) {
    VertexId fresh;
    do {
      fresh = "__L" + std::to_string(next++);
    } while (g.has_vertex(fresh));
    b.add_latent(fresh).add_edge(fresh, e.a).add_edge(fresh, e.b);
  }
  return b.build();
}

PathDiagram delete_outgoing(const PathDiagram& g, const VertexSet& tails) {
  g.require_vertices(tails);
  PathDiagram::Builder b;
  for (const auto& [v, o] : g.vertices()) b.add_vertex(v, o);
  for (const auto& e : g.directed_edges())
    if (tails.count(e.from) == 0) b.add_edge(e.from, e.to);
  for (const auto& e : g.bidirected_edges()) b.add_bidirected(e.a, e.b);
  return b.build();
}

PathDiagram delete_edge(const PathDiagram& g, const VertexId& from, const VertexId& to) {
  if (!g.has_edge(from, to))
    throw Error(ErrorKind::MissingEdge, "no edge " + from + " -> " + to);
  PathDiagram::Builder b;
  for (const auto& [v, o] : g.vertices()) b.add_vertex(v, o);
  for (const auto& e : g.directed_edges())
    if (!(e.from == from && e.to == to)) b.add_edge(e.from, e.to);
  for (const auto& e : g.bidirected_edges()) b.add_bidirected(e.a, e.b);
  return b.build();
}

UndirectedGraph moralize(const PathDiagram& g, const VertexSet& s) {
  g.require_vertices(s);
  const PathDiagram dag = canonicalize_latents(g);
  const VertexSet keep = ancestors(dag, s);
  UndirectedGraph h(keep);
  for (const auto& v : keep) {
    // Parents of an ancestor are ancestors, so no filtering is needed.
    const VertexSet& pa = parents_of(dag, v);
    for (const auto& p : pa) h.add_edge(p, v);
    for (auto i = pa.begin(); i != pa.end(); ++i)
      for (auto j = std::next(i); j != pa.end(); ++j) h.add_edge(*i, *j);
  }
  return h;
}

bool u_separates(const UndirectedGraph& h, const VertexSet& a, const VertexSet& b,
                 const VertexSet& c) {
  require_disjoint(a, b, c);
  for (const auto* set : {&a, &b, &c})
    for (const auto& v : *set)
      if (!h.has_vertex(v)) throw Error(ErrorKind::UnknownVertex, "unknown vertex '" + v + "'");
  if (a.empty() || b.empty()) return true;

  VertexSet seen(a.begin(), a.end());
  std::deque<VertexId> frontier(a.begin(), a.end());
  while (!frontier.empty()) {
    VertexId v = frontier.front();
    frontier.pop_front();
    for (const auto& n : h.neighbors(v)) {
      if (c.count(n) || seen.count(n)) continue;
      if (b.count(n)) return false;
      seen.insert(n);
      frontier.push_back(n);
    }
  }
  return true;
}

bool d_separates(const PathDiagram& g, const VertexSet& a, const VertexSet& b,
                 const VertexSet& c) {
  require_disjoint(a, b, c);
  g.require_vertices(a);
  g.require_vertices(b);
  g.require_vertices(c);
  if (a.empty() || b.empty()) return true;
  VertexSet all = a;
  all.insert(b.begin(), b.end());
  all.insert(c.begin(), c.end());
  return u_separates(moralize(g, all), a, b, c);
}

bool connected(const UndirectedGraph& h, const VertexId& a, const VertexId& b) {
  if (a == b) return h.has_vertex(a);
  return !u_separates(h, {a}, {b}, {});
}

std::string to_string(const VertexSet& vs) {
  std::string out = "{";
  for (const auto& v : vs) {
    if (out.size() > 1) out += ",";
    out += v;
  }
  return out + "}";
}

}  // namespace surrogate::graph
