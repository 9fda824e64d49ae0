#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace surrogate::graph {

using VertexId = std::string;
using VertexSet = std::set<VertexId>;

enum class Observability { Observed, Latent };

struct DirectedEdge {
  VertexId from;
  VertexId to;
  auto operator<=>(const DirectedEdge&) const = default;
};

// Stored with a < b so that A<->B and B<->A are the same edge.
struct BidirectedEdge {
  VertexId a;
  VertexId b;
  BidirectedEdge() = default;
  BidirectedEdge(VertexId x, VertexId y);
  auto operator<=>(const BidirectedEdge&) const = default;
};

bool is_valid_identifier(const std::string& name);

/// A DAG over named vertices, each observed or latent, plus optional
/// bidirected edges standing for unobserved common causes.
///
/// Instances are immutable; the transforms below return new diagrams.
class PathDiagram {
 public:
  class Builder;

  PathDiagram() = default;

  const std::map<VertexId, Observability>& vertices() const { return vertices_; }
  const std::set<DirectedEdge>& directed_edges() const { return directed_; }
  const std::set<BidirectedEdge>& bidirected_edges() const { return bidirected_; }

  bool has_vertex(const VertexId& v) const { return vertices_.count(v) != 0; }
  bool is_latent(const VertexId& v) const;
  bool has_edge(const VertexId& from, const VertexId& to) const;
  bool has_bidirected(const VertexId& a, const VertexId& b) const;

  VertexSet vertex_set() const;
  VertexSet observed() const;
  VertexSet latent() const;

  /// Vertices in an order where every parent precedes its children; ties by name.
  std::vector<VertexId> topological_order() const;

  void require_vertex(const VertexId& v) const;
  void require_vertices(const VertexSet& vs) const;

  bool operator==(const PathDiagram&) const = default;

 private:
  std::map<VertexId, Observability> vertices_;
  std::set<DirectedEdge> directed_;
  std::set<BidirectedEdge> bidirected_;
  std::map<VertexId, VertexSet> parents_;
  std::map<VertexId, VertexSet> children_;

  friend class Builder;
  friend const VertexSet& parents_of(const PathDiagram&, const VertexId&);
  friend const VertexSet& children_of(const PathDiagram&, const VertexId&);
};

/// Accumulates vertices and edges; build() validates names, endpoints,
/// duplicates, self-loops and acyclicity, throwing Error(InvalidGraph) on the
/// first violation.
class PathDiagram::Builder {
 public:
  Builder() = default;
  explicit Builder(const PathDiagram& start);

  Builder& add_vertex(const VertexId& v, Observability o = Observability::Observed);
  Builder& add_latent(const VertexId& v) { return add_vertex(v, Observability::Latent); }
  Builder& add_edge(const VertexId& from, const VertexId& to);
  Builder& add_bidirected(const VertexId& a, const VertexId& b);

  PathDiagram build() const;

 private:
  std::vector<std::pair<VertexId, Observability>> vertices_;
  std::vector<DirectedEdge> directed_;
  std::vector<BidirectedEdge> bidirected_;
};

const VertexSet& parents_of(const PathDiagram& g, const VertexId& v);
const VertexSet& children_of(const PathDiagram& g, const VertexId& v);

class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(VertexSet vertices);

  void add_edge(const VertexId& a, const VertexId& b);

  const VertexSet& vertices() const { return vertices_; }
  const std::set<std::pair<VertexId, VertexId>>& edges() const { return edges_; }
  bool has_vertex(const VertexId& v) const { return vertices_.count(v) != 0; }
  bool has_edge(const VertexId& a, const VertexId& b) const;
  const VertexSet& neighbors(const VertexId& v) const;

  bool operator==(const UndirectedGraph& other) const {
    return vertices_ == other.vertices_ && edges_ == other.edges_;
  }

 private:
  VertexSet vertices_;
  std::set<std::pair<VertexId, VertexId>> edges_;
  std::map<VertexId, VertexSet> adjacency_;
};

enum class Relation { Parents, Children, Ancestors, Descendants };

/// Ancestors and descendants include `v` itself.
VertexSet relatives(const PathDiagram& g, const VertexId& v, Relation kind);
VertexSet ancestors(const PathDiagram& g, const VertexSet& vs);
VertexSet descendants(const PathDiagram& g, const VertexSet& vs);

/// Replaces each A<->B by a fresh latent __Lk with __Lk->A and __Lk->B,
/// numbering bidirected edges in sorted order.
PathDiagram canonicalize_latents(const PathDiagram& g);

/// Removes every directed edge whose tail is in `tails`.
PathDiagram delete_outgoing(const PathDiagram& g, const VertexSet& tails);

PathDiagram delete_edge(const PathDiagram& g, const VertexId& from, const VertexId& to);

/// Moral graph of the ancestral closure of `s` in the canonicalized diagram.
UndirectedGraph moralize(const PathDiagram& g, const VertexSet& s);

/// True iff every path in `h` from `a` to `b` meets `c`. Empty `a` or `b`
/// is vacuously separated.
bool u_separates(const UndirectedGraph& h, const VertexSet& a, const VertexSet& b,
                 const VertexSet& c);

bool d_separates(const PathDiagram& g, const VertexSet& a, const VertexSet& b,
                 const VertexSet& c);

/// True iff `a` and `b` lie in the same connected component of `h`.
bool connected(const UndirectedGraph& h, const VertexId& a, const VertexId& b);

std::string to_string(const VertexSet& vs);

}  // namespace surrogate::graph
