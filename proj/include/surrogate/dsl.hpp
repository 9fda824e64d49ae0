#pragma once

#include <map>
#include <string>
#include <string_view>

#include "surrogate/covariance.hpp"
#include "surrogate/graph.hpp"
#include "surrogate/sem.hpp"

namespace surrogate::dsl {

using graph::BidirectedEdge;
using graph::DirectedEdge;
using graph::PathDiagram;

/// A parsed `.pd` file.
///
///     # comment
///     observed Z X U W T
///     latent Y
///     Z -> X : 0.5
///     X <-> Y : 0.1
///
/// Directed annotations are path coefficients; bidirected annotations are
/// error covariances.
struct GraphDocument {
  std::string source;
  PathDiagram diagram;
  std::map<DirectedEdge, double> coefficients;
  std::map<BidirectedEdge, double> error_covariances;

  bool has_complete_coefficients() const;

  /// Unit-variance SEM from the annotations. Throws Error(Parse) when any
  /// directed edge lacks a coefficient.
  sem::LinearSEM to_sem() const;

  bool operator==(const GraphDocument& o) const {
    return diagram == o.diagram && coefficients == o.coefficients &&
           error_covariances == o.error_covariances;
  }
};

/// Throws Error(Parse) with "line L, column C: ..." on undeclared names,
/// duplicate vertices or edges, self-loops, cycles, malformed numbers and
/// unknown syntax.
GraphDocument parse_graph(std::string_view text);

/// Canonical text form; parse_graph(print_graph(d)) == d.
std::string print_graph(const GraphDocument& doc);
std::string print_graph(const PathDiagram& g);

/// `{"labels": [...], "matrix": [[...], ...]}`, numbers at 17 significant digits.
std::string write_covariance(const LabeledCovariance& cov);
LabeledCovariance read_covariance(std::string_view json_text);

std::string format_double(double v);

}  // namespace surrogate::dsl
