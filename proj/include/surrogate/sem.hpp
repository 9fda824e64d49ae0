#pragma once

#include <cstdint>
#include <map>
#include <random>

#include "surrogate/covariance.hpp"
#include "surrogate/graph.hpp"

namespace surrogate::sem {

using graph::BidirectedEdge;
using graph::DirectedEdge;
using graph::PathDiagram;
using graph::VertexId;

/// Seeded generator for simulation and random model draws.
///
/// Algorithm "mt64-bm/1": std::mt19937_64 seeded with splitmix64(seed),
/// uniforms from the top 53 bits, normals by the Box–Muller transform (both
/// variates of each pair are used). The uniform stream is fixed by the
/// standard; normals go through libm's log and cos, so they match across
/// builds that share a libm.
/// Replicate streams are seeded with splitmix64(seed ^ splitmix64(replicate)).
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt64-bm/1";

  explicit Rng(std::uint64_t seed, std::uint64_t replicate = 0);

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();
  std::size_t index(std::size_t n);       // uniform in [0, n)
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Linear structural equations over a path diagram: each vertex is the
/// coefficient-weighted sum of its parents plus a Gaussian error. Error
/// covariances are nonzero only on the diagonal and on bidirected pairs.
class LinearSEM {
 public:
  /// `error_cov` is keyed by BidirectedEdge-style sorted pairs; (v, v) holds
  /// the error variance of v. Throws Error(InvalidModel) on a missing or zero
  /// coefficient, a coefficient on a non-edge, a missing variance, an
  /// off-diagonal entry without a bidirected edge, or a non-PD error matrix.
  LinearSEM(PathDiagram g, std::map<DirectedEdge, double> coefficients,
            std::map<std::pair<VertexId, VertexId>, double> error_cov);

  /// Solves the error variances so every variable has unit variance, given
  /// the coefficients and the bidirected error covariances.
  static LinearSEM with_unit_variances(PathDiagram g, std::map<DirectedEdge, double> coefficients,
                                       std::map<BidirectedEdge, double> bidirected_cov = {});

  const PathDiagram& graph() const { return graph_; }
  const std::map<DirectedEdge, double>& coefficients() const { return coef_; }
  double coefficient(const VertexId& from, const VertexId& to) const;
  double error_cov(const VertexId& a, const VertexId& b) const;

  /// Vertex order used by the matrix forms below.
  const std::vector<VertexId>& order() const { return order_; }
  /// A(i, j) = coefficient of order()[j] in the equation of order()[i].
  Eigen::MatrixXd coefficient_matrix() const;
  Eigen::MatrixXd error_matrix() const;

 private:
  PathDiagram graph_;
  std::map<DirectedEdge, double> coef_;
  std::map<std::pair<VertexId, VertexId>, double> omega_;
  std::vector<VertexId> order_;
};

/// (I − A)⁻¹ Ω (I − A)⁻ᵀ over every vertex, latent included, in topological order.
LabeledCovariance implied_covariance(const LinearSEM& m);

/// Rescales every variable to unit implied variance.
LinearSEM standardize(const LinearSEM& m);

/// Sum over directed paths x → … → y of coefficient products; checked
/// against (I − A)⁻¹ and throws Error(InvalidModel) if they disagree by
/// more than 1e-12 (scaled).
double total_effect_oracle(const LinearSEM& m, const VertexId& x, const VertexId& y);

/// Sample covariance (divisor n − 1) of n draws, observed vertices only.
LabeledCovariance sample_covariance(const LinearSEM& m, std::size_t n, std::uint64_t seed,
                                    std::uint64_t replicate = 0);

/// |σ_{ab·c}| < tol.
bool ci_oracle(const LabeledCovariance& cov, const std::string& a, const std::string& b,
               const Labels& c, double tol);

/// Coefficient magnitude range for random draws.
inline constexpr double kCoefMin = 0.2;
inline constexpr double kCoefMax = 0.9;
/// Magnitude range for random bidirected error covariances.
inline constexpr double kBidirectedMin = 0.05;
inline constexpr double kBidirectedMax = 0.3;

/// Draws coefficients uniformly from ±[0.2, 0.9] (and bidirected error
/// covariances from ±[0.05, 0.3]), solves unit variances, and redraws until
/// the result is feasible. Throws Error(InvalidModel) after `max_tries`.
LinearSEM draw_standardized_model(const PathDiagram& g, Rng& rng, int max_tries = 10000);

/// Random DAG over n vertices named V0..V{n-1}, edges from lower to higher
/// index with probability `p`. Latent flags and bidirected edges are not set.
PathDiagram random_dag(Rng& rng, std::size_t n, double p);

}  // namespace surrogate::sem
