#include "surrogate/sem.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include "surrogate/error.hpp"
#include "surrogate/gaussian.hpp"

namespace surrogate::sem {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Random draws keep every error variance at least this large so that the
// drawn models stay well conditioned.
constexpr double kMinDrawnErrorVariance = 1e-2;

std::pair<VertexId, VertexId> key(const VertexId& a, const VertexId& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidModel, what); }

MatrixXd solve_structure(const MatrixXd& a) {
  const auto n = a.rows();
  // I − A is unit lower triangular in topological order.
  MatrixXd ia = MatrixXd::Identity(n, n) - a;
  return ia.triangularView<Eigen::UnitLower>().solve(MatrixXd::Identity(n, n));
}

std::map<VertexId, Index> positions(const std::vector<VertexId>& order) {
  std::map<VertexId, Index> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<Index>(i);
  return pos;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t replicate)
    : engine_(splitmix64(seed ^ splitmix64(replicate))) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

LinearSEM::LinearSEM(PathDiagram g, std::map<DirectedEdge, double> coefficients,
                     std::map<std::pair<VertexId, VertexId>, double> error_cov)
    : graph_(std::move(g)), coef_(std::move(coefficients)) {
  for (const auto& e : graph_.directed_edges()) {
    auto it = coef_.find(e);
    if (it == coef_.end()) invalid("missing coefficient for " + e.from + " -> " + e.to);
    if (it->second == 0.0 || !std::isfinite(it->second))
      invalid("coefficient for " + e.from + " -> " + e.to + " must be finite and nonzero");
  }
  for (const auto& [e, _] : coef_)
    if (!graph_.has_edge(e.from, e.to)) invalid("coefficient given for non-edge " + e.from + " -> " + e.to);

  for (const auto& [k, v] : error_cov) {
    auto kk = key(k.first, k.second);
    if (!graph_.has_vertex(kk.first) || !graph_.has_vertex(kk.second))
      invalid("error covariance names an unknown vertex");
    if (kk.first != kk.second && !graph_.has_bidirected(kk.first, kk.second))
      invalid("error covariance between " + kk.first + " and " + kk.second + " needs a bidirected edge");
    if (!std::isfinite(v)) invalid("error covariance must be finite");
    omega_[kk] = v;
  }
  for (const auto& v : graph_.vertex_set()) {
    auto it = omega_.find({v, v});
    if (it == omega_.end() || !(it->second > 0.0)) invalid("error variance of " + v + " must be positive");
  }
  order_ = graph_.topological_order();
  Eigen::LLT<MatrixXd> llt(error_matrix());
  if (llt.info() != Eigen::Success) invalid("error covariance matrix is not positive definite");
}

double LinearSEM::coefficient(const VertexId& from, const VertexId& to) const {
  auto it = coef_.find(DirectedEdge{from, to});
  if (it == coef_.end()) throw Error(ErrorKind::MissingEdge, "no edge " + from + " -> " + to);
  return it->second;
}

double LinearSEM::error_cov(const VertexId& a, const VertexId& b) const {
  auto it = omega_.find(key(a, b));
  return it == omega_.end() ? 0.0 : it->second;
}

MatrixXd LinearSEM::coefficient_matrix() const {
  const auto pos = positions(order_);
  MatrixXd a = MatrixXd::Zero(static_cast<Index>(order_.size()), static_cast<Index>(order_.size()));
  for (const auto& [e, v] : coef_) a(pos.at(e.to), pos.at(e.from)) = v;
  return a;
}

MatrixXd LinearSEM::error_matrix() const {
  const auto pos = positions(order_);
  MatrixXd w = MatrixXd::Zero(static_cast<Index>(order_.size()), static_cast<Index>(order_.size()));
  for (const auto& [k, v] : omega_) {
    w(pos.at(k.first), pos.at(k.second)) = v;
    w(pos.at(k.second), pos.at(k.first)) = v;
  }
  return w;
}

LinearSEM LinearSEM::with_unit_variances(PathDiagram g, std::map<DirectedEdge, double> coefficients,
                                         std::map<BidirectedEdge, double> bidirected_cov) {
  const std::vector<VertexId> order = g.topological_order();
  const auto pos = positions(order);
  const auto n = static_cast<Index>(order.size());
  MatrixXd a = MatrixXd::Zero(n, n);
  for (const auto& [e, v] : coefficients) {
    if (!pos.count(e.from) || !pos.count(e.to)) invalid("coefficient names an unknown vertex");
    a(pos.at(e.to), pos.at(e.from)) = v;
  }
  MatrixXd w = MatrixXd::Zero(n, n);
  for (const auto& [e, v] : bidirected_cov) {
    if (!pos.count(e.a) || !pos.count(e.b)) invalid("error covariance names an unknown vertex");
    w(pos.at(e.a), pos.at(e.b)) = v;
    w(pos.at(e.b), pos.at(e.a)) = v;
  }
  const MatrixXd b = solve_structure(a);
  // var(V_i) does not involve the error variance of any later vertex, so
  // each diagonal entry can be solved in topological order.
  for (Index i = 0; i < n; ++i) {
    const double rest = (b.row(i) * w * b.row(i).transpose())(0, 0);
    const double need = 1.0 - rest;
    if (!(need > 0.0))
      invalid("unit variance for " + order[static_cast<std::size_t>(i)] + " is infeasible");
    w(i, i) = need;
  }
  std::map<std::pair<VertexId, VertexId>, double> omega;
  for (Index i = 0; i < n; ++i) omega[{order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]}] = w(i, i);
  for (const auto& [e, v] : bidirected_cov) omega[key(e.a, e.b)] = v;
  return LinearSEM(std::move(g), std::move(coefficients), std::move(omega));
}

LabeledCovariance implied_covariance(const LinearSEM& m) {
  const MatrixXd b = solve_structure(m.coefficient_matrix());
  MatrixXd sigma = b * m.error_matrix() * b.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return LabeledCovariance(m.order(), sigma);
}

LinearSEM standardize(const LinearSEM& m) {
  const LabeledCovariance sigma = implied_covariance(m);
  std::map<VertexId, double> sd;
  for (const auto& v : m.order()) sd[v] = std::sqrt(sigma(v, v));
  std::map<DirectedEdge, double> coef;
  for (const auto& [e, v] : m.coefficients()) coef[e] = v * sd[e.from] / sd[e.to];
  std::map<std::pair<VertexId, VertexId>, double> omega;
  for (const auto& a : m.order()) omega[{a, a}] = m.error_cov(a, a) / (sd[a] * sd[a]);
  for (const auto& e : m.graph().bidirected_edges())
    omega[{e.a, e.b}] = m.error_cov(e.a, e.b) / (sd[e.a] * sd[e.b]);
  return LinearSEM(m.graph(), std::move(coef), std::move(omega));
}

double total_effect_oracle(const LinearSEM& m, const VertexId& x, const VertexId& y) {
  const PathDiagram& g = m.graph();
  g.require_vertex(x);
  g.require_vertex(y);
  if (x == y) invalid("total effect needs two distinct vertices");

  double sum = 0.0;
  std::function<void(const VertexId&, double)> walk = [&](const VertexId& v, double product) {
    if (v == y) {
      sum += product;
      return;
    }
    for (const auto& c : graph::children_of(g, v)) walk(c, product * m.coefficient(v, c));
  };
  walk(x, 1.0);

  const auto pos = positions(m.order());
  const double via_inverse = solve_structure(m.coefficient_matrix())(pos.at(y), pos.at(x));
  if (std::abs(via_inverse - sum) > 1e-12 * std::max(1.0, std::abs(sum)))
    invalid("path-product and matrix-inverse total effects disagree");
  return sum;
}

LabeledCovariance sample_covariance(const LinearSEM& m, std::size_t n, std::uint64_t seed,
                                    std::uint64_t replicate) {
  const auto& order = m.order();
  std::vector<Index> obs;
  Labels labels;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (!m.graph().is_latent(order[i])) {
      obs.push_back(static_cast<Index>(i));
      labels.push_back(order[i]);
    }
  if (n < labels.size() + 1)
    throw Error(ErrorKind::SampleTooSmall,
                "need at least " + std::to_string(labels.size() + 1) + " samples, got " + std::to_string(n));

  const auto dim = static_cast<Index>(order.size());
  const auto k = static_cast<Index>(obs.size());
  const MatrixXd a = m.coefficient_matrix();
  const MatrixXd chol = Eigen::LLT<MatrixXd>(m.error_matrix()).matrixL();

  Rng rng(seed, replicate);
  VectorXd xi(dim), v(dim), o(k);
  VectorXd sum = VectorXd::Zero(k);
  MatrixXd cross = MatrixXd::Zero(k, k);
  for (std::size_t s = 0; s < n; ++s) {
    for (Index i = 0; i < dim; ++i) xi(i) = rng.normal();
    for (Index i = 0; i < dim; ++i) {
      double val = chol.row(i).head(i + 1).dot(xi.head(i + 1));
      for (Index j = 0; j < i; ++j)
        if (a(i, j) != 0.0) val += a(i, j) * v(j);
      v(i) = val;
    }
    for (Index j = 0; j < k; ++j) o(j) = v(obs[static_cast<std::size_t>(j)]);
    sum += o;
    cross.selfadjointView<Eigen::Lower>().rankUpdate(o);
  }
  cross = cross.selfadjointView<Eigen::Lower>();
  const double dn = static_cast<double>(n);
  const VectorXd mean = sum / dn;
  MatrixXd cov = (cross - dn * mean * mean.transpose()) / (dn - 1.0);
  return LabeledCovariance(labels, cov);
}

bool ci_oracle(const LabeledCovariance& cov, const std::string& a, const std::string& b,
               const Labels& c, double tol) {
  return std::abs(gaussian::conditional_cov(cov, {a}, {b}, c)(0, 0)) < tol;
}

LinearSEM draw_standardized_model(const PathDiagram& g, Rng& rng, int max_tries) {
  auto signed_draw = [&](double lo, double hi) {
    const double mag = rng.uniform(lo, hi);
    return rng.bernoulli(0.5) ? mag : -mag;
  };
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    std::map<DirectedEdge, double> coef;
    for (const auto& e : g.directed_edges()) coef[e] = signed_draw(kCoefMin, kCoefMax);
    std::map<BidirectedEdge, double> bi;
    for (const auto& e : g.bidirected_edges()) bi[e] = signed_draw(kBidirectedMin, kBidirectedMax);
    try {
      LinearSEM m = LinearSEM::with_unit_variances(g, coef, bi);
      bool well_posed = true;
      for (const auto& v : m.order()) well_posed = well_posed && m.error_cov(v, v) >= kMinDrawnErrorVariance;
      if (well_posed) return m;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidModel) throw;
    }
  }
  invalid("no feasible unit-variance model after " + std::to_string(max_tries) + " draws");
}

PathDiagram random_dag(Rng& rng, std::size_t n, double p) {
  PathDiagram::Builder b;
  for (std::size_t i = 0; i < n; ++i) b.add_vertex("V" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) b.add_edge("V" + std::to_string(i), "V" + std::to_string(j));
  return b.build();
}

}  // namespace surrogate::sem
