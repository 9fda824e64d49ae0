#include "surrogate/gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "surrogate/error.hpp"

namespace surrogate::gaussian {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Labels to_labels(const graph::VertexSet& s) { return {s.begin(), s.end()}; }

void require_disjoint(const Labels& c, const Labels& ab) {
  for (const auto& v : c)
    if (std::find(ab.begin(), ab.end(), v) != ab.end())
      throw Error(ErrorKind::OverlappingSets, "conditioning label '" + v + "' also appears in a or b");
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double condition_number(const MatrixXd& m) {
  if (m.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

MatrixXd spd_inverse(const MatrixXd& m, const std::string& what) {
  if (m.size() == 0) return m;
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::SingularMatrix, what + " is not positive definite");
  const double cond = condition_number(m);
  if (!(cond < kMaxConditionNumber))
    throw Error(ErrorKind::SingularMatrix, what + " has condition number " + fmt(cond));
  return llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
}

MatrixXd conditional_cov(const LabeledCovariance& cov, const Labels& a, const Labels& b,
                         const Labels& c) {
  require_disjoint(c, a);
  require_disjoint(c, b);
  MatrixXd out = cov.block(a, b);
  if (c.empty()) return out;
  const MatrixXd inv = spd_inverse(cov.block(c, c), "conditioning block");
  out -= cov.block(a, c) * inv * cov.block(c, b);
  return out;
}

MatrixXd regression_matrix(const LabeledCovariance& cov, const Labels& ys, const Labels& xs,
                           const Labels& zs) {
  const MatrixXd syx = conditional_cov(cov, ys, xs, zs);
  const MatrixXd sxx = conditional_cov(cov, xs, xs, zs);
  return syx * spd_inverse(sxx, "conditional covariance of regressors");
}

double regression_coef(const LabeledCovariance& cov, const std::string& y, const std::string& x,
                       const Labels& z) {
  const double sxy = conditional_cov(cov, {x}, {y}, z)(0, 0);
  const double sxx = conditional_cov(cov, {x}, {x}, z)(0, 0);
  if (!(sxx > 1e-12))
    throw Error(ErrorKind::DegenerateVariance, "conditional variance of " + x + " is " + fmt(sxx));
  return sxy / sxx;
}

LabeledMatrix concentration(const LabeledCovariance& cov, const Labels& s) {
  return LabeledMatrix(s, spd_inverse(cov.block(s, s), "covariance of S"));
}

Labels s_labels(const RoleAssignment& r) {
  Labels s{r.x, r.u, r.w};
  s.insert(s.end(), r.z.begin(), r.z.end());
  s.insert(s.end(), r.t.begin(), r.t.end());
  return s;
}

std::vector<std::pair<std::string, std::string>> forced_zero_positions(
    const RoleAssignment& r, const CriterionCertificate& cert) {
  std::vector<std::pair<std::string, std::string>> out{{r.x, r.u}, {r.x, r.w}, {r.u, r.w}};
  if (!cert.witnesses) return out;
  for (const auto& a : cert.witnesses->r1)
    for (const auto& t : r.t) out.emplace_back(a, t);
  for (const auto& a : cert.witnesses->r2)
    for (const auto& z : r.z) out.emplace_back(a, z);
  return out;
}

LambdaDecomposition recover_lambda(const LabeledCovariance& cov, const RoleAssignment& r,
                                   const CriterionCertificate& cert, const RecoverOptions& opts) {
  if (!cert.satisfied || !cert.witnesses)
    throw Error(ErrorKind::CriterionNotSatisfied,
                "recover_lambda needs a satisfied certificate (" +
                    cert.failed_condition.value_or("no witnesses") + ")");
  const criteria::Witnesses& wit = *cert.witnesses;
  const Tolerance& tol = opts.tol;
  const Labels s = s_labels(r);
  const LabeledMatrix k = concentration(cov, s);
  const double kscale = max_abs(k.matrix());

  const double kxu = k(r.x, r.u), kxw = k(r.x, r.w), kuw = k(r.u, r.w);
  for (const auto& [name, v] : {std::pair{"xu", kxu}, std::pair{"xw", kxw}, std::pair{"uw", kuw}})
    if (std::abs(v) <= tol.bound(kscale))
      throw Error(ErrorKind::NearZeroConcentration,
                  std::string("concentration entry ") + name + " = " + fmt(v));

  const double l1sq = -kxu * kxw / kuw;
  if (!(l1sq > tol.bound(kscale)))
    throw Error(ErrorKind::NonFactorizable, "-k_xu k_xw / k_uw = " + fmt(l1sq) + " is not positive");

  VectorXd lam = VectorXd::Zero(static_cast<Index>(s.size()));
  auto at = [&](const std::string& v) -> double& { return lam(static_cast<Index>(k.index(v))); };
  at(r.x) = opts.negative_sign ? -std::sqrt(l1sq) : std::sqrt(l1sq);
  at(r.u) = -kxu / at(r.x);
  at(r.w) = -kxw / at(r.x);

  LambdaDecomposition out;
  const Labels triple{r.x, r.u, r.w};
  const Labels tl = to_labels(r.t);
  const Labels zl = to_labels(r.z);
  double residual = 0.0;

  // Each pivot p with Σ^{block,p·y} = 0 gives λ_block = −K_{block,p} / λ_p.
  auto from_vertex = [&](const Labels& block, const std::string& p) {
    return VectorXd(-k.block(block, {p}).col(0) / at(p));
  };

  if (!tl.empty()) {
    std::vector<std::string> pivots;
    for (const auto& p : triple)
      if (wit.r1.count(p)) pivots.push_back(p);
    if (pivots.empty()) throw Error(ErrorKind::EmptyPivot, "no row of R1 available for the t-block");
    const VectorXd primary = from_vertex(tl, pivots.front());
    out.pivots.t_block_source = pivots.front();
    for (std::size_t i = 1; i < pivots.size(); ++i) {
      residual = std::max(residual, max_abs(from_vertex(tl, pivots[i]) - primary));
      out.pivots.t_checks.push_back(pivots[i]);
    }
    for (std::size_t i = 0; i < tl.size(); ++i) at(tl[i]) = primary(static_cast<Index>(i));
  }

  if (!zl.empty()) {
    std::vector<VectorXd> candidates;
    std::vector<std::string> sources;
    for (const auto& p : triple)
      if (wit.r2_vertex_pivots.count(p)) {
        candidates.push_back(from_vertex(zl, p));
        sources.push_back(p);
      }
    if (!wit.r2_t_block.empty()) {
      const Labels tb = to_labels(wit.r2_t_block);
      VectorXd lt(static_cast<Index>(tb.size()));
      for (std::size_t i = 0; i < tb.size(); ++i) lt(static_cast<Index>(i)) = at(tb[i]);
      const double norm = lt.squaredNorm();
      if (norm > tol.bound(l1sq)) {
        candidates.push_back(VectorXd(-k.block(zl, tb) * lt / norm));
        sources.push_back("t-block");
      }
    }
    if (candidates.empty()) throw Error(ErrorKind::EmptyPivot, "no usable row of R2 for the z-block");
    out.pivots.z_block_source = sources.front();
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      residual = std::max(residual, max_abs(candidates[i] - candidates.front()));
      out.pivots.z_checks.push_back(sources[i]);
    }
    for (std::size_t i = 0; i < zl.size(); ++i) at(zl[i]) = candidates.front()(static_cast<Index>(i));
  }

  out.lambda = lam;
  out.lambda_outer = LabeledMatrix(s, lam * lam.transpose());
  out.consistency_residual = residual;

  const MatrixXd rebuilt = k.matrix() + out.lambda_outer.matrix();
  for (const auto& [a, b] : forced_zero_positions(r, cert))
    out.zero_pattern_residual = std::max(
        out.zero_pattern_residual,
        std::abs(rebuilt(static_cast<Index>(k.index(a)), static_cast<Index>(k.index(b)))));

  const double lscale = lam.cwiseAbs().maxCoeff();
  if (out.consistency_residual > tol.bound(lscale))
    throw Error(ErrorKind::ModelMisfit,
                "redundant pivots disagree by " + fmt(out.consistency_residual));
  if (out.zero_pattern_residual > tol.bound(kscale))
    throw Error(ErrorKind::ModelMisfit,
                "forced zeros of the conditional concentration are off by " +
                    fmt(out.zero_pattern_residual));
  return out;
}

Deflation deflate(const LabeledCovariance& cov, const LambdaDecomposition& lam, const Labels& s,
                  Tolerance tol) {
  if (s.size() != lam.lambda_outer.size())
    throw Error(ErrorKind::UnknownLabel, "deflation labels do not match the decomposition");
  const MatrixXd sigma = cov.block(s, s);
  const MatrixXd conc = spd_inverse(sigma, "covariance of S");
  const MatrixXd m = conc + lam.lambda_outer.block(s, s);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::ModelMisfit, "Σ_ss⁻¹ + λλ′ is not positive definite");
  MatrixXd cond = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  cond = 0.5 * (cond + cond.transpose()).eval();

  Deflation out;
  try {
    out.conditional = LabeledCovariance(s, cond);
  } catch (const Error& e) {
    throw Error(ErrorKind::ModelMisfit, "deflated covariance rejected: " + e.detail());
  }
  MatrixXd cp = sigma - cond;
  const double scale = std::max(max_abs(sigma), 1.0);
  for (Index i = 0; i < cp.rows(); ++i) {
    if (cp(i, i) < -tol.bound(scale))
      throw Error(ErrorKind::ModelMisfit, "cross-product diagonal for " + s[static_cast<std::size_t>(i)] +
                                              " is " + fmt(cp(i, i)));
  }
  out.cross_products = LabeledMatrix(s, cp);
  return out;
}

double sq_cond_cov_latent(const LabeledMatrix& cp, const LabeledCovariance& cov,
                          const std::string& x, const Labels& z, Tolerance tol) {
  require_disjoint(z, {x});
  const double cxx = cp(x, x);
  double value = cxx;
  if (!z.empty()) {
    const VectorXd v = spd_inverse(cov.block(z, z), "conditioning block") * cov.block(z, {x}).col(0);
    const VectorXd cxz = cp.block({x}, z).row(0).transpose();
    value += -2.0 * cxz.dot(v) + v.dot(cp.block(z, z) * v);
  }
  if (value < -tol.bound(std::abs(cxx)))
    throw Error(ErrorKind::ModelMisfit, "squared conditional covariance of " + x + " is " + fmt(value));
  return std::max(value, 0.0);
}

double cond_var_latent(const LabeledMatrix& cp, const LabeledCovariance& cov, const Labels& z,
                       Tolerance tol) {
  double value = 1.0;
  if (!z.empty()) value -= (spd_inverse(cov.block(z, z), "conditioning block") * cp.block(z, z)).trace();
  if (!(value > tol.bound(1.0)))
    throw Error(ErrorKind::ModelMisfit, "conditional variance of the latent is " + fmt(value));
  return value;
}

namespace {

struct Deflated {
  LambdaDecomposition lam;
  Deflation defl;
};

Deflated run_deflation(const LabeledCovariance& cov, const RoleAssignment& r,
                       const CriterionCertificate& cert, Tolerance tol, Diagnostics& diag,
                       const std::string& tag) {
  Deflated d;
  d.lam = recover_lambda(cov, r, cert, RecoverOptions{tol, false});
  const Labels s = s_labels(r);
  d.defl = deflate(cov, d.lam, s, tol);
  diag.consistency_residual = std::max(diag.consistency_residual, d.lam.consistency_residual);
  diag.zero_pattern_residual = std::max(diag.zero_pattern_residual, d.lam.zero_pattern_residual);
  diag.condition_numbers.emplace_back("S" + tag, condition_number(cov.block(s, s)));
  return d;
}

void require_labels(const LabeledCovariance& cov, const graph::VertexSet& vs) {
  for (const auto& v : vs)
    if (!cov.has(v)) throw Error(ErrorKind::UnknownLabel, "covariance has no label '" + v + "'");
}

double require_denominator(double value, const std::string& what, Tolerance tol) {
  if (!(value > tol.bound(1.0)))
    throw Error(ErrorKind::DegenerateDenominator, what + " = " + fmt(value));
  return value;
}

}  // namespace

IdentificationResult identify_tau_sq(const LabeledCovariance& cov, const graph::PathDiagram& g,
                                     const Roles& roles, Strategy strategy, Tolerance tol) {
  graph::VertexSet used;
  if (const auto* r = std::get_if<RoleAssignment>(&roles)) {
    used = r->observed_set();
  } else {
    const auto& d = std::get<DoubleRoleAssignment>(roles);
    used = {d.u1, d.w1, d.u2, d.w2};
    used.insert(d.z.begin(), d.z.end());
    used.insert(d.t1.begin(), d.t1.end());
    used.insert(d.t2.begin(), d.t2.end());
  }
  require_labels(cov, used);

  IdentificationResult res;
  res.strategy = strategy;
  res.certificate = criteria::strategy_certificate(g, strategy, roles);
  if (!res.certificate.satisfied)
    throw Error(ErrorKind::CriterionNotSatisfied,
                res.certificate.criterion + ": " + res.certificate.failed_condition.value_or("unknown"));

  const double gap = cov.max_unit_diagonal_gap(to_labels(used));
  if (gap > kStandardizedTol)
    throw Error(ErrorKind::NotStandardized,
                "diagonal deviates from 1 by " + fmt(gap) + "; τ² is only defined in standardized units");

  Diagnostics& diag = res.diagnostics;
  if (strategy == Strategy::DoubleLatent) {
    const auto& d = std::get<DoubleRoleAssignment>(roles);
    const Labels z = to_labels(d.z);
    const Deflated first = run_deflation(cov, d.first_embedding(), res.certificate.embedded.at(0), tol, diag, "1");
    const Deflated second = run_deflation(cov, d.second_embedding(), res.certificate.embedded.at(1), tol, diag, "2");
    diag.condition_numbers.emplace_back("Z", condition_number(cov.block(z, z)));
    diag.numerator = sq_cond_cov_latent(second.defl.cross_products, cov, d.u1, z, tol);
    diag.denominator = require_denominator(
        sq_cond_cov_latent(first.defl.cross_products, cov, d.u1, z, tol), "σ²_{x1u1·z}", tol);
  } else {
    const auto& r = std::get<RoleAssignment>(roles);
    const Deflated one = run_deflation(cov, r, res.certificate, tol, diag, "");
    const LabeledMatrix& cp = one.defl.cross_products;
    const Labels z = to_labels(r.z);
    const Labels t = to_labels(r.t);
    switch (strategy) {
      case Strategy::BackdoorLatentResponse: {
        diag.condition_numbers.emplace_back("Z", condition_number(cov.block(z, z)));
        diag.numerator = sq_cond_cov_latent(cp, cov, r.x, z, tol);
        const double sxx = conditional_cov(cov, {r.x}, {r.x}, z)(0, 0);
        diag.denominator = require_denominator(sxx * sxx, "σ²_{xx·z}", tol);
        break;
      }
      case Strategy::BackdoorLatentTreatment: {
        diag.condition_numbers.emplace_back("Z", condition_number(cov.block(z, z)));
        diag.numerator = sq_cond_cov_latent(cp, cov, r.x, z, tol);
        const double syy = cond_var_latent(cp, cov, z, tol);
        diag.denominator = require_denominator(syy * syy, "σ²_{yy·z}", tol);
        break;
      }
      case Strategy::CivLatentResponse: {
        const std::string& inst = z.front();
        diag.condition_numbers.emplace_back("T", condition_number(cov.block(t, t)));
        diag.numerator = sq_cond_cov_latent(cp, cov, inst, t, tol);
        const double sxz = conditional_cov(cov, {r.x}, {inst}, t)(0, 0);
        diag.denominator = require_denominator(sxz * sxz, "σ²_{xz·t}", tol);
        break;
      }
      case Strategy::DoubleLatent: break;
    }
  }
  res.tau_squared = diag.numerator / diag.denominator;
  return res;
}

}  // namespace surrogate::gaussian
