#pragma once

#include <string>
#include <variant>
#include <vector>

#include "surrogate/covariance.hpp"
#include "surrogate/criteria.hpp"

namespace surrogate::gaussian {

using criteria::CriterionCertificate;
using criteria::DoubleRoleAssignment;
using criteria::RoleAssignment;
using criteria::Strategy;

inline constexpr double kDefaultExactTol = 1e-8;
inline constexpr double kDefaultSampleTol = 1e-2;
inline constexpr double kMaxConditionNumber = 1e12;
inline constexpr double kStandardizedTol = 1e-6;

/// Threshold for zero/nonzero and agreement decisions. The exact regime
/// compares absolute values; the sample regime scales by the magnitude of
/// the quantities being compared.
struct Tolerance {
  double value = kDefaultExactTol;
  bool relative = false;

  static Tolerance exact(double v = kDefaultExactTol) { return {v, false}; }
  static Tolerance sample(double v = kDefaultSampleTol) { return {v, true}; }

  double bound(double scale) const { return relative ? value * std::max(scale, 1e-300) : value; }
};

/// Inverse of a symmetric positive-definite matrix via Cholesky. Throws
/// SingularMatrix when the factorization fails or the condition number
/// reaches kMaxConditionNumber; never falls back to a pseudo-inverse.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const std::string& what);

double condition_number(const Eigen::MatrixXd& m);

/// Σ_ab − Σ_ac Σ_cc⁻¹ Σ_cb. `c` must be disjoint from `a` ∪ `b`.
Eigen::MatrixXd conditional_cov(const LabeledCovariance& cov, const Labels& a, const Labels& b,
                                const Labels& c);

/// Coefficient matrix of `xs` in the regression of `ys` on xs ∪ zs (|ys|×|xs|).
Eigen::MatrixXd regression_matrix(const LabeledCovariance& cov, const Labels& ys, const Labels& xs,
                                  const Labels& zs);

/// σ_{xy·z} / σ_{xx·z}.
double regression_coef(const LabeledCovariance& cov, const std::string& y, const std::string& x,
                       const Labels& z);

/// Σ_ss⁻¹, addressable by label.
LabeledMatrix concentration(const LabeledCovariance& cov, const Labels& s);

struct PivotRecord {
  std::string t_block_source;          // vertex that produced the t-block, empty if t = ∅
  std::string z_block_source;          // vertex or "t-block" that produced the z-block
  std::vector<std::string> t_checks;   // redundant pivots compared against the primary
  std::vector<std::string> z_checks;
};

struct LambdaDecomposition {
  LabeledMatrix lambda_outer;  // λλ′ over S = (x, u, w, z…, t…)
  Eigen::VectorXd lambda;      // one sign representative of λ
  PivotRecord pivots;
  double consistency_residual = 0.0;  // max disagreement among redundant pivots
  double zero_pattern_residual = 0.0; // max |K + λλ′| over the forced-zero positions
};

struct RecoverOptions {
  Tolerance tol;
  bool negative_sign = false;  // take λ_x = −√(…) instead of +√(…)
};

/// S ordered as x, u, w, z…, t….
Labels s_labels(const RoleAssignment& roles);

/// Recovers λλ′ from the concentration matrix of S using the triple
/// (x, u, w) and the certificate's separation witnesses.
LambdaDecomposition recover_lambda(const LabeledCovariance& cov, const RoleAssignment& roles,
                                   const CriterionCertificate& cert, const RecoverOptions& opts = {});

/// Positions (row, col) of K + λλ′ that the certificate forces to zero.
std::vector<std::pair<std::string, std::string>> forced_zero_positions(
    const RoleAssignment& roles, const CriterionCertificate& cert);

struct Deflation {
  LabeledCovariance conditional;  // Σ_ss·y
  LabeledMatrix cross_products;   // Σ_sy Σ_ys with σ_yy = 1
};

/// Σ_ss·y = (Σ_ss⁻¹ + λλ′)⁻¹ and Σ_sy Σ_ys = Σ_ss − Σ_ss·y, ordered by `s`.
Deflation deflate(const LabeledCovariance& cov, const LambdaDecomposition& lam, const Labels& s,
                  Tolerance tol = {});

/// σ²_{xy·z} for the latent y whose cross-products are `cp`.
double sq_cond_cov_latent(const LabeledMatrix& cp, const LabeledCovariance& cov,
                          const std::string& x, const Labels& z, Tolerance tol = {});

/// σ_{yy·z} = 1 − tr(Σ_zz⁻¹ Σ_zy Σ_yz) for the latent y whose cross-products are `cp`.
double cond_var_latent(const LabeledMatrix& cp, const LabeledCovariance& cov, const Labels& z,
                       Tolerance tol = {});

struct Diagnostics {
  double consistency_residual = 0.0;
  double zero_pattern_residual = 0.0;
  std::vector<std::pair<std::string, double>> condition_numbers;
  double numerator = 0.0;
  double denominator = 0.0;
};

struct IdentificationResult {
  Strategy strategy;
  double tau_squared = 0.0;
  CriterionCertificate certificate;
  Diagnostics diagnostics;
};

using Roles = std::variant<RoleAssignment, DoubleRoleAssignment>;

/// Squared total effect in standardized units. The covariance must have unit
/// diagonal on every role vertex and the strategy's graphical certificate
/// must be satisfied.
IdentificationResult identify_tau_sq(const LabeledCovariance& cov, const graph::PathDiagram& g,
                                     const Roles& roles, Strategy strategy, Tolerance tol = {});

}  // namespace surrogate::gaussian
