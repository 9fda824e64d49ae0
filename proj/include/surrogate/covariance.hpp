#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace surrogate {

using Labels = std::vector<std::string>;

/// A square matrix whose rows and columns are addressed by variable name.
/// No numeric invariants beyond shape and distinct labels.
class LabeledMatrix {
 public:
  LabeledMatrix() = default;
  LabeledMatrix(Labels labels, Eigen::MatrixXd matrix);

  const Labels& labels() const { return labels_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::size_t size() const { return labels_.size(); }

  bool has(const std::string& label) const;
  std::size_t index(const std::string& label) const;
  double operator()(const std::string& row, const std::string& col) const;
  Eigen::MatrixXd block(const Labels& rows, const Labels& cols) const;

 protected:
  Labels labels_;
  Eigen::MatrixXd matrix_;
};

/// Symmetric positive-definite covariance over named variables.
/// Construction enforces symmetry within 1e-9 (scaled by the largest entry)
/// and smallest eigenvalue > 1e-10 × largest.
class LabeledCovariance : public LabeledMatrix {
 public:
  LabeledCovariance() = default;
  LabeledCovariance(Labels labels, Eigen::MatrixXd matrix);

  /// The marginal over `keep`, in that order.
  LabeledCovariance marginal(const Labels& keep) const;

  /// Rescaled to unit diagonal.
  LabeledCovariance correlation() const;

  /// Largest |diag - 1| over the given labels (all labels when empty).
  double max_unit_diagonal_gap(const Labels& over = {}) const;
};

}  // namespace surrogate
