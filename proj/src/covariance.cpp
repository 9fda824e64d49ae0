#include "surrogate/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "surrogate/error.hpp"

namespace surrogate {

LabeledMatrix::LabeledMatrix(Labels labels, Eigen::MatrixXd matrix)
    : labels_(std::move(labels)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(labels_.size());
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw Error(ErrorKind::InvalidCovariance,
                "matrix is " + std::to_string(matrix_.rows()) + "x" + std::to_string(matrix_.cols()) +
                    " but there are " + std::to_string(n) + " labels");
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size())
    throw Error(ErrorKind::InvalidCovariance, "labels must be distinct");
  if (!matrix_.allFinite()) throw Error(ErrorKind::InvalidCovariance, "matrix has non-finite entries");
}

bool LabeledMatrix::has(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t LabeledMatrix::index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw Error(ErrorKind::UnknownLabel, "unknown label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

double LabeledMatrix::operator()(const std::string& row, const std::string& col) const {
  return matrix_(static_cast<Eigen::Index>(index(row)), static_cast<Eigen::Index>(index(col)));
}

Eigen::MatrixXd LabeledMatrix::block(const Labels& rows, const Labels& cols) const {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ri = static_cast<Eigen::Index>(index(rows[i]));
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          matrix_(ri, static_cast<Eigen::Index>(index(cols[j])));
  }
  return out;
}

LabeledCovariance::LabeledCovariance(Labels labels, Eigen::MatrixXd matrix)
    : LabeledMatrix(std::move(labels), std::move(matrix)) {
  if (labels_.empty()) return;
  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(ErrorKind::InvalidCovariance, "matrix is not symmetric");
  // Symmetrize away sub-tolerance asymmetry so downstream factorizations see
  // an exactly symmetric matrix.
  matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-10 * hi))
    throw Error(ErrorKind::InvalidCovariance, "matrix is not positive definite");
}

LabeledCovariance LabeledCovariance::marginal(const Labels& keep) const {
  return LabeledCovariance(keep, block(keep, keep));
}

LabeledCovariance LabeledCovariance::correlation() const {
  const Eigen::VectorXd inv_sd = matrix_.diagonal().cwiseSqrt().cwiseInverse();
  return LabeledCovariance(labels_, inv_sd.asDiagonal() * matrix_ * inv_sd.asDiagonal());
}

double LabeledCovariance::max_unit_diagonal_gap(const Labels& over) const {
  double gap = 0.0;
  if (over.empty()) {
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) gap = std::max(gap, std::abs(matrix_(i, i) - 1.0));
  } else {
    for (const auto& l : over) gap = std::max(gap, std::abs((*this)(l, l) - 1.0));
  }
  return gap;
}

}  // namespace surrogate
