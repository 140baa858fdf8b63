#include "crossdex/eigengrasp.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>
#include <string>

namespace crossdex {

void EigengraspBasis::validate() const {
  if (dim != kPoseDim) {
    throw std::invalid_argument("basis: dim must be " + std::to_string(kPoseDim));
  }
  if (k < 1 || k > dim) {
    throw std::invalid_argument("basis: k out of range [1, " + std::to_string(dim) + "]");
  }
  if (mean.size() != dim || eigenvalues.size() != k || components.rows() != k ||
      components.cols() != dim) {
    throw std::invalid_argument("basis: inconsistent dimensions");
  }
  if (!mean.allFinite() || !eigenvalues.allFinite() || !components.allFinite()) {
    throw std::invalid_argument("basis: non-finite entries");
  }
  for (int i = 0; i < k; ++i) {
    if (eigenvalues[i] < 0.0) {
      throw std::invalid_argument("basis: negative eigenvalue");
    }
    if (i + 1 < k && eigenvalues[i] < eigenvalues[i + 1]) {
      throw std::invalid_argument("basis: eigenvalues not sorted non-increasing");
    }
  }
  const Eigen::MatrixXd gram = components * components.transpose();
  if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("basis: component rows not orthonormal");
  }
}

EigengraspBasis compute_basis(const Eigen::MatrixXd& dataset, int k, bool centered) {
  const auto n = dataset.rows();
  if (n < 2) {
    throw std::invalid_argument("compute_basis: need at least 2 poses");
  }
  if (dataset.cols() != kPoseDim) {
    throw std::invalid_argument("compute_basis: dataset must have " + std::to_string(kPoseDim) +
                                " columns");
  }
  if (k < 1 || k > std::min<Eigen::Index>(n, kPoseDim)) {
    throw std::invalid_argument("compute_basis: k out of range [1, min(N, 45)]");
  }
  if (!dataset.allFinite()) {
    throw std::invalid_argument("compute_basis: non-finite entries in dataset");
  }

  EigengraspBasis basis;
  basis.k = k;
  basis.centered = centered;
  basis.mean = dataset.colwise().mean();

  Eigen::MatrixXd y = dataset;
  if (centered) y.rowwise() -= basis.mean.transpose();
  const Eigen::MatrixXd cov = y.transpose() * y / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("compute_basis: eigendecomposition failed");
  }

  // solver returns ascending order; take the top k, largest first
  basis.eigenvalues.resize(k);
  basis.components.resize(k, kPoseDim);
  for (int i = 0; i < k; ++i) {
    const int src = kPoseDim - 1 - i;
    basis.eigenvalues[i] = std::max(0.0, solver.eigenvalues()[src]);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    // sign convention: largest-magnitude entry positive (first occurrence on ties)
    int imax = 0;
    for (int j = 1; j < kPoseDim; ++j) {
      if (std::abs(v[j]) > std::abs(v[imax])) imax = j;
    }
    if (v[imax] < 0.0) v = -v;
    basis.components.row(i) = v.transpose();
  }
  return basis;
}

HandPose synthesize(const EigengraspBasis& basis, const Eigen::VectorXd& weights) {
  if (weights.size() != basis.k) {
    throw std::invalid_argument("synthesize: weight vector length " +
                                std::to_string(weights.size()) + " does not match basis k=" +
                                std::to_string(basis.k));
  }
  if (!weights.allFinite()) {
    throw std::invalid_argument("synthesize: non-finite weights");
  }
  HandPose pose = basis.components.transpose() * weights;
  if (basis.centered) pose += basis.mean;
  return canonicalize(pose);
}

Eigen::VectorXd project(const EigengraspBasis& basis, const HandPose& pose) {
  if (basis.centered) {
    return basis.components * (pose - basis.mean);
  }
  return basis.components * pose;
}

}  // namespace crossdex
