#pragma once

#include <Eigen/Core>

#include "crossdex/pose_model.hpp"

namespace crossdex {

/// PCA basis over hand-pose space: mean pose plus k orthonormal principal
/// directions, eigenvalues sorted non-increasing. In centered mode the mean is
/// subtracted before decomposition and added back in synthesis; uncentered mode
/// decomposes the raw second-moment matrix and synthesizes a plain weighted sum.
struct EigengraspBasis {
  int dim = kPoseDim;
  int k = 0;
  bool centered = true;
  Eigen::VectorXd mean;         // dim (dataset mean, stored in both modes)
  Eigen::VectorXd eigenvalues;  // k, non-increasing, >= 0
  Eigen::MatrixXd components;   // k x dim, orthonormal rows

  void validate() const;  // throws std::invalid_argument
};

/// PCA of an N x 45 pose dataset. Deterministic: full eigendecomposition of the
/// 45 x 45 (population, 1/N) covariance, per-component sign fixed by making the
/// largest-magnitude entry positive.
EigengraspBasis compute_basis(const Eigen::MatrixXd& dataset, int k, bool centered = true);

/// mean + components^T w (centered) or components^T w alone (uncentered),
/// canonicalized to the axis-angle block convention.
HandPose synthesize(const EigengraspBasis& basis, const Eigen::VectorXd& weights);

/// Inverse map: w = components * (theta - mean [centered mode only]).
Eigen::VectorXd project(const EigengraspBasis& basis, const HandPose& pose);

}  // namespace crossdex
