#pragma once

// Deterministic principal-component projection for 2D scatter plots.

#include <Eigen/Core>

namespace xrec {

struct Projection {
  Eigen::MatrixXd coords;      // N x k
  Eigen::MatrixXd directions;  // D x k, orthonormal columns
  Eigen::VectorXd mean;        // D
  Eigen::VectorXd explained;   // fraction of total variance per component
  bool degenerate = false;     // rank-0 input: every point at the origin
};

/// Rows of `points` are samples. Each direction is signed so that its
/// largest-magnitude coordinate is positive (lowest index on ties).
Projection pca_project(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index k = 2);

}  // namespace xrec
