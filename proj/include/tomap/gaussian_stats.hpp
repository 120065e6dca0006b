#pragma once

#include <span>

#include <Eigen/Dense>

#include "tomap/geometry.hpp"

namespace tomap {

/// Determinant floor below which a covariance is treated as singular.
inline constexpr double kDeterminantFloor = 1e-18;

/// Mean and (population) covariance of a 3D point set.
struct GaussianSummary {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();

  static GaussianSummary from_points(std::span<const WorldPoint> points);
};

/// h = k/2 + (k/2) ln(2 pi) + ln|Sigma| / 2 with k = 3. Returns -infinity
/// when |Sigma| <= kDeterminantFloor (maximally compact).
double differential_entropy(const GaussianSummary& s);

/// D_KL(n0 || n1) for 3D Gaussians. Throws SingularCovariance when either
/// determinant is at or below kDeterminantFloor.
double kl_divergence(const GaussianSummary& n0, const GaussianSummary& n1);

}  // namespace tomap
