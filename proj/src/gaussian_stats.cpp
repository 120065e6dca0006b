#include "tomap/gaussian_stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tomap/error.hpp"

namespace tomap {

GaussianSummary GaussianSummary::from_points(std::span<const WorldPoint> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "cannot summarize an empty point set");
  GaussianSummary s;
  s.mean.setZero();
  for (const WorldPoint& p : points) s.mean += p;
  s.mean /= static_cast<double>(points.size());
  s.covariance.setZero();
  for (const WorldPoint& p : points) {
    const Eigen::Vector3d d = p - s.mean;
    s.covariance.noalias() += d * d.transpose();
  }
  s.covariance /= static_cast<double>(points.size());
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

double differential_entropy(const GaussianSummary& s) {
  constexpr double k = 3.0;
  const double det = s.covariance.determinant();
  if (!(det > kDeterminantFloor)) return -std::numeric_limits<double>::infinity();
  return 0.5 * k + 0.5 * k * std::log(2.0 * std::numbers::pi) + 0.5 * std::log(det);
}

double kl_divergence(const GaussianSummary& n0, const GaussianSummary& n1) {
  constexpr double k = 3.0;
  const double det0 = n0.covariance.determinant();
  const double det1 = n1.covariance.determinant();
  if (!(det0 > kDeterminantFloor) || !(det1 > kDeterminantFloor)) {
    throw Error(ErrorCode::SingularCovariance, "covariance determinant below floor");
  }
  const Eigen::LDLT<Eigen::Matrix3d> pi1(n1.covariance);
  const Eigen::Vector3d dmean = n1.mean - n0.mean;
  const double trace_term = pi1.solve(n0.covariance).trace();
  const double mahalanobis = dmean.dot(pi1.solve(dmean));
  const double d = 0.5 * (trace_term + mahalanobis - k + std::log(det1 / det0));
  // Round-off can leave tiny negatives for identical inputs.
  if (d < 0.0 && d > -1e-12) return 0.0;
  return d;
}

}  // namespace tomap
