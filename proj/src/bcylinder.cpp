#include "tomap/bcylinder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tomap/error.hpp"

namespace tomap {

CylinderFit fit_bcylinder_detailed(std::span<const WorldPoint> points) {
  if (points.size() < 4) throw Error(ErrorCode::InvalidArgument, "cylinder fit needs at least 4 points");

  WorldPoint centroid = WorldPoint::Zero();
  for (const WorldPoint& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  double max_horizontal = 0.0;
  double z_min = std::numeric_limits<double>::infinity();
  double z_max = -std::numeric_limits<double>::infinity();
  for (const WorldPoint& p : points) {
    const Eigen::Vector3d d = p - centroid;
    var += d.cwiseProduct(d);
    max_horizontal = std::max(max_horizontal, std::hypot(d.x(), d.y()));
    z_min = std::min(z_min, p.z());
    z_max = std::max(z_max, p.z());
  }
  var /= static_cast<double>(points.size());
  if (!(var.maxCoeff() > 0.0)) throw Error(ErrorCode::DegeneratePoints, "points have no spread");
  const Eigen::Vector3d sd = var.cwiseSqrt();

  CylinderFit fit;
  fit.enclosing = {centroid, max_horizontal, z_max - z_min};
  fit.sigma = {centroid, 3.0 * std::max(sd.x(), sd.y()), 6.0 * sd.z()};
  fit.result = {centroid, std::min(fit.enclosing.radius, fit.sigma.radius),
                std::min(fit.enclosing.height, fit.sigma.height)};
  if (!(fit.result.radius > 0.0) || !(fit.result.height > 0.0)) {
    throw Error(ErrorCode::DegeneratePoints, "points are coplanar or collinear along the axis");
  }
  return fit;
}

}  // namespace tomap
