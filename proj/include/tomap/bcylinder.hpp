#pragma once

#include <span>

#include "tomap/geometry.hpp"

namespace tomap {

/// Vertical bounding cylinder; `center` is the axis midpoint.
struct BCylinder {
  WorldPoint center = WorldPoint::Zero();
  double radius = 0.0;
  double height = 0.0;

  double bottom_z() const { return center.z() - 0.5 * height; }
  double top_z() const { return center.z() + 0.5 * height; }
};

struct CylinderFit {
  BCylinder result;
  /// Smallest vertical cylinder about the centroid axis holding every point.
  BCylinder enclosing;
  /// Six-sigma height, three-sigma radius cylinder.
  BCylinder sigma;
};

/// Fits H = H1 ∩ H2 as the component-wise minimum of the enclosing and
/// sigma cylinders, centred at the point centroid. Throws InvalidArgument
/// for fewer than 4 points and DegeneratePoints when the result would have
/// zero radius or height.
CylinderFit fit_bcylinder_detailed(std::span<const WorldPoint> points);

inline BCylinder fit_bcylinder(std::span<const WorldPoint> points) {
  return fit_bcylinder_detailed(points).result;
}

}  // namespace tomap
