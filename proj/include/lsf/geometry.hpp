#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "lsf/common.hpp"

namespace lsf {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
};

struct SphericalPoint {
  double range = 0.0;    // meters, >= 0
  double zenith = 0.0;   // radians in (-pi/2, pi/2)
  double azimuth = 0.0;  // radians in (-pi, pi]
};

/// Oriented 3D box: center, size (length, width, height), yaw about +z.
struct Box3D {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double yaw = 0.0;

  double bev_area() const { return l * w; }
  double volume() const { return l * w * h; }
};

struct Detection {
  Box3D box;
  double confidence = 0.0;  // in [0, 1]
};

/// A prediction associated to its max-IoU ground-truth box.
struct MatchedObject {
  Detection prediction;
  std::size_t gt_index = 0;
  double iou = 0.0;
};

enum class IouCriterion { kBev, k3d };

/// Cartesian to spherical conversion. Zenith is the elevation above the
/// x-y plane, azimuth the two-argument arctangent of (y, x). Throws when
/// x = y = 0 (zenith undefined on the vertical axis).
SphericalPoint to_spherical(const Point& p);

/// BEV corners of the yaw-rotated l-by-w footprint, counterclockwise.
std::array<std::array<double, 2>, 4> box_corners_bev(const Box3D& b);

/// Intersection-over-union of the two boxes' rotated BEV footprints.
/// Exact convex-polygon clipping; disjoint boxes give 0.
double bev_iou(const Box3D& a, const Box3D& b);

/// 3D IoU: BEV intersection area times vertical overlap over volume union.
double iou_3d(const Box3D& a, const Box3D& b);

/// Associates each prediction with the ground truth of maximum IoU
/// (strictly positive); many predictions may share one ground truth.
/// Ties break toward the lowest ground-truth index. Output order follows
/// the prediction order.
std::vector<MatchedObject> match_predictions(const std::vector<Detection>& preds,
                                             const std::vector<Box3D>& gts,
                                             IouCriterion criterion);

double box_iou(const Box3D& a, const Box3D& b, IouCriterion criterion);

}  // namespace lsf
