#include "lsf/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lsf {

namespace {

// Collinearity tolerance for the clipper, in meters.
constexpr double kClipTol = 1e-12;

using Vec2 = std::array<double, 2>;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Signed area of a simple polygon (positive when counterclockwise).
double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    s += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * s;
}

Vec2 segment_line_intersection(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  const double dp = cross(a, b, p);
  const double dq = cross(a, b, q);
  const double t = dp / (dp - dq);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

// Sutherland-Hodgman: clips a convex polygon by the half-plane on the left
// of edge a->b (inclusive within kClipTol).
std::vector<Vec2> clip_by_edge(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % poly.size()];
    const bool cur_in = cross(a, b, cur) >= -kClipTol;
    const bool nxt_in = cross(a, b, nxt) >= -kClipTol;
    if (cur_in) {
      out.push_back(cur);
      if (!nxt_in) out.push_back(segment_line_intersection(cur, nxt, a, b));
    } else if (nxt_in) {
      out.push_back(segment_line_intersection(cur, nxt, a, b));
    }
  }
  return out;
}

double convex_intersection_area(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> poly = subject;
  for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i) {
    poly = clip_by_edge(poly, clip[i], clip[(i + 1) % clip.size()]);
  }
  return std::max(0.0, polygon_area(poly));
}

// Lexicographic order over raw fields; clipping is run with a canonical
// argument order so iou(a, b) and iou(b, a) are bitwise equal.
bool box_before(const Box3D& a, const Box3D& b) {
  const double ka[7] = {a.cx, a.cy, a.cz, a.l, a.w, a.h, a.yaw};
  const double kb[7] = {b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw};
  for (int i = 0; i < 7; ++i) {
    if (ka[i] != kb[i]) return ka[i] < kb[i];
  }
  return false;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const Box3D& first = box_before(b, a) ? b : a;
  const Box3D& second = box_before(b, a) ? a : b;
  const auto ca = box_corners_bev(first);
  const auto cb = box_corners_bev(second);
  return convex_intersection_area(std::vector<Vec2>(ca.begin(), ca.end()),
                                  std::vector<Vec2>(cb.begin(), cb.end()));
}

double vertical_overlap(const Box3D& a, const Box3D& b) {
  const double lo = std::max(a.cz - 0.5 * a.h, b.cz - 0.5 * b.h);
  const double hi = std::min(a.cz + 0.5 * a.h, b.cz + 0.5 * b.h);
  return std::max(0.0, hi - lo);
}

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

double yaw_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SphericalPoint to_spherical(const Point& p) {
  const double planar = std::hypot(p.x, p.y);
  if (p.x == 0.0 && p.y == 0.0) {
    throw Error("to_spherical: zenith undefined for x = y = 0");
  }
  SphericalPoint s;
  s.range = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  s.zenith = std::atan(p.z / planar);
  s.azimuth = wrap_angle(std::atan2(p.y, p.x));
  return s;
}

std::array<std::array<double, 2>, 4> box_corners_bev(const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  // Counterclockwise in the box frame: (+,+), (-,+), (-,-), (+,-).
  const double local[4][2] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
  std::array<std::array<double, 2>, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {b.cx + c * local[i][0] - s * local[i][1],
              b.cy + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

double bev_iou(const Box3D& a, const Box3D& b) {
  const auto ca = box_corners_bev(a);
  const auto cb = box_corners_bev(b);
  // Areas via the same shoelace route as the intersection so identical
  // boxes land on exactly 1.
  const double area_a = polygon_area(std::vector<Vec2>(ca.begin(), ca.end()));
  const double area_b = polygon_area(std::vector<Vec2>(cb.begin(), cb.end()));
  const double inter = bev_intersection_area(a, b);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const auto ca = box_corners_bev(a);
  const auto cb = box_corners_bev(b);
  // Volumes via shoelace footprints, matching the intersection arithmetic,
  // so identical boxes land on exactly 1.
  const double vol_a = polygon_area(std::vector<Vec2>(ca.begin(), ca.end())) * vertical_overlap(a, a);
  const double vol_b = polygon_area(std::vector<Vec2>(cb.begin(), cb.end())) * vertical_overlap(b, b);
  const double inter = bev_intersection_area(a, b) * vertical_overlap(a, b);
  const double uni = vol_a + vol_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double box_iou(const Box3D& a, const Box3D& b, IouCriterion criterion) {
  return criterion == IouCriterion::kBev ? bev_iou(a, b) : iou_3d(a, b);
}

std::vector<MatchedObject> match_predictions(const std::vector<Detection>& preds,
                                             const std::vector<Box3D>& gts,
                                             IouCriterion criterion) {
  std::vector<MatchedObject> out;
  out.reserve(preds.size());
  for (const Detection& pred : preds) {
    double best = 0.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = box_iou(pred.box, gts[g], criterion);
      if (iou > best) {  // strict: first (lowest) index wins ties
        best = iou;
        best_gt = g;
      }
    }
    if (best > 0.0) {
      out.push_back(MatchedObject{pred, best_gt, best});
    }
  }
  return out;
}

}  // namespace lsf
