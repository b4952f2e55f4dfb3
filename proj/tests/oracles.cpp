#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "lsf/rng.hpp"

namespace lsf::oracle {

bool point_in_box_bev(double x, double y, const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double dx = x - b.cx;
  const double dy = y - b.cy;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= 0.5 * b.l && std::abs(v) <= 0.5 * b.w;
}

bool point_in_box_3d(double x, double y, double z, const Box3D& b) {
  return point_in_box_bev(x, y, b) && std::abs(z - b.cz) <= 0.5 * b.h;
}

namespace {

struct Bounds {
  double xmin, xmax, ymin, ymax, zmin, zmax;
};

Bounds pair_bounds(const Box3D& a, const Box3D& b) {
  Bounds r{1e300, -1e300, 1e300, -1e300, 1e300, -1e300};
  for (const Box3D* box : {&a, &b}) {
    for (const auto& corner : box_corners_bev(*box)) {
      r.xmin = std::min(r.xmin, corner[0]);
      r.xmax = std::max(r.xmax, corner[0]);
      r.ymin = std::min(r.ymin, corner[1]);
      r.ymax = std::max(r.ymax, corner[1]);
    }
    r.zmin = std::min(r.zmin, box->cz - 0.5 * box->h);
    r.zmax = std::max(r.zmax, box->cz + 0.5 * box->h);
  }
  return r;
}

}  // namespace

double mc_bev_iou(const Box3D& a, const Box3D& b, int samples, std::uint64_t seed) {
  const Bounds r = pair_bounds(a, b);
  SeededRng rng(seed);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = rng.uniform(r.xmin, r.xmax);
    const double y = rng.uniform(r.ymin, r.ymax);
    const bool pa = point_in_box_bev(x, y, a);
    const bool pb = point_in_box_bev(x, y, b);
    in_a += pa;
    in_b += pb;
    in_both += pa && pb;
  }
  const long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

double mc_iou_3d(const Box3D& a, const Box3D& b, int samples, std::uint64_t seed) {
  const Bounds r = pair_bounds(a, b);
  SeededRng rng(seed);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = rng.uniform(r.xmin, r.xmax);
    const double y = rng.uniform(r.ymin, r.ymax);
    const double z = rng.uniform(r.zmin, r.zmax);
    const bool pa = point_in_box_3d(x, y, z, a);
    const bool pb = point_in_box_3d(x, y, z, b);
    in_a += pa;
    in_b += pb;
    in_both += pa && pb;
  }
  const long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

Box3D random_box(std::uint64_t seed) {
  SeededRng rng(seed);
  Box3D b;
  b.cx = rng.uniform(-3.0, 3.0);
  b.cy = rng.uniform(-3.0, 3.0);
  b.cz = rng.uniform(-1.0, 1.0);
  b.l = rng.uniform(0.5, 4.0);
  b.w = rng.uniform(0.5, 3.0);
  b.h = rng.uniform(0.5, 2.5);
  b.yaw = rng.uniform(-3.14159265358979, 3.14159265358979);
  return b;
}

Box3D random_box_near(const Box3D& anchor, std::uint64_t seed) {
  SeededRng rng(seed);
  Box3D b;
  b.cx = anchor.cx + rng.uniform(-1.5, 1.5);
  b.cy = anchor.cy + rng.uniform(-1.5, 1.5);
  b.cz = anchor.cz + rng.uniform(-0.8, 0.8);
  b.l = rng.uniform(0.5, 4.0);
  b.w = rng.uniform(0.5, 3.0);
  b.h = rng.uniform(0.5, 2.5);
  b.yaw = rng.uniform(-3.14159265358979, 3.14159265358979);
  return b;
}

std::vector<MatchedObject> brute_force_matches(const std::vector<Detection>& preds,
                                               const std::vector<Box3D>& gts,
                                               IouCriterion criterion) {
  std::vector<MatchedObject> out;
  for (const Detection& pred : preds) {
    std::vector<double> ious;
    for (const Box3D& gt : gts) ious.push_back(box_iou(pred.box, gt, criterion));
    double best = 0.0;
    std::size_t best_idx = 0;
    bool found = false;
    for (std::size_t g = 0; g < ious.size(); ++g) {
      if (ious[g] > best) {
        best = ious[g];
        best_idx = g;
        found = true;
      }
    }
    if (found && best > 0.0) out.push_back(MatchedObject{pred, best_idx, best});
  }
  return out;
}

double gera_brute_force(const Matrix& student_normalized, const Matrix& teacher_normalized,
                        const Matrix& relationship) {
  const int n = student_normalized.rows;
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = student_normalized.at(i, j);
      for (int m = 0; m < n; ++m) {
        for (int k = 0; k < n; ++k) {
          const double b = teacher_normalized.at(m, k);
          const double kl =
              a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
          loss += kl * relationship.at(i, m) * relationship.at(j, k);
        }
      }
    }
  }
  return loss;
}

FeatureBlock random_block(int n, int h, int w, int m, double range, std::uint64_t seed) {
  SeededRng rng(seed);
  FeatureBlock block = FeatureBlock::zeros(n, h, w, m);
  for (double& v : block.data) v = rng.uniform(-range, range);
  return block;
}

std::vector<double> ap_r40_sampled_precisions(const std::vector<EvalFrame>& frames, double iou_th,
                                              IouCriterion criterion) {
  struct Entry {
    double conf;
    std::size_t frame, index;
  };
  std::vector<Entry> order;
  std::size_t total_gt = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    total_gt += frames[f].gts.size();
    for (std::size_t i = 0; i < frames[f].preds.size(); ++i) {
      order.push_back({frames[f].preds[i].confidence, f, i});
    }
  }
  std::vector<double> sampled(40, 0.0);
  if (total_gt == 0 || order.empty()) return sampled;

  std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.index < b.index;
  });

  std::vector<std::vector<char>> used(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) used[f].assign(frames[f].gts.size(), 0);

  std::vector<double> prec(order.size()), rec(order.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const EvalFrame& fr = frames[order[k].frame];
    double best = 0.0;
    std::size_t best_g = 0;
    bool has = false;
    for (std::size_t g = 0; g < fr.gts.size(); ++g) {
      if (used[order[k].frame][g]) continue;
      const double iou = box_iou(fr.preds[order[k].index].box, fr.gts[g], criterion);
      if (iou >= iou_th && iou > best) {
        best = iou;
        best_g = g;
        has = true;
      }
    }
    if (has) {
      used[order[k].frame][best_g] = 1;
      ++tp;
    }
    prec[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    rec[k] = static_cast<double>(tp) / static_cast<double>(total_gt);
  }

  // Point-by-point: best precision among all curve points at or beyond
  // each recall level.
  for (int j = 1; j <= 40; ++j) {
    const double level = static_cast<double>(j) / 40.0;
    double best = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (rec[k] >= level) best = std::max(best, prec[k]);
    }
    sampled[j - 1] = best;
  }
  return sampled;
}

double ap_r40_brute_force(const std::vector<EvalFrame>& frames, double iou_th,
                          IouCriterion criterion) {
  const std::vector<double> sampled = ap_r40_sampled_precisions(frames, iou_th, criterion);
  double sum = 0.0;
  for (double p : sampled) sum += p;
  return sum / 40.0 * 100.0;
}

std::vector<EvalFrame> random_eval_instance(int max_objects, std::uint64_t seed) {
  SeededRng rng(seed);
  const int frame_count = rng.uniform_int(1, 4);
  std::vector<EvalFrame> frames(static_cast<std::size_t>(frame_count));
  int remaining = rng.uniform_int(1, max_objects);
  for (int f = 0; f < frame_count; ++f) {
    EvalFrame& frame = frames[static_cast<std::size_t>(f)];
    const int gts = f + 1 == frame_count ? remaining : rng.uniform_int(0, remaining);
    remaining -= gts;
    for (int g = 0; g < gts; ++g) {
      Box3D box;
      box.cx = rng.uniform(-30.0, 30.0);
      box.cy = rng.uniform(-30.0, 30.0);
      box.cz = rng.uniform(-1.2, -0.6);
      box.l = rng.uniform(3.6, 4.8);
      box.w = rng.uniform(1.6, 2.0);
      box.h = rng.uniform(1.4, 1.8);
      box.yaw = rng.uniform(-3.14159, 3.14159);
      frame.gts.push_back(box);

      // A detection near most ground truths, with varying tightness.
      if (rng.uniform() < 0.85) {
        Box3D pred = box;
        pred.cx += rng.uniform(-0.6, 0.6);
        pred.cy += rng.uniform(-0.4, 0.4);
        pred.yaw += rng.uniform(-0.1, 0.1);
        frame.preds.push_back({pred, rng.uniform(0.2, 1.0)});
      }
    }
    const int fps = rng.uniform_int(0, 4);
    for (int i = 0; i < fps; ++i) {
      Box3D fp;
      fp.cx = rng.uniform(40.0, 80.0);
      fp.cy = rng.uniform(40.0, 80.0);
      fp.cz = -1.0;
      fp.l = 4.0;
      fp.w = 1.8;
      fp.h = 1.5;
      fp.yaw = rng.uniform(-3.0, 3.0);
      frame.preds.push_back({fp, rng.uniform(0.0, 0.9)});
    }
  }
  return frames;
}

}  // namespace lsf::oracle
