#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "lsf/finite_diff.hpp"
#include "lsf/io.hpp"
#include "lsf/rng.hpp"
#include "lsf/synth_scenes.hpp"
#include "lsf/toy_detector.hpp"
#include "oracles.hpp"

using namespace lsf;

namespace {

BevGridSpec tiny_grid() {
  BevGridSpec spec;
  spec.x_min = -8.0;
  spec.x_max = 8.0;
  spec.y_min = -8.0;
  spec.y_max = 8.0;
  spec.cell = 1.0;
  return spec;
}

PointCloud random_cloud(int n, const BevGridSpec& spec, std::uint64_t seed) {
  SeededRng rng(seed);
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    cloud.points.push_back(Point{rng.uniform(spec.x_min - 2.0, spec.x_max + 2.0),
                                 rng.uniform(spec.y_min - 2.0, spec.y_max + 2.0),
                                 rng.uniform(-2.0, 1.0), rng.uniform(0.0, 1.0)});
  }
  return cloud;
}

// Per-cell accumulation oracle: scans all points per cell.
double oracle_channel(const PointCloud& cloud, const BevGridSpec& spec, int iy, int ix, int c) {
  double count = 0.0, sum_z = 0.0, max_z = 0.0, sum_i = 0.0;
  bool any = false;
  for (const Point& p : cloud.points) {
    if (p.x < spec.x_min || p.x >= spec.x_max || p.y < spec.y_min || p.y >= spec.y_max) continue;
    if (static_cast<int>((p.x - spec.x_min) / spec.cell) != ix) continue;
    if (static_cast<int>((p.y - spec.y_min) / spec.cell) != iy) continue;
    count += 1.0;
    sum_z += p.z;
    max_z = any ? std::max(max_z, p.z) : p.z;
    sum_i += p.intensity;
    any = true;
  }
  if (!any) return 0.0;
  switch (c) {
    case 0: return 1.0;
    case 1: return sum_z / count;
    case 2: return max_z;
    default: return sum_i / count;
  }
}

}  // namespace

TEST_SUITE("toy_detector") {

TEST_CASE("bev_featurize empty cloud gives an all-zero grid") {
  const BevGrid grid = bev_featurize(PointCloud{}, tiny_grid());
  for (double v : grid.data) CHECK(v == 0.0);
}

TEST_CASE("bev_featurize single point lands in its cell") {
  PointCloud cloud;
  cloud.points.push_back(Point{1.4, -2.7, 0.5, 0.9});
  const BevGrid grid = bev_featurize(cloud, tiny_grid());
  const int ix = static_cast<int>((1.4 + 8.0) / 1.0);
  const int iy = static_cast<int>((-2.7 + 8.0) / 1.0);
  for (int y = 0; y < grid.ny; ++y) {
    for (int x = 0; x < grid.nx; ++x) {
      CHECK(grid.at(y, x, 0) == (y == iy && x == ix ? 1.0 : 0.0));
    }
  }
  CHECK(grid.at(iy, ix, 1) == 0.5);
  CHECK(grid.at(iy, ix, 2) == 0.5);
  CHECK(grid.at(iy, ix, 3) == 0.9);
}

TEST_CASE("bev_featurize matches the per-cell accumulation oracle exactly") {
  const BevGridSpec spec = tiny_grid();
  const PointCloud cloud = random_cloud(500, spec, 1234);
  const BevGrid grid = bev_featurize(cloud, spec);
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      for (int c = 0; c < kBevChannels; ++c) {
        CHECK(grid.at(iy, ix, c) == oracle_channel(cloud, spec, iy, ix, c));
      }
    }
  }
}

TEST_CASE("bev_featurize is permutation invariant and subset monotone") {
  const BevGridSpec spec = tiny_grid();
  PointCloud cloud = random_cloud(300, spec, 77);
  const BevGrid base = bev_featurize(cloud, spec);

  PointCloud shuffled = cloud;
  SeededRng rng(5);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled.points[i - 1], shuffled.points[rng.uniform_index(i)]);
  }
  const BevGrid permuted = bev_featurize(shuffled, spec);
  // Occupancy and max are order-independent; means are permutation
  // invariant up to rounding.
  for (std::size_t k = 0; k < base.data.size(); ++k) {
    CHECK(permuted.data[k] == doctest::Approx(base.data[k]).epsilon(1e-12));
  }

  PointCloud subset = cloud;
  subset.points.resize(cloud.size() / 2);
  const BevGrid sparse = bev_featurize(subset, spec);
  for (int iy = 0; iy < base.ny; ++iy) {
    for (int ix = 0; ix < base.nx; ++ix) {
      CHECK(sparse.at(iy, ix, 0) <= base.at(iy, ix, 0));
    }
  }
}

TEST_CASE("bev_featurize rejects bad grid specs") {
  BevGridSpec spec = tiny_grid();
  spec.x_max = spec.x_min;
  CHECK_THROWS_AS(bev_featurize(PointCloud{}, spec), Error);
  spec = tiny_grid();
  spec.cell = 0.7;  // 16 / 0.7 is not integral
  CHECK_THROWS_AS(bev_featurize(PointCloud{}, spec), Error);
}

TEST_CASE("roi_stats aligned ROI reproduces the underlying cells") {
  const BevGridSpec spec = tiny_grid();
  const PointCloud cloud = random_cloud(400, spec, 42);
  const BevGrid grid = bev_featurize(cloud, spec);

  // A yaw-0 ROI covering exactly 4x2 cells, lattice 2x4: samples sit at
  // cell centers of the covered cells.
  Box3D box;
  box.cx = 0.0;
  box.cy = 0.0;
  box.l = 4.0;  // spans cells ix = 6..9
  box.w = 2.0;  // spans cells iy = 7..8
  const FeatureBlock stats = roi_stats(grid, {{box, 0}}, 2, 4);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 4; ++x) {
      const int ix = 6 + x;
      const int iy = 7 + y;
      for (int c = 0; c < kBevChannels; ++c) {
        CHECK(stats.at(0, y, x, c) == grid.at(iy, ix, c));
      }
    }
  }
}

TEST_CASE("zero feature layer produces a zero block") {
  const BevGridSpec spec = tiny_grid();
  ToyModel model = ToyModel::seeded(spec, 8, 4, 4, 3);
  std::fill(model.params.begin(),
            model.params.begin() + static_cast<long>(8 * kBevChannels + 8), 0.0);
  const BevGrid grid = bev_featurize(random_cloud(200, spec, 9), spec);
  const FeatureBlock block =
      roi_features(model, grid, {{Box3D{0, 0, 0, 4, 2, 1.5, 0.4}, 0}}, 4, 4);
  for (double v : block.data) CHECK(v == 0.0);
}

TEST_CASE("rotated ROI matches the per-sample nearest-cell oracle") {
  const BevGridSpec spec = tiny_grid();
  const PointCloud cloud = random_cloud(600, spec, 55);
  const BevGrid grid = bev_featurize(cloud, spec);
  const Box3D box{1.3, -0.8, 0.0, 4.4, 1.9, 1.5, 0.62};
  const int h = 4, w = 4;
  const FeatureBlock stats = roi_stats(grid, {{box, 0}}, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = ((x + 0.5) / w - 0.5) * box.l;
      const double v = ((y + 0.5) / h - 0.5) * box.w;
      const double px = box.cx + std::cos(box.yaw) * u - std::sin(box.yaw) * v;
      const double py = box.cy + std::sin(box.yaw) * u + std::cos(box.yaw) * v;
      const int ix = static_cast<int>(std::floor((px - spec.x_min) / spec.cell));
      const int iy = static_cast<int>(std::floor((py - spec.y_min) / spec.cell));
      for (int c = 0; c < kBevChannels; ++c) {
        CHECK(stats.at(0, y, x, c) == grid.at(iy, ix, c));
      }
    }
  }
}

TEST_CASE("roi_stats rejects out-of-extent ROIs") {
  const BevGridSpec spec = tiny_grid();
  const BevGrid grid = bev_featurize(random_cloud(50, spec, 2), spec);
  CHECK_THROWS_AS(roi_stats(grid, {{Box3D{7.9, 0, 0, 4, 2, 1.5, 0}, 0}}, 4, 4), Error);
}

TEST_CASE("perfect predictions have zero regression term") {
  // Zero-initialized heads decode the ROI unchanged; ROIs equal to the
  // ground truths make every parameter difference vanish.
  const BevGridSpec spec = tiny_grid();
  const ToyModel model = ToyModel::seeded(spec, 8, 4, 4, 21);
  const std::vector<Box3D> gts{{0.0, 0.0, -1.0, 4.0, 1.8, 1.5, 0.3},
                               {3.5, -2.0, -1.0, 4.2, 1.8, 1.5, -0.8}};
  std::vector<Roi> rois;
  for (std::size_t g = 0; g < gts.size(); ++g) rois.push_back({gts[g], static_cast<int>(g)});
  const BevGrid grid = bev_featurize(random_cloud(200, spec, 4), spec);
  const DetLossResult res = surrogate_det_loss(model, grid, rois, gts);
  CHECK(res.regression_term == 0.0);
  CHECK(res.confidence_term > 0.0);

  const auto preds = detect_from_grid(model, grid, rois);
  CHECK(res.loss ==
        doctest::Approx(surrogate_det_loss_value(preds, rois, gts)).epsilon(1e-12));
}

TEST_CASE("no ground truth leaves only the confidence penalty") {
  const BevGridSpec spec = tiny_grid();
  const ToyModel model = ToyModel::seeded(spec, 8, 4, 4, 23);
  const std::vector<Roi> rois{{Box3D{1.0, 1.0, -1.0, 4.0, 1.8, 1.5, 0.0}, -1},
                              {Box3D{-3.0, 2.0, -1.0, 4.0, 1.8, 1.5, 1.0}, -1}};
  const BevGrid grid = bev_featurize(random_cloud(150, spec, 6), spec);
  const DetLossResult res = surrogate_det_loss(model, grid, rois, {});
  CHECK(res.regression_term == 0.0);
  CHECK(res.loss == res.confidence_term);
}

TEST_CASE("det loss gradient matches finite differences") {
  const BevGridSpec spec = tiny_grid();
  ToyModel model = ToyModel::seeded(spec, 8, 4, 4, 29);
  // Give the heads nonzero weights so every path is exercised.
  SeededRng rng(31);
  for (double& p : model.params) p += rng.uniform(-0.05, 0.05);

  const std::vector<Box3D> gts{{0.5, 0.3, -1.0, 4.0, 1.8, 1.5, 0.2},
                               {-3.0, 2.5, -1.1, 4.4, 1.9, 1.6, -1.1}};
  const std::vector<Roi> rois = make_rois(gts, spec, RoiJitter{}, 2, 17);
  const BevGrid grid = bev_featurize(random_cloud(400, spec, 8), spec);

  const DetLossResult res = surrogate_det_loss(model, grid, rois, gts);
  const auto f = [&](const std::vector<double>& p) {
    ToyModel cand = model;
    cand.params = p;
    return surrogate_det_loss(cand, grid, rois, gts).loss;
  };
  SeededRng pick(33);
  std::vector<std::size_t> coords;
  for (int i = 0; i < 40; ++i) coords.push_back(pick.uniform_index(model.params.size()));
  const GradCheckResult check = check_gradient(f, model.params, res.grad_params, coords, 1e-6);
  CHECK(check.max_rel_error < 1e-5);
}

TEST_CASE("value route equals the model route") {
  const BevGridSpec spec = tiny_grid();
  ToyModel model = ToyModel::seeded(spec, 8, 4, 4, 37);
  SeededRng rng(39);
  for (double& p : model.params) p += rng.uniform(-0.1, 0.1);
  const std::vector<Box3D> gts{{1.0, -1.0, -1.0, 4.1, 1.8, 1.5, 0.9}};
  const std::vector<Roi> rois = make_rois(gts, spec, RoiJitter{}, 3, 41);
  const BevGrid grid = bev_featurize(random_cloud(300, spec, 10), spec);
  const DetLossResult res = surrogate_det_loss(model, grid, rois, gts);
  const auto preds = detect_from_grid(model, grid, rois);
  CHECK(res.loss == doctest::Approx(surrogate_det_loss_value(preds, rois, gts)).epsilon(1e-10));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const BevGridSpec spec = tiny_grid();
  ToyModel model = ToyModel::seeded(spec, 8, 4, 4, 43);
  SeededRng rng(45);
  for (double& p : model.params) p = rng.uniform(-1.0, 1.0);

  const auto path = std::filesystem::temp_directory_path() / "lsf_toy_model_test.ckpt";
  save_model(path, model);
  const ToyModel loaded = load_model(path, spec, 8, 4, 4);
  CHECK(loaded.params == model.params);

  // Wrong configuration is rejected.
  CHECK_THROWS_AS(load_model(path, spec, 8, 4, 2), Error);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
