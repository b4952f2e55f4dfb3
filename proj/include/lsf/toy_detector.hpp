#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsf/alignment.hpp"
#include "lsf/beam_ops.hpp"
#include "lsf/feature_block.hpp"
#include "lsf/geometry.hpp"

namespace lsf {

constexpr int kBevChannels = 4;  // count, mean z, max z, mean intensity

struct BevGridSpec {
  double x_min = -40.0, x_max = 40.0;
  double y_min = -40.0, y_max = 40.0;
  double cell = 0.5;

  int nx() const;
  int ny() const;
  void validate() const;  // throws on empty or non-divisible extents
};

/// Per-cell statistics over the BEV rasterization. Channel layout:
/// 0 normalized point count (count clamped to 1), 1 mean z, 2 max z,
/// 3 mean intensity (zeros when the cell is empty). Points outside the
/// extent are ignored.
struct BevGrid {
  BevGridSpec spec;
  int ny = 0, nx = 0;
  std::vector<double> data;  // (iy, ix, channel), channel fastest

  double at(int iy, int ix, int c) const {
    return data[(static_cast<std::size_t>(iy) * nx + ix) * kBevChannels + c];
  }
};

BevGrid bev_featurize(const PointCloud& cloud, const BevGridSpec& spec);

/// Minimal differentiable detector: a shared per-cell affine feature layer
/// feeding a box-residual head and a confidence head over flattened ROI
/// lattices.
struct ToyModel {
  BevGridSpec grid;
  int feature_dim = 8;  // M
  int roi_h = 4;
  int roi_w = 4;
  std::vector<double> params;

  static ToyModel seeded(const BevGridSpec& grid, int feature_dim, int roi_h, int roi_w,
                         std::uint64_t seed);

  std::size_t flat_dim() const {
    return static_cast<std::size_t>(roi_h) * roi_w * feature_dim;
  }
  std::size_t param_count() const;
  std::string config_string() const;  // identifies the layout for checkpoints

  // Parameter layout offsets.
  const double* w_feat() const { return params.data(); }
  const double* b_feat() const { return params.data() + static_cast<std::size_t>(feature_dim) * kBevChannels; }
  const double* w_box() const { return b_feat() + feature_dim; }
  const double* b_box() const { return w_box() + 7 * flat_dim(); }
  const double* w_conf() const { return b_box() + 7; }
  const double* b_conf() const { return w_conf() + flat_dim(); }
};

/// Candidate region with its source ground truth (-1 for background).
struct Roi {
  Box3D box;
  int gt_index = -1;
};

/// Raw grid statistics resampled on each ROI's rotated H x W lattice
/// (containing-cell lookup). Throws when a lattice sample leaves the grid.
FeatureBlock roi_stats(const BevGrid& grid, const std::vector<Roi>& rois, int h, int w);

/// The shared affine feature layer applied per lattice cell.
FeatureBlock apply_feature_layer(const ToyModel& model, const FeatureBlock& stats);

/// roi_stats followed by the feature layer: N_r x H x W x M.
FeatureBlock roi_features(const ToyModel& model, const BevGrid& grid,
                          const std::vector<Roi>& rois, int h, int w);

/// Box decoded from head residuals, relative to the ROI: center offsets in
/// the ROI frame, multiplicative (exp) size factors, additive yaw.
Box3D decode_box(const Box3D& roi, const double residual[7]);

std::vector<Detection> detect(const ToyModel& model, const PointCloud& cloud,
                              const std::vector<Roi>& rois);
std::vector<Detection> detect_from_grid(const ToyModel& model, const BevGrid& grid,
                                        const std::vector<Roi>& rois);

struct DetLossResult {
  double loss = 0.0;
  double regression_term = 0.0;
  double confidence_term = 0.0;
  std::vector<double> grad_params;
};

/// Smooth-L1 on the parameter differences between decoded boxes and their
/// source ground truths (positives), plus binary cross-entropy pushing
/// positive confidences to 1 and background confidences to 0. With no
/// positive ROI the loss is the confidence penalty alone.
DetLossResult surrogate_det_loss(const ToyModel& model, const BevGrid& grid,
                                 const std::vector<Roi>& rois, const std::vector<Box3D>& gts);

/// Value-only route computed from already-decoded detections; used to
/// cross-check the model route.
double surrogate_det_loss_value(const std::vector<Detection>& preds, const std::vector<Roi>& rois,
                                const std::vector<Box3D>& gts);

/// Jittered ground-truth boxes (center +/-0.3 m, yaw +/-0.1 rad by
/// default) followed by car-sized background boxes placed clear of every
/// ground truth. Shared verbatim between teacher and student.
struct RoiJitter {
  double center = 0.3;
  double yaw = 0.1;
};
std::vector<Roi> make_rois(const std::vector<Box3D>& gts, const BevGridSpec& grid,
                           const RoiJitter& jitter, int background_count, std::uint64_t seed);

void save_model(const std::filesystem::path& path, const ToyModel& model);
ToyModel load_model(const std::filesystem::path& path, const BevGridSpec& grid, int feature_dim,
                    int roi_h, int roi_w);

double sigmoid(double z);

}  // namespace lsf
