#pragma once

#include <string>
#include <vector>

#include "lsf/geometry.hpp"

namespace lsf {

/// Predictions and ground truth of one frame; IoU association never
/// crosses frames.
struct EvalFrame {
  std::vector<Detection> preds;
  std::vector<Box3D> gts;
};

struct EvalResult {
  double ap_bev = 0.0;  // percent, [0, 100]
  double ap_3d = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
};

/// KITTI-style AP over 40 recall positions. Predictions are sorted by
/// confidence (descending) and greedily assigned: a prediction is a true
/// positive when its best IoU over the frame's unconsumed ground truths
/// reaches iou_th (one-to-one, lowest index on ties). Precision is sampled
/// at recall 1/40 .. 40/40 as the maximum precision at or beyond each
/// recall level; the mean is scaled to percent. No ground truth and no
/// predictions give 0.
double average_precision_r40(const std::vector<EvalFrame>& frames, double iou_th,
                             IouCriterion criterion);

/// Fraction of the source-to-oracle gap recovered by a model, in percent:
/// (ap_model - ap_source_only) / (ap_oracle - ap_source_only) * 100.
/// Throws when the denominator is zero.
double closed_gap(double ap_model, double ap_source_only, double ap_oracle);

EvalResult evaluate(const std::vector<EvalFrame>& frames, double iou_th);

/// One evaluation row per density variant, in the given order.
struct SweepRow {
  std::string variant_name;
  EvalResult result;
};

/// Plot-ready CSV: variant_name, ap_bev, ap_3d, num_gt, num_pred.
std::string sweep_report_csv(const std::vector<SweepRow>& rows);

}  // namespace lsf
