#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lsf/beam_ops.hpp"
#include "lsf/geometry.hpp"

namespace lsf {

/// Score of one density variant on one frame: the mean confidence of
/// matched predictions above the IoU threshold. A variant with no
/// qualifying match scores 0 and is flagged.
struct FrameConfidence {
  std::string variant_name;
  double score = 0.0;
  int matched_count = 0;  // matches above the threshold
  bool had_valid_matches = false;
};

/// Running per-variant selection counts. Variants keep their spec order so
/// iteration (and therefore tie-breaking) is deterministic.
class SelectionState {
 public:
  SelectionState() = default;
  SelectionState(std::vector<std::string> variant_names, double iou_threshold);

  double iou_threshold() const { return iou_threshold_; }
  std::size_t variant_count() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<long>& counts() const { return counts_; }

  /// Throws on an unknown variant.
  long count_of(const std::string& name) const;
  void increment(const std::string& name);
  long total() const;

 private:
  std::size_t index_of(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<long> counts_;
  double iou_threshold_ = 0.5;
};

/// Mean prediction confidence over matches with iou > iou_th; score 0 with
/// the flag cleared when nothing qualifies.
FrameConfidence frame_confidence(const std::vector<MatchedObject>& matches, double iou_th,
                                 const std::string& variant_name = {});

/// Proportion-weighted pick: S'_i = S_i * (count_i + 1) / (sum counts + N).
/// Returns the argmin index into `scores` (ties: lower raw score, then
/// lower index) and increments the winner's count.
std::size_t weighted_select(const std::vector<FrameConfidence>& scores, SelectionState& state);

using DetectorFn = std::function<std::vector<Detection>(const PointCloud&)>;

struct SelectionResult {
  PointCloud chosen;
  FrameConfidence record;
  std::size_t variant_index = 0;
};

/// Full selection round: build the density variants, score each with the
/// detector against the frame's labels, and pick by weighted_select.
/// Variant inference runs in parallel under the LSF_THREADS cap; the state
/// update is sequential.
SelectionResult select_augmentation(const PointCloud& cloud, const std::vector<Box3D>& gts,
                                    const DetectorFn& detector,
                                    const std::vector<BeamVariantSpec>& specs,
                                    SelectionState& state, int source_beams,
                                    IouCriterion criterion = IouCriterion::kBev);

/// Same, with a precomputed source labeling (one K-means per frame).
SelectionResult select_augmentation(const PointCloud& cloud, const BeamLabeling& labeling,
                                    const std::vector<Box3D>& gts, const DetectorFn& detector,
                                    const std::vector<BeamVariantSpec>& specs,
                                    SelectionState& state,
                                    IouCriterion criterion = IouCriterion::kBev);

}  // namespace lsf
