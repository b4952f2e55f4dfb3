#include "lsf/confidence_select.hpp"

#include <algorithm>

#include "lsf/parallel.hpp"

namespace lsf {

SelectionState::SelectionState(std::vector<std::string> variant_names, double iou_threshold)
    : names_(std::move(variant_names)),
      counts_(names_.size(), 0),
      iou_threshold_(iou_threshold) {
  require(iou_threshold_ >= 0.0 && iou_threshold_ <= 1.0,
          "SelectionState: IoU threshold must lie in [0, 1]");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      require(names_[i] != names_[j], "SelectionState: duplicate variant name " + names_[i]);
    }
  }
}

std::size_t SelectionState::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw Error("SelectionState: unknown variant '" + name + "'");
}

long SelectionState::count_of(const std::string& name) const { return counts_[index_of(name)]; }

void SelectionState::increment(const std::string& name) { counts_[index_of(name)] += 1; }

long SelectionState::total() const {
  long t = 0;
  for (long c : counts_) t += c;
  return t;
}

FrameConfidence frame_confidence(const std::vector<MatchedObject>& matches, double iou_th,
                                 const std::string& variant_name) {
  require(iou_th >= 0.0 && iou_th <= 1.0, "frame_confidence: IoU threshold must lie in [0, 1]");
  FrameConfidence out;
  out.variant_name = variant_name;
  double sum = 0.0;
  for (const MatchedObject& m : matches) {
    if (m.iou > iou_th) {
      sum += m.prediction.confidence;
      out.matched_count += 1;
    }
  }
  if (out.matched_count > 0) {
    out.score = sum / static_cast<double>(out.matched_count);
    out.had_valid_matches = true;
  }
  return out;
}

std::size_t weighted_select(const std::vector<FrameConfidence>& scores, SelectionState& state) {
  require(!scores.empty(), "weighted_select: no scores");
  const double n = static_cast<double>(scores.size());

  double total = 0.0;
  for (const FrameConfidence& s : scores) {
    total += static_cast<double>(state.count_of(s.variant_name));
  }

  std::size_t best = 0;
  double best_weighted = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double count = static_cast<double>(state.count_of(scores[i].variant_name));
    const double weighted = scores[i].score * (count + 1.0) / (total + n);
    if (i == 0 || weighted < best_weighted ||
        (weighted == best_weighted && scores[i].score < scores[best].score)) {
      best = i;
      best_weighted = weighted;
    }
  }
  state.increment(scores[best].variant_name);
  return best;
}

SelectionResult select_augmentation(const PointCloud& cloud, const BeamLabeling& labeling,
                                    const std::vector<Box3D>& gts, const DetectorFn& detector,
                                    const std::vector<BeamVariantSpec>& specs,
                                    SelectionState& state, IouCriterion criterion) {
  require(detector != nullptr, "select_augmentation: detector callable missing");
  std::vector<PointCloud> variants = make_beam_variants(cloud, labeling, specs);

  std::vector<FrameConfidence> scores(specs.size());
  parallel_for(specs.size(), [&](std::size_t v) {
    const std::vector<Detection> preds = detector(variants[v]);
    const std::vector<MatchedObject> matches = match_predictions(preds, gts, criterion);
    scores[v] = frame_confidence(matches, state.iou_threshold(), specs[v].name);
  });

  SelectionResult out;
  out.variant_index = weighted_select(scores, state);
  out.record = scores[out.variant_index];
  out.chosen = std::move(variants[out.variant_index]);
  return out;
}

SelectionResult select_augmentation(const PointCloud& cloud, const std::vector<Box3D>& gts,
                                    const DetectorFn& detector,
                                    const std::vector<BeamVariantSpec>& specs,
                                    SelectionState& state, int source_beams,
                                    IouCriterion criterion) {
  return select_augmentation(cloud, label_beams(cloud, source_beams), gts, detector, specs, state,
                             criterion);
}

}  // namespace lsf
