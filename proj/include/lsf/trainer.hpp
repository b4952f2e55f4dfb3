#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsf/alignment.hpp"
#include "lsf/confidence_select.hpp"
#include "lsf/eval_metrics.hpp"
#include "lsf/synth_scenes.hpp"
#include "lsf/toy_detector.hpp"

namespace lsf {

struct DistillConfig {
  // Loss weights and relationship parameters.
  double alpha = 1.0;
  double beta = 1.0;
  double lambda = 0.1;
  double epsilon = 1.0;

  // Density selection.
  double iou_threshold = 0.5;
  std::vector<BeamVariantSpec> variants = default_variant_specs();
  int source_beams = 64;
  IouCriterion selection_criterion = IouCriterion::kBev;

  // Optimization.
  double learning_rate = 0.02;
  double momentum = 0.9;
  int epochs = 2;
  std::uint64_t seed = 0;
  bool use_selection = true;  // pretrain augmentation switch

  // Detector architecture and ROI protocol.
  BevGridSpec grid;
  int feature_dim = 8;
  int roi_h = 4;
  int roi_w = 4;
  RoiJitter train_jitter{0.3, 0.1};
  RoiJitter eval_jitter{0.15, 0.05};
  int background_rois = 4;

  void validate() const;
};

struct LossBreakdown {
  long step = 0;
  double det = 0.0;
  double fca = 0.0;
  double gera = 0.0;
  double total = 0.0;
  std::string selected_variant;
};

/// CSV log: step, L_det, L_FCA, L_GERA, L_overall, selected_variant.
std::string loss_log_csv(const std::vector<LossBreakdown>& history);

struct TrainState {
  ToyModel student;
  ToyModel teacher;  // frozen after construction
  EmbeddingNet embed;
  SelectionState selection;
  long step = 0;
  std::vector<LossBreakdown> history;
  std::vector<double> velocity;  // over [student params | embedding params]
};

// Deterministic ROI stream tags; fixed so a step can be replayed exactly.
constexpr std::uint64_t kRoiTagPretrain = 0x9A01;
constexpr std::uint64_t kRoiTagDistill = 0x9A02;
constexpr std::uint64_t kRoiTagEval = 0x9A03;

TrainState make_train_state(const ToyModel& pretrained_teacher, const DistillConfig& config);

std::uint64_t param_checksum(const std::vector<double>& params);

/// Detection-loss training where every frame is replaced by its
/// confidence-selected density (the in-training model scores the
/// variants). Deterministic for a fixed seed; throws when the loss leaves
/// the finite range. When given, `history` receives one per-step row.
ToyModel pretrain(const std::vector<LabeledFrame>& frames, const DistillConfig& config,
                  std::vector<LossBreakdown>* history = nullptr);

/// Teacher constants for one frame: proposal features over the aligned
/// ROIs, detached normalized edges, and the relationship matrix.
struct AlignmentTargets {
  FeatureBlock teacher_features;
  Matrix teacher_edges;  // normalized, detached
  Matrix relationship;
};

AlignmentTargets make_alignment_targets(const ToyModel& teacher, const EmbeddingNet& embed,
                                        const BevGrid& teacher_grid,
                                        const std::vector<Roi>& aligned_rois,
                                        const DistillConfig& config);

struct OverallLossResult {
  double det = 0.0;
  double fca = 0.0;
  double gera = 0.0;
  double total = 0.0;  // det + alpha * fca + beta * gera
  std::vector<double> grad;  // [student params | embedding params]
};

/// L_det + alpha * L_FCA + beta * L_GERA with the full analytic gradient
/// for the student and embedding parameters. `rois` is the complete ROI
/// set; the alignment terms use its positive (ground-truth-derived)
/// subset, which must match the targets' ROI count.
OverallLossResult overall_loss(const ToyModel& student, const EmbeddingNet& embed,
                               const AlignmentTargets& targets, const BevGrid& student_grid,
                               const std::vector<Roi>& rois, const std::vector<Box3D>& gts,
                               const DistillConfig& config);

/// One distillation step: the teacher consumes the original cloud, the
/// student the confidence-selected variant, both over shared jittered
/// ground-truth ROIs; a momentum step updates the student and embedding
/// parameters only.
LossBreakdown distill_step(TrainState& state, const LabeledFrame& frame,
                           const BeamLabeling& labeling, const DistillConfig& config);
LossBreakdown distill_step(TrainState& state, const LabeledFrame& frame,
                           const DistillConfig& config);

/// Jittered ground-truth ROIs plus clear background boxes for one frame;
/// the seed stream is derived from (seed, tag, frame index).
std::vector<Roi> frame_rois(const std::vector<Box3D>& gts, const DistillConfig& config,
                            const RoiJitter& jitter, std::uint64_t tag, std::uint64_t frame_index);

/// Detector predictions over jittered-GT + background ROIs per frame,
/// ready for the AP metrics. ROI generation depends only on (seed, frame
/// index) so density variants of the same frame share their ROI set.
std::vector<EvalFrame> detector_eval_frames(const ToyModel& model,
                                            const std::vector<LabeledFrame>& frames,
                                            const DistillConfig& config, std::uint64_t eval_seed);

EvalResult evaluate_detector(const ToyModel& model, const std::vector<LabeledFrame>& frames,
                             const DistillConfig& config, std::uint64_t eval_seed);

struct EpochEval {
  int epoch = 0;
  std::vector<SweepRow> variants;
};

struct DistillRun {
  TrainState state;
  std::vector<EpochEval> epoch_evals;
};

/// Full two-phase schedule over a benchmark: per epoch, every training
/// frame takes one distill_step, then the student is scored on each
/// validation variant.
DistillRun run_distillation(const Benchmark& bench, const ToyModel& teacher,
                            const DistillConfig& config);

}  // namespace lsf
