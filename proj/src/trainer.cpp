#include "lsf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lsf/io.hpp"
#include "lsf/parallel.hpp"
#include "lsf/rng.hpp"

namespace lsf {

namespace {

constexpr std::uint64_t kShuffleTag = 0x5F0E;

void check_finite(double loss, const char* where) {
  require(std::isfinite(loss), std::string(where) + ": loss diverged (non-finite)");
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  SeededRng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  }
  return idx;
}

void momentum_step(std::vector<double>& params, std::vector<double>& velocity,
                   const std::vector<double>& grad, std::size_t offset, double lr,
                   double momentum) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& v = velocity[offset + i];
    v = momentum * v - lr * grad[offset + i];
    params[i] += v;
  }
}

/// d loss / d feature-layer parameters from a gradient over an extracted
/// feature block, given the raw stats it was computed from.
void chain_feature_grad(const ToyModel& model, const FeatureBlock& stats,
                        const FeatureBlock& d_features, std::vector<double>& grad_params,
                        double weight) {
  double* g_wf = grad_params.data();
  double* g_bf = g_wf + static_cast<std::size_t>(model.feature_dim) * kBevChannels;
  for (int i = 0; i < stats.count; ++i) {
    for (int y = 0; y < stats.height; ++y) {
      for (int x = 0; x < stats.width; ++x) {
        for (int f = 0; f < model.feature_dim; ++f) {
          const double g = weight * d_features.at(i, y, x, f);
          if (g == 0.0) continue;
          g_bf[f] += g;
          for (int ch = 0; ch < kBevChannels; ++ch) {
            g_wf[f * kBevChannels + ch] += g * stats.at(i, y, x, ch);
          }
        }
      }
    }
  }
}

std::vector<Roi> positive_rois(const std::vector<Roi>& rois) {
  std::vector<Roi> out;
  for (const Roi& r : rois) {
    if (r.gt_index >= 0) out.push_back(r);
  }
  return out;
}

DetectorFn detector_for(const ToyModel& model, const std::vector<Roi>& rois) {
  return [&model, rois](const PointCloud& cloud) { return detect(model, cloud, rois); };
}

}  // namespace

void DistillConfig::validate() const {
  require(alpha >= 0.0 && beta >= 0.0, "DistillConfig: loss weights must be >= 0");
  require(lambda >= 0.0, "DistillConfig: lambda must be >= 0");
  require(epsilon > 0.0, "DistillConfig: epsilon must be positive");
  require(iou_threshold >= 0.0 && iou_threshold <= 1.0,
          "DistillConfig: IoU threshold must lie in [0, 1]");
  require(std::isfinite(learning_rate) && learning_rate > 0.0,
          "DistillConfig: learning rate must be positive and finite");
  require(momentum >= 0.0 && momentum < 1.0, "DistillConfig: momentum must lie in [0, 1)");
  require(epochs >= 0, "DistillConfig: epochs must be >= 0");
  require(!variants.empty(), "DistillConfig: variant set is empty");
  require(source_beams >= 1, "DistillConfig: source beam count must be >= 1");
  require(background_rois >= 0, "DistillConfig: background ROI count must be >= 0");
  grid.validate();
}

std::string loss_log_csv(const std::vector<LossBreakdown>& history) {
  std::string out = "step,L_det,L_FCA,L_GERA,L_overall,selected_variant\n";
  for (const LossBreakdown& row : history) {
    out += std::to_string(row.step) + "," + fmt_double(row.det) + "," + fmt_double(row.fca) +
           "," + fmt_double(row.gera) + "," + fmt_double(row.total) + "," +
           row.selected_variant + "\n";
  }
  return out;
}

std::uint64_t param_checksum(const std::vector<double>& params) {
  std::string bytes(params.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), params.data(), bytes.size());
  return fnv1a_hash(bytes);
}

std::vector<Roi> frame_rois(const std::vector<Box3D>& gts, const DistillConfig& config,
                            const RoiJitter& jitter, std::uint64_t tag,
                            std::uint64_t frame_index) {
  return make_rois(gts, config.grid, jitter, config.background_rois,
                   mix_seed(config.seed, tag, frame_index));
}

ToyModel pretrain(const std::vector<LabeledFrame>& frames, const DistillConfig& config,
                  std::vector<LossBreakdown>* history) {
  config.validate();
  require(!frames.empty(), "pretrain: empty training set");

  ToyModel model =
      ToyModel::seeded(config.grid, config.feature_dim, config.roi_h, config.roi_w, config.seed);
  std::vector<double> velocity(model.params.size(), 0.0);

  std::vector<std::string> names;
  for (const BeamVariantSpec& v : config.variants) names.push_back(v.name);
  SelectionState selection(names, config.iou_threshold);

  // One labeling per frame, reused across epochs.
  std::vector<BeamLabeling> labelings(frames.size());
  std::vector<char> labeled(frames.size(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(frames.size(), mix_seed(config.seed, kShuffleTag, epoch));
    for (const std::size_t f : order) {
      const LabeledFrame& frame = frames[f];
      const std::vector<Roi> rois =
          frame_rois(frame.gts, config, config.train_jitter,
                     mix_seed(kRoiTagPretrain, static_cast<std::uint64_t>(epoch)), f);

      PointCloud selected;
      const PointCloud* cloud = &frame.cloud;
      std::string variant_name = "source";
      if (config.use_selection) {
        if (!labeled[f]) {
          labelings[f] = label_beams(frame.cloud, config.source_beams);
          labeled[f] = 1;
        }
        SelectionResult res =
            select_augmentation(frame.cloud, labelings[f], frame.gts, detector_for(model, rois),
                                config.variants, selection, config.selection_criterion);
        selected = std::move(res.chosen);
        cloud = &selected;
        variant_name = res.record.variant_name;
      }

      const BevGrid grid = bev_featurize(*cloud, config.grid);
      const DetLossResult loss = surrogate_det_loss(model, grid, rois, frame.gts);
      check_finite(loss.loss, "pretrain");
      if (history != nullptr) {
        LossBreakdown row;
        row.step = static_cast<long>(history->size());
        row.det = loss.loss;
        row.total = loss.loss;
        row.selected_variant = variant_name;
        history->push_back(row);
      }
      momentum_step(model.params, velocity, loss.grad_params, 0, config.learning_rate,
                    config.momentum);
    }
  }
  return model;
}

TrainState make_train_state(const ToyModel& pretrained_teacher, const DistillConfig& config) {
  config.validate();
  TrainState state;
  state.teacher = pretrained_teacher;
  state.student = pretrained_teacher;
  state.embed = EmbeddingNet::seeded(static_cast<int>(pretrained_teacher.flat_dim()),
                                     pretrained_teacher.feature_dim,
                                     pretrained_teacher.feature_dim, config.seed);
  std::vector<std::string> names;
  for (const BeamVariantSpec& v : config.variants) names.push_back(v.name);
  state.selection = SelectionState(names, config.iou_threshold);
  state.velocity.assign(state.student.params.size() + state.embed.params.size(), 0.0);
  return state;
}

AlignmentTargets make_alignment_targets(const ToyModel& teacher, const EmbeddingNet& embed,
                                        const BevGrid& teacher_grid,
                                        const std::vector<Roi>& aligned_rois,
                                        const DistillConfig& config) {
  AlignmentTargets targets;
  if (aligned_rois.empty()) return targets;
  targets.teacher_features =
      roi_features(teacher, teacher_grid, aligned_rois, teacher.roi_h, teacher.roi_w);
  targets.teacher_edges =
      edge_matrix(embed_block(embed, targets.teacher_features)).normalized;

  std::vector<Box3D> boxes;
  for (const Roi& r : aligned_rois) boxes.push_back(r.box);
  targets.relationship =
      relationship_matrix(discrepancy_matrix(boxes, config.epsilon), config.lambda);
  return targets;
}

OverallLossResult overall_loss(const ToyModel& student, const EmbeddingNet& embed,
                               const AlignmentTargets& targets, const BevGrid& student_grid,
                               const std::vector<Roi>& rois, const std::vector<Box3D>& gts,
                               const DistillConfig& config) {
  OverallLossResult out;
  out.grad.assign(student.params.size() + embed.params.size(), 0.0);

  // Detection term over the full ROI set.
  const DetLossResult det = surrogate_det_loss(student, student_grid, rois, gts);
  out.det = det.loss;
  for (std::size_t i = 0; i < det.grad_params.size(); ++i) out.grad[i] = det.grad_params[i];

  const std::vector<Roi> aligned = positive_rois(rois);
  const bool alignment_active = config.alpha != 0.0 || config.beta != 0.0;
  if (alignment_active && !aligned.empty()) {
    require(targets.teacher_features.count == static_cast<int>(aligned.size()),
            "overall_loss: alignment targets do not match the positive ROI count");
    const FeatureBlock stats =
        roi_stats(student_grid, aligned, student.roi_h, student.roi_w);
    const FeatureBlock features = apply_feature_layer(student, stats);

    std::vector<double> student_grad(student.params.size(), 0.0);

    // Feature content alignment.
    const FcaResult fca = fca_loss(targets.teacher_features, features);
    out.fca = fca.loss;
    chain_feature_grad(student, stats, fca.grad_student, student_grad, config.alpha);

    // Graph-based embedding relationship alignment.
    const GeraForward fwd =
        gera_forward(embed, features, targets.teacher_edges, targets.relationship);
    out.gera = fwd.loss;
    const GeraGradients gera_grads = gera_backward_to_features(embed, fwd);
    chain_feature_grad(student, stats, gera_grads.features, student_grad, config.beta);

    for (std::size_t i = 0; i < student_grad.size(); ++i) out.grad[i] += student_grad[i];
    for (std::size_t i = 0; i < gera_grads.net_params.size(); ++i) {
      out.grad[student.params.size() + i] += config.beta * gera_grads.net_params[i];
    }
  }

  out.total = out.det + config.alpha * out.fca + config.beta * out.gera;
  return out;
}

LossBreakdown distill_step(TrainState& state, const LabeledFrame& frame,
                           const BeamLabeling& labeling, const DistillConfig& config) {
  const std::vector<Roi> rois =
      frame_rois(frame.gts, config, config.train_jitter, kRoiTagDistill,
                 static_cast<std::uint64_t>(state.step));

  // The student (the current detector) scores the density variants.
  SelectionResult selected =
      select_augmentation(frame.cloud, labeling, frame.gts, detector_for(state.student, rois),
                          config.variants, state.selection, config.selection_criterion);

  const BevGrid teacher_grid = bev_featurize(frame.cloud, config.grid);
  const BevGrid student_grid = bev_featurize(selected.chosen, config.grid);

  const AlignmentTargets targets = make_alignment_targets(
      state.teacher, state.embed, teacher_grid, positive_rois(rois), config);
  const OverallLossResult loss =
      overall_loss(state.student, state.embed, targets, student_grid, rois, frame.gts, config);
  check_finite(loss.total, "distill_step");

  momentum_step(state.student.params, state.velocity, loss.grad, 0, config.learning_rate,
                config.momentum);
  momentum_step(state.embed.params, state.velocity, loss.grad, state.student.params.size(),
                config.learning_rate, config.momentum);

  LossBreakdown row;
  row.step = state.step;
  row.det = loss.det;
  row.fca = loss.fca;
  row.gera = loss.gera;
  row.total = loss.total;
  row.selected_variant = selected.record.variant_name;
  state.history.push_back(row);
  state.step += 1;
  return row;
}

LossBreakdown distill_step(TrainState& state, const LabeledFrame& frame,
                           const DistillConfig& config) {
  return distill_step(state, frame, label_beams(frame.cloud, config.source_beams), config);
}

std::vector<EvalFrame> detector_eval_frames(const ToyModel& model,
                                            const std::vector<LabeledFrame>& frames,
                                            const DistillConfig& config,
                                            std::uint64_t eval_seed) {
  std::vector<EvalFrame> out(frames.size());
  parallel_for(frames.size(), [&](std::size_t f) {
    const std::vector<Roi> rois =
        make_rois(frames[f].gts, config.grid, config.eval_jitter, config.background_rois,
                  mix_seed(eval_seed, kRoiTagEval, f));
    out[f].preds = detect(model, frames[f].cloud, rois);
    out[f].gts = frames[f].gts;
  });
  return out;
}

EvalResult evaluate_detector(const ToyModel& model, const std::vector<LabeledFrame>& frames,
                             const DistillConfig& config, std::uint64_t eval_seed) {
  return evaluate(detector_eval_frames(model, frames, config, eval_seed), 0.7);
}

DistillRun run_distillation(const Benchmark& bench, const ToyModel& teacher,
                            const DistillConfig& config) {
  config.validate();
  require(!bench.train.empty(), "run_distillation: empty training split");

  DistillRun run;
  run.state = make_train_state(teacher, config);

  std::vector<BeamLabeling> labelings(bench.train.size());
  std::vector<char> labeled(bench.train.size(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order =
        shuffled_indices(bench.train.size(), mix_seed(config.seed, kShuffleTag + 1, epoch));
    for (const std::size_t f : order) {
      if (!labeled[f]) {
        labelings[f] = label_beams(bench.train[f].cloud, config.source_beams);
        labeled[f] = 1;
      }
      distill_step(run.state, bench.train[f], labelings[f], config);
    }

    EpochEval eval;
    eval.epoch = epoch;
    for (const std::string& name : bench.variant_names) {
      const auto it = bench.val_variants.find(name);
      require(it != bench.val_variants.end(), "run_distillation: missing variant set " + name);
      eval.variants.push_back(
          {name, evaluate_detector(run.state.student, it->second, config, config.seed)});
    }
    run.epoch_evals.push_back(std::move(eval));
  }
  return run;
}

}  // namespace lsf
