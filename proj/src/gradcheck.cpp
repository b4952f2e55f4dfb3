#include "lsf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lsf/finite_diff.hpp"
#include "lsf/io.hpp"
#include "lsf/rng.hpp"
#include "lsf/trainer.hpp"

namespace lsf {

double GradCheckReport::worst() const {
  return std::max({max_fca, max_gera, max_det, max_overall});
}

std::string GradCheckReport::summary() const {
  return "L_FCA " + fmt_double(max_fca) + "  L_GERA " + fmt_double(max_gera) + "  L_det " +
         fmt_double(max_det) + "  L_overall " + fmt_double(max_overall) + "  (" +
         std::to_string(checks) + " coordinates)";
}

namespace {

constexpr int kH = 4;
constexpr int kW = 4;
constexpr int kM = 8;

FeatureBlock random_block(int n, double range, SeededRng& rng) {
  FeatureBlock b = FeatureBlock::zeros(n, kH, kW, kM);
  for (double& v : b.data) v = rng.uniform(-range, range);
  return b;
}

std::vector<std::size_t> pick_coords(std::size_t size, int count, SeededRng& rng) {
  std::vector<std::size_t> coords;
  coords.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) coords.push_back(rng.uniform_index(size));
  return coords;
}

void fold(GradCheckReport& report, double& slot, const GradCheckResult& res) {
  slot = std::max(slot, res.max_rel_error);
  report.checks += res.checked;
}

}  // namespace

GradCheckReport run_gradcheck_suite(std::uint64_t seed, int rounds, double step) {
  GradCheckReport report;

  for (int round = 0; round < rounds; ++round) {
    SeededRng rng(mix_seed(seed, 0xC8ECULL, static_cast<std::uint64_t>(round)));
    const int n_r = 1 + static_cast<int>(rng.uniform_index(6));

    // --- Feature content alignment.
    {
      const FeatureBlock fs = random_block(n_r, 1.0, rng);
      const FeatureBlock fa = random_block(n_r, 1.0, rng);
      const FcaResult res = fca_loss(fs, fa);
      const auto f = [&](const std::vector<double>& x) {
        FeatureBlock cand = fa;
        cand.data = x;
        return fca_loss(fs, cand).loss;
      };
      fold(report, report.max_fca,
           check_gradient(f, fa.data, res.grad_student.data, pick_coords(fa.data.size(), 20, rng),
                          step));
    }

    // --- Graph alignment through the embedding net to the features.
    {
      const EmbeddingNet net =
          EmbeddingNet::seeded(kH * kW * kM, kM, kM, mix_seed(seed, 0xE0, round));
      const FeatureBlock teacher = random_block(n_r, 1.0, rng);
      const FeatureBlock student = random_block(n_r, 1.0, rng);
      std::vector<Box3D> rois;
      for (int i = 0; i < n_r; ++i) {
        rois.push_back(Box3D{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0),
                             rng.uniform(-1.2, -0.8), rng.uniform(3.6, 4.8),
                             rng.uniform(1.6, 2.0), rng.uniform(1.4, 1.8),
                             rng.uniform(-kPi, kPi)});
      }
      const Matrix teacher_norm = edge_matrix(embed_block(net, teacher)).normalized;
      const Matrix rel = relationship_matrix(discrepancy_matrix(rois, 1.0), 0.1);
      const GeraForward fwd = gera_forward(net, student, teacher_norm, rel);
      const GeraGradients grads = gera_backward_to_features(net, fwd);

      const auto f_feat = [&](const std::vector<double>& x) {
        FeatureBlock cand = student;
        cand.data = x;
        return gera_forward(net, cand, teacher_norm, rel).loss;
      };
      fold(report, report.max_gera,
           check_gradient(f_feat, student.data, grads.features.data,
                          pick_coords(student.data.size(), 20, rng), step));

      const auto f_params = [&](const std::vector<double>& p) {
        EmbeddingNet cand = net;
        cand.params = p;
        return gera_forward(cand, student, teacher_norm, rel).loss;
      };
      fold(report, report.max_gera,
           check_gradient(f_params, net.params, grads.net_params,
                          pick_coords(net.params.size(), 20, rng), step));
    }

    // --- Surrogate detection loss and the combined objective on a frame.
    {
      SceneSpec spec;
      spec.seed = mix_seed(seed, 0xF00D, round);
      spec.beams = 16;
      spec.azimuth_step_deg = 2.0;
      spec.wall_height = 8.0;
      spec.object_count_min = n_r;
      spec.object_count_max = n_r;
      spec.object_radius_min = 8.0;
      spec.object_radius_max = 28.0;
      const Scene scene = generate_scene(spec);

      DistillConfig cfg;
      cfg.seed = mix_seed(seed, 0xF00E, round);
      cfg.grid.cell = 1.0;
      cfg.feature_dim = kM;
      cfg.roi_h = kH;
      cfg.roi_w = kW;
      cfg.background_rois = 2;
      cfg.alpha = 0.8;
      cfg.beta = 1.2;

      ToyModel student = ToyModel::seeded(cfg.grid, kM, kH, kW, cfg.seed);
      for (double& p : student.params) p += rng.uniform(-0.05, 0.05);
      ToyModel teacher = student;
      for (double& p : teacher.params) p += rng.uniform(-0.05, 0.05);
      EmbeddingNet embed =
          EmbeddingNet::seeded(static_cast<int>(student.flat_dim()), kM, kM, cfg.seed);

      const std::vector<Roi> rois =
          make_rois(scene.gt_boxes, cfg.grid, RoiJitter{}, cfg.background_rois,
                    mix_seed(seed, 0xF00F, round));
      const BevGrid grid = bev_featurize(scene.cloud, cfg.grid);

      const DetLossResult det = surrogate_det_loss(student, grid, rois, scene.gt_boxes);
      const auto f_det = [&](const std::vector<double>& p) {
        ToyModel cand = student;
        cand.params = p;
        return surrogate_det_loss(cand, grid, rois, scene.gt_boxes).loss;
      };
      fold(report, report.max_det,
           check_gradient(f_det, student.params, det.grad_params,
                          pick_coords(student.params.size(), 20, rng), step));

      std::vector<Roi> aligned;
      for (const Roi& r : rois) {
        if (r.gt_index >= 0) aligned.push_back(r);
      }
      const AlignmentTargets targets =
          make_alignment_targets(teacher, embed, grid, aligned, cfg);
      const OverallLossResult overall =
          overall_loss(student, embed, targets, grid, rois, scene.gt_boxes, cfg);

      std::vector<double> joint = student.params;
      joint.insert(joint.end(), embed.params.begin(), embed.params.end());
      const std::size_t s_count = student.params.size();
      const auto f_overall = [&](const std::vector<double>& x) {
        ToyModel cand = student;
        EmbeddingNet cand_embed = embed;
        cand.params.assign(x.begin(), x.begin() + static_cast<long>(s_count));
        cand_embed.params.assign(x.begin() + static_cast<long>(s_count), x.end());
        return overall_loss(cand, cand_embed, targets, grid, rois, scene.gt_boxes, cfg).total;
      };
      fold(report, report.max_overall,
           check_gradient(f_overall, joint, overall.grad, pick_coords(joint.size(), 20, rng),
                          step));
    }
  }
  return report;
}

}  // namespace lsf
