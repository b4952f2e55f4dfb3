#include "lsf/toy_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lsf/io.hpp"
#include "lsf/rng.hpp"

namespace lsf {

namespace {

int extent_cells(double lo, double hi, double cell, const char* axis) {
  require(cell > 0.0, "BevGridSpec: cell size must be positive");
  const double span = hi - lo;
  require(span > 0.0, std::string("BevGridSpec: empty ") + axis + " extent");
  const double cells = span / cell;
  const double rounded = std::round(cells);
  require(std::abs(cells - rounded) < 1e-9 && rounded >= 1.0,
          std::string("BevGridSpec: ") + axis + " extent is not divisible by the cell size");
  return static_cast<int>(rounded);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_grad(double x) {
  if (x > 1.0) return 1.0;
  if (x < -1.0) return -1.0;
  return x;
}

// Numerically stable binary cross-entropy in logit space.
double bce_from_logit(double z, double target) {
  return std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int BevGridSpec::nx() const { return extent_cells(x_min, x_max, cell, "x"); }
int BevGridSpec::ny() const { return extent_cells(y_min, y_max, cell, "y"); }

void BevGridSpec::validate() const {
  nx();
  ny();
}

BevGrid bev_featurize(const PointCloud& cloud, const BevGridSpec& spec) {
  spec.validate();
  BevGrid grid;
  grid.spec = spec;
  grid.nx = spec.nx();
  grid.ny = spec.ny();
  const std::size_t cells = static_cast<std::size_t>(grid.nx) * grid.ny;
  grid.data.assign(cells * kBevChannels, 0.0);

  std::vector<double> count(cells, 0.0);
  std::vector<double> sum_z(cells, 0.0);
  std::vector<double> max_z(cells, -std::numeric_limits<double>::infinity());
  std::vector<double> sum_i(cells, 0.0);

  for (const Point& p : cloud.points) {
    if (p.x < spec.x_min || p.x >= spec.x_max || p.y < spec.y_min || p.y >= spec.y_max) continue;
    const int ix = static_cast<int>((p.x - spec.x_min) / spec.cell);
    const int iy = static_cast<int>((p.y - spec.y_min) / spec.cell);
    if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) continue;
    const std::size_t cell = static_cast<std::size_t>(iy) * grid.nx + ix;
    count[cell] += 1.0;
    sum_z[cell] += p.z;
    max_z[cell] = std::max(max_z[cell], p.z);
    sum_i[cell] += p.intensity;
  }

  for (std::size_t c = 0; c < cells; ++c) {
    if (count[c] == 0.0) continue;
    double* out = grid.data.data() + c * kBevChannels;
    out[0] = 1.0;  // occupancy: count clamped into [0, 1]
    out[1] = sum_z[c] / count[c];
    out[2] = max_z[c];
    out[3] = sum_i[c] / count[c];
  }
  return grid;
}

std::size_t ToyModel::param_count() const {
  const std::size_t flat = flat_dim();
  return static_cast<std::size_t>(feature_dim) * kBevChannels + feature_dim  // feature layer
         + 7 * flat + 7                                                      // box head
         + flat + 1;                                                         // confidence head
}

std::string ToyModel::config_string() const {
  return "toy-model-v1|grid=" + fmt_double(grid.x_min) + ":" + fmt_double(grid.x_max) + ":" +
         fmt_double(grid.y_min) + ":" + fmt_double(grid.y_max) + ":" + fmt_double(grid.cell) +
         "|m=" + std::to_string(feature_dim) + "|h=" + std::to_string(roi_h) +
         "|w=" + std::to_string(roi_w);
}

ToyModel ToyModel::seeded(const BevGridSpec& grid, int feature_dim, int roi_h, int roi_w,
                          std::uint64_t seed) {
  require(feature_dim >= 1 && roi_h >= 1 && roi_w >= 1, "ToyModel: invalid dimensions");
  grid.validate();
  ToyModel model;
  model.grid = grid;
  model.feature_dim = feature_dim;
  model.roi_h = roi_h;
  model.roi_w = roi_w;
  model.params.assign(model.param_count(), 0.0);

  // Small random feature layer; heads start at zero so the initial
  // detector returns the ROIs themselves with confidence sigmoid(-1).
  SeededRng rng(mix_seed(seed, 0x70D3ULL));
  for (int i = 0; i < feature_dim * kBevChannels; ++i) {
    model.params[static_cast<std::size_t>(i)] = rng.uniform(-0.5, 0.5);
  }
  model.params[model.param_count() - 1] = -1.0;  // confidence bias
  return model;
}

FeatureBlock roi_stats(const BevGrid& grid, const std::vector<Roi>& rois, int h, int w) {
  require(h >= 1 && w >= 1, "roi_stats: lattice must be at least 1x1");
  FeatureBlock out = FeatureBlock::zeros(static_cast<int>(rois.size()), h, w, kBevChannels);
  const BevGridSpec& spec = grid.spec;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const Box3D& b = rois[i].box;
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Lattice sample in the ROI frame: u along length, v along width.
        const double u = ((x + 0.5) / w - 0.5) * b.l;
        const double v = ((y + 0.5) / h - 0.5) * b.w;
        const double px = b.cx + c * u - s * v;
        const double py = b.cy + s * u + c * v;
        const int ix = static_cast<int>(std::floor((px - spec.x_min) / spec.cell));
        const int iy = static_cast<int>(std::floor((py - spec.y_min) / spec.cell));
        require(ix >= 0 && ix < grid.nx && iy >= 0 && iy < grid.ny,
                "roi_stats: ROI " + std::to_string(i) + " leaves the grid extent");
        for (int ch = 0; ch < kBevChannels; ++ch) {
          out.at(static_cast<int>(i), y, x, ch) = grid.at(iy, ix, ch);
        }
      }
    }
  }
  return out;
}

FeatureBlock apply_feature_layer(const ToyModel& model, const FeatureBlock& stats) {
  require(stats.channels == kBevChannels, "apply_feature_layer: expected raw BEV statistics");
  const int m = model.feature_dim;
  FeatureBlock out = FeatureBlock::zeros(stats.count, stats.height, stats.width, m);
  const double* w = model.w_feat();
  const double* b = model.b_feat();
  for (int i = 0; i < stats.count; ++i) {
    for (int y = 0; y < stats.height; ++y) {
      for (int x = 0; x < stats.width; ++x) {
        for (int f = 0; f < m; ++f) {
          double acc = b[f];
          for (int ch = 0; ch < kBevChannels; ++ch) {
            acc += w[f * kBevChannels + ch] * stats.at(i, y, x, ch);
          }
          out.at(i, y, x, f) = acc;
        }
      }
    }
  }
  return out;
}

FeatureBlock roi_features(const ToyModel& model, const BevGrid& grid,
                          const std::vector<Roi>& rois, int h, int w) {
  return apply_feature_layer(model, roi_stats(grid, rois, h, w));
}

Box3D decode_box(const Box3D& roi, const double r[7]) {
  const double c = std::cos(roi.yaw);
  const double s = std::sin(roi.yaw);
  Box3D out;
  out.cx = roi.cx + c * r[0] - s * r[1];
  out.cy = roi.cy + s * r[0] + c * r[1];
  out.cz = roi.cz + r[2];
  out.l = roi.l * std::exp(r[3]);
  out.w = roi.w * std::exp(r[4]);
  out.h = roi.h * std::exp(r[5]);
  out.yaw = wrap_angle(roi.yaw + r[6]);
  return out;
}

namespace {

struct HeadOutputs {
  double residual[7];
  double logit;
};

HeadOutputs run_heads(const ToyModel& model, const double* flat) {
  HeadOutputs out{};
  const std::size_t p = model.flat_dim();
  const double* wb = model.w_box();
  const double* bb = model.b_box();
  for (int k = 0; k < 7; ++k) {
    double acc = bb[k];
    const double* row = wb + static_cast<std::size_t>(k) * p;
    for (std::size_t j = 0; j < p; ++j) acc += row[j] * flat[j];
    out.residual[k] = acc;
  }
  const double* wc = model.w_conf();
  double acc = *model.b_conf();
  for (std::size_t j = 0; j < p; ++j) acc += wc[j] * flat[j];
  out.logit = acc;
  return out;
}

}  // namespace

std::vector<Detection> detect_from_grid(const ToyModel& model, const BevGrid& grid,
                                        const std::vector<Roi>& rois) {
  const FeatureBlock features = roi_features(model, grid, rois, model.roi_h, model.roi_w);
  std::vector<Detection> out;
  out.reserve(rois.size());
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const HeadOutputs heads = run_heads(model, features.proposal(static_cast<int>(i)));
    out.push_back({decode_box(rois[i].box, heads.residual), sigmoid(heads.logit)});
  }
  return out;
}

std::vector<Detection> detect(const ToyModel& model, const PointCloud& cloud,
                              const std::vector<Roi>& rois) {
  return detect_from_grid(model, bev_featurize(cloud, model.grid), rois);
}

DetLossResult surrogate_det_loss(const ToyModel& model, const BevGrid& grid,
                                 const std::vector<Roi>& rois, const std::vector<Box3D>& gts) {
  require(!rois.empty(), "surrogate_det_loss: no ROIs");
  const FeatureBlock stats = roi_stats(grid, rois, model.roi_h, model.roi_w);
  const FeatureBlock features = apply_feature_layer(model, stats);
  const std::size_t p = model.flat_dim();

  DetLossResult out;
  out.grad_params.assign(model.params.size(), 0.0);

  std::size_t positives = 0;
  for (const Roi& roi : rois) {
    if (roi.gt_index >= 0) {
      require(static_cast<std::size_t>(roi.gt_index) < gts.size(),
              "surrogate_det_loss: ROI references a missing ground truth");
      ++positives;
    }
  }
  const double reg_scale = positives == 0 ? 0.0 : 1.0 / static_cast<double>(positives);
  const double conf_scale = 1.0 / static_cast<double>(rois.size());

  double* g_wf = out.grad_params.data();
  double* g_bf = g_wf + static_cast<std::size_t>(model.feature_dim) * kBevChannels;
  double* g_wb = g_bf + model.feature_dim;
  double* g_bb = g_wb + 7 * p;
  double* g_wc = g_bb + 7;
  double* g_bc = g_wc + p;

  std::vector<double> d_flat(p);
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const Roi& roi = rois[i];
    const double* flat = features.proposal(static_cast<int>(i));
    const HeadOutputs heads = run_heads(model, flat);
    const Box3D pred = decode_box(roi.box, heads.residual);

    std::fill(d_flat.begin(), d_flat.end(), 0.0);

    double d_res[7] = {0, 0, 0, 0, 0, 0, 0};
    if (roi.gt_index >= 0) {
      const Box3D& gt = gts[static_cast<std::size_t>(roi.gt_index)];
      const double diffs[7] = {pred.cx - gt.cx, pred.cy - gt.cy, pred.cz - gt.cz,
                               pred.l - gt.l,   pred.w - gt.w,   pred.h - gt.h,
                               wrap_angle(pred.yaw - gt.yaw)};
      double reg = 0.0;
      for (double d : diffs) reg += smooth_l1(d);
      out.regression_term += reg * reg_scale;

      // d diff / d residual, through the box decoding.
      const double c = std::cos(roi.box.yaw);
      const double s = std::sin(roi.box.yaw);
      const double g0 = smooth_l1_grad(diffs[0]) * reg_scale;
      const double g1 = smooth_l1_grad(diffs[1]) * reg_scale;
      d_res[0] = g0 * c + g1 * s;
      d_res[1] = -g0 * s + g1 * c;
      d_res[2] = smooth_l1_grad(diffs[2]) * reg_scale;
      d_res[3] = smooth_l1_grad(diffs[3]) * reg_scale * pred.l;
      d_res[4] = smooth_l1_grad(diffs[4]) * reg_scale * pred.w;
      d_res[5] = smooth_l1_grad(diffs[5]) * reg_scale * pred.h;
      d_res[6] = smooth_l1_grad(diffs[6]) * reg_scale;
    }

    const double target = roi.gt_index >= 0 ? 1.0 : 0.0;
    out.confidence_term += bce_from_logit(heads.logit, target) * conf_scale;
    const double d_logit = (sigmoid(heads.logit) - target) * conf_scale;

    // Heads backward.
    const double* wb = model.w_box();
    for (int k = 0; k < 7; ++k) {
      if (d_res[k] == 0.0) continue;
      g_bb[k] += d_res[k];
      const double* row = wb + static_cast<std::size_t>(k) * p;
      double* g_row = g_wb + static_cast<std::size_t>(k) * p;
      for (std::size_t j = 0; j < p; ++j) {
        g_row[j] += d_res[k] * flat[j];
        d_flat[j] += d_res[k] * row[j];
      }
    }
    const double* wc = model.w_conf();
    *g_bc += d_logit;
    for (std::size_t j = 0; j < p; ++j) {
      g_wc[j] += d_logit * flat[j];
      d_flat[j] += d_logit * wc[j];
    }

    // Feature layer backward: flat index (y, x, f) over the stats lattice.
    for (int y = 0; y < model.roi_h; ++y) {
      for (int x = 0; x < model.roi_w; ++x) {
        const std::size_t base = (static_cast<std::size_t>(y) * model.roi_w + x) *
                                 static_cast<std::size_t>(model.feature_dim);
        for (int f = 0; f < model.feature_dim; ++f) {
          const double g = d_flat[base + f];
          if (g == 0.0) continue;
          g_bf[f] += g;
          for (int ch = 0; ch < kBevChannels; ++ch) {
            g_wf[f * kBevChannels + ch] += g * stats.at(static_cast<int>(i), y, x, ch);
          }
        }
      }
    }
  }

  out.loss = out.regression_term + out.confidence_term;
  return out;
}

double surrogate_det_loss_value(const std::vector<Detection>& preds, const std::vector<Roi>& rois,
                                const std::vector<Box3D>& gts) {
  require(preds.size() == rois.size(), "surrogate_det_loss_value: preds/rois size mismatch");
  require(!rois.empty(), "surrogate_det_loss_value: no ROIs");
  std::size_t positives = 0;
  for (const Roi& roi : rois) positives += roi.gt_index >= 0;
  const double reg_scale = positives == 0 ? 0.0 : 1.0 / static_cast<double>(positives);
  const double conf_scale = 1.0 / static_cast<double>(rois.size());

  double loss = 0.0;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const Box3D& pred = preds[i].box;
    if (rois[i].gt_index >= 0) {
      const Box3D& gt = gts[static_cast<std::size_t>(rois[i].gt_index)];
      loss += (smooth_l1(pred.cx - gt.cx) + smooth_l1(pred.cy - gt.cy) +
               smooth_l1(pred.cz - gt.cz) + smooth_l1(pred.l - gt.l) + smooth_l1(pred.w - gt.w) +
               smooth_l1(pred.h - gt.h) + smooth_l1(wrap_angle(pred.yaw - gt.yaw))) *
              reg_scale;
    }
    const double target = rois[i].gt_index >= 0 ? 1.0 : 0.0;
    const double c = std::clamp(preds[i].confidence, 1e-12, 1.0 - 1e-12);
    loss += -(target * std::log(c) + (1.0 - target) * std::log(1.0 - c)) * conf_scale;
  }
  return loss;
}

std::vector<Roi> make_rois(const std::vector<Box3D>& gts, const BevGridSpec& grid,
                           const RoiJitter& jitter, int background_count, std::uint64_t seed) {
  SeededRng rng(mix_seed(seed, 0x2015ULL));
  std::vector<Roi> rois;
  rois.reserve(gts.size() + static_cast<std::size_t>(background_count));
  for (std::size_t g = 0; g < gts.size(); ++g) {
    Box3D b = gts[g];
    b.cx += rng.uniform(-jitter.center, jitter.center);
    b.cy += rng.uniform(-jitter.center, jitter.center);
    b.yaw = wrap_angle(b.yaw + rng.uniform(-jitter.yaw, jitter.yaw));
    rois.push_back({b, static_cast<int>(g)});
  }

  // Background candidates clear of every ground truth, kept away from the
  // grid border so the sampling lattice stays inside.
  const double margin = 5.0;
  for (int i = 0; i < background_count; ++i) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      Box3D b;
      b.cx = rng.uniform(grid.x_min + margin, grid.x_max - margin);
      b.cy = rng.uniform(grid.y_min + margin, grid.y_max - margin);
      b.cz = -1.0;
      b.l = rng.uniform(3.6, 4.8);
      b.w = rng.uniform(1.6, 2.0);
      b.h = rng.uniform(1.4, 1.8);
      b.yaw = rng.uniform(-kPi, kPi);
      bool clear = true;
      for (const Box3D& gt : gts) {
        if (bev_iou(b, gt) > 0.0) {
          clear = false;
          break;
        }
      }
      if (clear) {
        rois.push_back({b, -1});
        break;
      }
    }
  }
  return rois;
}

void save_model(const std::filesystem::path& path, const ToyModel& model) {
  write_param_file(path, model.config_string(), model.params);
}

ToyModel load_model(const std::filesystem::path& path, const BevGridSpec& grid, int feature_dim,
                    int roi_h, int roi_w) {
  ToyModel model;
  model.grid = grid;
  model.feature_dim = feature_dim;
  model.roi_h = roi_h;
  model.roi_w = roi_w;
  model.params = read_param_file(path, model.config_string());
  require(model.params.size() == model.param_count(),
          "load_model: parameter count mismatch in " + path.string());
  return model;
}

}  // namespace lsf
