#include "lsf/eval_metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace lsf {

namespace {

struct RankedPrediction {
  double confidence;
  std::size_t frame;
  std::size_t index;  // within the frame, for deterministic tie order
};

}  // namespace

double average_precision_r40(const std::vector<EvalFrame>& frames, double iou_th,
                             IouCriterion criterion) {
  std::size_t total_gt = 0;
  std::vector<RankedPrediction> ranked;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    total_gt += frames[f].gts.size();
    for (std::size_t i = 0; i < frames[f].preds.size(); ++i) {
      ranked.push_back({frames[f].preds[i].confidence, f, i});
    }
  }
  if (total_gt == 0 || ranked.empty()) return 0.0;

  std::sort(ranked.begin(), ranked.end(), [](const RankedPrediction& a, const RankedPrediction& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.index < b.index;
  });

  // Greedy one-to-one assignment in confidence order.
  std::vector<std::vector<char>> consumed(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) consumed[f].assign(frames[f].gts.size(), 0);

  std::vector<double> precision(ranked.size());
  std::vector<double> recall(ranked.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const EvalFrame& frame = frames[ranked[k].frame];
    const Box3D& pred = frame.preds[ranked[k].index].box;
    double best = 0.0;
    std::size_t best_gt = 0;
    bool hit = false;
    for (std::size_t g = 0; g < frame.gts.size(); ++g) {
      if (consumed[ranked[k].frame][g]) continue;
      const double iou = box_iou(pred, frame.gts[g], criterion);
      if (iou >= iou_th && iou > best) {
        best = iou;
        best_gt = g;
        hit = true;
      }
    }
    if (hit) {
      consumed[ranked[k].frame][best_gt] = 1;
      ++tp;
    }
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(total_gt);
  }

  // Interpolated precision: running maximum from the high-recall end.
  std::vector<double> interp = precision;
  for (std::size_t k = interp.size(); k-- > 1;) {
    interp[k - 1] = std::max(interp[k - 1], interp[k]);
  }

  double sum = 0.0;
  for (int j = 1; j <= 40; ++j) {
    const double level = static_cast<double>(j) / 40.0;
    // First curve point whose recall reaches the level.
    double p = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= level) {
        p = interp[k];
        break;
      }
    }
    sum += p;
  }
  return sum / 40.0 * 100.0;
}

double closed_gap(double ap_model, double ap_source_only, double ap_oracle) {
  require(ap_oracle != ap_source_only,
          "closed_gap: oracle and source-only AP coincide, gap undefined");
  return (ap_model - ap_source_only) / (ap_oracle - ap_source_only) * 100.0;
}

EvalResult evaluate(const std::vector<EvalFrame>& frames, double iou_th) {
  EvalResult r;
  r.ap_bev = average_precision_r40(frames, iou_th, IouCriterion::kBev);
  r.ap_3d = average_precision_r40(frames, iou_th, IouCriterion::k3d);
  for (const EvalFrame& f : frames) {
    r.num_gt += f.gts.size();
    r.num_pred += f.preds.size();
  }
  return r;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string sweep_report_csv(const std::vector<SweepRow>& rows) {
  std::string out = "variant_name,ap_bev,ap_3d,num_gt,num_pred\n";
  for (const SweepRow& row : rows) {
    out += row.variant_name;
    out += ',';
    out += format_double(row.result.ap_bev);
    out += ',';
    out += format_double(row.result.ap_3d);
    out += ',';
    out += std::to_string(row.result.num_gt);
    out += ',';
    out += std::to_string(row.result.num_pred);
    out += '\n';
  }
  return out;
}

}  // namespace lsf
