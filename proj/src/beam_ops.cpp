#include "lsf/beam_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lsf {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kConvergenceTol = 1e-6;  // radians

std::vector<double> point_zeniths(const PointCloud& cloud) {
  std::vector<double> zeniths;
  zeniths.reserve(cloud.size());
  for (const Point& p : cloud.points) zeniths.push_back(to_spherical(p).zenith);
  return zeniths;
}

void check_labeling(const PointCloud& cloud, const BeamLabeling& labeling) {
  require(labeling.labels.size() == cloud.size(),
          "beam labeling does not match cloud: " + std::to_string(labeling.labels.size()) +
              " labels for " + std::to_string(cloud.size()) + " points");
  for (int lbl : labeling.labels) {
    require(lbl >= 0 && lbl < labeling.beam_count(), "beam label out of range");
  }
}

}  // namespace

std::vector<BeamVariantSpec> default_variant_specs() {
  return {
      {"32", 2, 1},
      {"32*", 2, 2},
      {"16", 4, 1},
      {"16*", 4, 2},
  };
}

BeamLabeling label_beams(const PointCloud& cloud, int k) {
  require(k >= 1, "label_beams: k must be >= 1");
  require(!cloud.empty(), "label_beams: empty cloud");

  const std::vector<double> zeniths = point_zeniths(cloud);
  std::vector<double> sorted = zeniths;
  std::sort(sorted.begin(), sorted.end());

  const auto distinct = static_cast<std::size_t>(
      std::distance(sorted.begin(), std::unique(sorted.begin(), sorted.end())));
  require(distinct >= static_cast<std::size_t>(k),
          "label_beams: cloud has " + std::to_string(distinct) + " distinct zeniths, need " +
              std::to_string(k));

  // Centroids start at the k evenly spaced quantiles of the zenith
  // distribution (ascending during iteration).
  const std::size_t n = zeniths.size();
  std::vector<double> centroids(k);
  for (int i = 0; i < k; ++i) {
    const double q = (i + 0.5) / k;
    centroids[i] = sorted[std::min(n - 1, static_cast<std::size_t>(q * static_cast<double>(n)))];
  }
  std::sort(centroids.begin(), centroids.end());

  std::vector<int> assign(n, 0);
  std::vector<double> sums(k);
  std::vector<std::size_t> counts(k);
  std::vector<double> midpoints(k > 1 ? k - 1 : 0);

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    // 1-D assignment: nearest centroid found via the midpoint fence.
    for (int i = 0; i + 1 < k; ++i) midpoints[i] = 0.5 * (centroids[i] + centroids[i + 1]);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto it = std::upper_bound(midpoints.begin(), midpoints.end(), zeniths[p]);
      const int c = static_cast<int>(it - midpoints.begin());
      assign[p] = c;
      sums[c] += zeniths[p];
      counts[c] += 1;
    }
    double max_move = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep a starved centroid in place
      const double updated = sums[c] / static_cast<double>(counts[c]);
      max_move = std::max(max_move, std::abs(updated - centroids[c]));
      centroids[c] = updated;
    }
    if (max_move < kConvergenceTol) break;
  }

  // Final assignment against the converged centroids.
  for (int i = 0; i + 1 < k; ++i) midpoints[i] = 0.5 * (centroids[i] + centroids[i + 1]);
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto it = std::upper_bound(midpoints.begin(), midpoints.end(), zeniths[p]);
    const int c = static_cast<int>(it - midpoints.begin());
    assign[p] = c;
    counts[c] += 1;
  }

  for (int c = 0; c < k; ++c) {
    require(counts[c] > 0, "label_beams: cluster " + std::to_string(c) + " empty after convergence");
  }

  // Remap so beam 0 is the topmost (largest zenith) beam.
  BeamLabeling out;
  out.centroids.assign(centroids.rbegin(), centroids.rend());
  out.labels.resize(n);
  for (std::size_t p = 0; p < n; ++p) out.labels[p] = k - 1 - assign[p];
  return out;
}

PointCloud downsample_beams(const PointCloud& cloud, const BeamLabeling& labeling, int stride) {
  require(stride >= 1, "downsample_beams: stride must be >= 1");
  check_labeling(cloud, labeling);
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(cloud.size() / static_cast<std::size_t>(stride) + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labeling.labels[i] % stride == 0) out.points.push_back(cloud.points[i]);
  }
  return out;
}

PointCloud subsample_points_per_beam(const PointCloud& cloud, const BeamLabeling& labeling,
                                     int stride) {
  require(stride >= 1, "subsample_points_per_beam: stride must be >= 1");
  check_labeling(cloud, labeling);
  if (stride == 1) return cloud;

  const int k = labeling.beam_count();
  std::vector<std::vector<std::size_t>> per_beam(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    per_beam[static_cast<std::size_t>(labeling.labels[i])].push_back(i);
  }

  std::vector<char> keep(cloud.size(), 0);
  std::vector<std::pair<double, std::size_t>> order;
  for (auto& beam : per_beam) {
    order.clear();
    order.reserve(beam.size());
    for (std::size_t idx : beam) {
      order.emplace_back(to_spherical(cloud.points[idx]).azimuth, idx);
    }
    // Azimuth rank; index breaks exact-azimuth ties deterministically.
    std::sort(order.begin(), order.end());
    for (std::size_t rank = 0; rank < order.size(); rank += static_cast<std::size_t>(stride)) {
      keep[order[rank].second] = 1;
    }
  }

  PointCloud out;
  out.frame_id = cloud.frame_id;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (keep[i]) out.points.push_back(cloud.points[i]);
  }
  return out;
}

std::vector<PointCloud> make_beam_variants(const PointCloud& cloud, int source_beams,
                                           const std::vector<BeamVariantSpec>& specs) {
  require(!specs.empty(), "make_beam_variants: no variant specs");
  require(!cloud.empty(), "make_beam_variants: empty cloud");
  return make_beam_variants(cloud, label_beams(cloud, source_beams), specs);
}

std::vector<PointCloud> make_beam_variants(const PointCloud& cloud, const BeamLabeling& labeling,
                                           const std::vector<BeamVariantSpec>& specs) {
  require(!specs.empty(), "make_beam_variants: no variant specs");
  require(!cloud.empty(), "make_beam_variants: empty cloud");
  check_labeling(cloud, labeling);

  std::vector<PointCloud> out;
  out.reserve(specs.size());
  for (const BeamVariantSpec& spec : specs) {
    require(spec.beam_keep_stride >= 1 && spec.point_keep_stride >= 1,
            "make_beam_variants: strides must be >= 1 for variant " + spec.name);
    PointCloud reduced = downsample_beams(cloud, labeling, spec.beam_keep_stride);
    if (spec.point_keep_stride > 1) {
      // Relabel indices for the surviving beams so per-beam ranks stay exact.
      BeamLabeling sub;
      sub.labels.reserve(reduced.size());
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (labeling.labels[i] % spec.beam_keep_stride == 0) {
          sub.labels.push_back(labeling.labels[i] / spec.beam_keep_stride);
        }
      }
      for (int c = 0; c < labeling.beam_count(); c += spec.beam_keep_stride) {
        sub.centroids.push_back(labeling.centroids[static_cast<std::size_t>(c)]);
      }
      reduced = subsample_points_per_beam(reduced, sub, spec.point_keep_stride);
    }
    reduced.frame_id = cloud.frame_id.empty() ? spec.name : cloud.frame_id + "/" + spec.name;
    out.push_back(std::move(reduced));
  }
  return out;
}

}  // namespace lsf
