#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsf/geometry.hpp"

namespace lsf {

struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Per-point beam assignment. Beam 0 is the topmost beam, so centroids are
/// strictly decreasing zenith values.
struct BeamLabeling {
  std::vector<int> labels;        // one entry per point, in [0, beam_count())
  std::vector<double> centroids;  // zenith radians, strictly decreasing

  int beam_count() const { return static_cast<int>(centroids.size()); }
};

/// One target density: keep every beam_keep_stride-th beam, then every
/// point_keep_stride-th point (by azimuth rank) within surviving beams.
struct BeamVariantSpec {
  std::string name;
  int beam_keep_stride = 1;
  int point_keep_stride = 1;
};

/// The densities exercised by the sweep for a 64-beam source:
/// 32, 32*, 16, 16* (starred = additionally half the points per beam).
std::vector<BeamVariantSpec> default_variant_specs();

/// 1-D K-means over per-point zenith angles. Deterministic: centroids are
/// initialized at the k evenly spaced quantiles of the zenith distribution,
/// Lloyd iterations run until the largest centroid move falls below 1e-6 rad
/// (at most 100 iterations). Labels are remapped so beam 0 is the topmost.
/// Throws when the cloud has fewer than k distinct zeniths or a cluster
/// ends empty.
BeamLabeling label_beams(const PointCloud& cloud, int k);

/// Keeps points whose beam index is divisible by stride; point order is
/// preserved. Throws when the labeling does not match the cloud.
PointCloud downsample_beams(const PointCloud& cloud, const BeamLabeling& labeling, int stride);

/// Within each beam, sorts points by azimuth and keeps ranks divisible by
/// stride. Original point order is preserved in the output.
PointCloud subsample_points_per_beam(const PointCloud& cloud, const BeamLabeling& labeling,
                                     int stride);

/// Labels the cloud once with source_beams clusters, then applies each
/// spec's beam stride followed by its point stride. Output order matches
/// the spec order.
std::vector<PointCloud> make_beam_variants(const PointCloud& cloud, int source_beams,
                                           const std::vector<BeamVariantSpec>& specs);

/// Same, with a precomputed labeling (callers that label once per frame).
std::vector<PointCloud> make_beam_variants(const PointCloud& cloud, const BeamLabeling& labeling,
                                           const std::vector<BeamVariantSpec>& specs);

}  // namespace lsf
