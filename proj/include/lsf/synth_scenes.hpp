#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsf/beam_ops.hpp"
#include "lsf/geometry.hpp"

namespace lsf {

/// Deterministic scene description. Beams sweep fixed zeniths spanning the
/// vertical FOV (beam 0 topmost); every (beam, azimuth) pair casts one ray
/// from the sensor origin against the ground plane, optional enclosing
/// walls, and car-like object boxes.
struct SceneSpec {
  std::uint64_t seed = 0;
  int beams = 64;
  double zenith_min_deg = -17.6;
  double zenith_max_deg = 2.4;
  double azimuth_step_deg = 1.5;
  // Points are in the sensor frame: rays originate at (0, 0, 0) and the
  // ground plane sits below the sensor at z = ground_z.
  double ground_z = -1.73;
  double max_range = 90.0;

  int object_count_min = 4;
  int object_count_max = 9;
  double object_radius_min = 8.0;
  double object_radius_max = 32.0;
  double length_min = 3.6, length_max = 4.8;
  double width_min = 1.6, width_max = 2.0;
  double height_min = 1.4, height_max = 1.8;

  // Enclosing walls guarantee returns on above-horizon beams. 0 disables.
  double wall_height = 0.0;
  double wall_distance = 45.0;

  double zenith_jitter_deg = 0.0;  // uniform per-ray jitter, +/- this value
  double range_noise_sigma = 0.0;  // optional Gaussian range noise, meters
};

/// A generated frame: returned points, ground-truth boxes, and the true
/// beam index of every point, plus exact per-beam ray bookkeeping.
struct Scene {
  PointCloud cloud;
  std::vector<Box3D> gt_boxes;
  std::vector<int> beam_labels;          // true generating beam per point
  std::vector<double> beam_zeniths;      // nominal zenith per beam, descending
  std::vector<int> emitted_per_beam;     // rays cast
  std::vector<int> returned_per_beam;    // rays that hit within max_range
};

Scene generate_scene(const SceneSpec& spec);

/// A frame paired with its labels, as consumed by training and evaluation.
struct LabeledFrame {
  PointCloud cloud;
  std::vector<Box3D> gts;
  std::vector<int> true_beam_labels;
};

/// Train/val split at the source density plus validation variants derived
/// with the true beam labels (exact striding, no clustering involved).
struct Benchmark {
  std::vector<LabeledFrame> train;
  std::vector<LabeledFrame> val;  // source density
  std::vector<std::string> variant_names;
  std::map<std::string, std::vector<LabeledFrame>> val_variants;
};

Benchmark generate_benchmark(const SceneSpec& spec, int frame_count, double train_ratio,
                             const std::vector<BeamVariantSpec>& variants);

/// Labeling built from a frame's true beam indices (bypasses K-means).
BeamLabeling labeling_from_truth(const Scene& scene);
BeamLabeling labeling_from_truth(const std::vector<int>& labels,
                                 const std::vector<double>& beam_zeniths);

}  // namespace lsf
