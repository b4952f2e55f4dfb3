#include "lsf/synth_scenes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lsf/rng.hpp"

namespace lsf {

namespace {

constexpr double kGroundIntensity = 0.2;
constexpr double kWallIntensity = 0.4;
constexpr double kObjectIntensity = 0.8;

struct Ray {
  double ox, oy, oz;
  double dx, dy, dz;
};

// Slab test against a yaw-rotated box; returns the entry distance or +inf.
double ray_box_entry(const Ray& r, const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  // Ray in the box frame.
  const double px = r.ox - b.cx, py = r.oy - b.cy, pz = r.oz - b.cz;
  const double ox = c * px + s * py;
  const double oy = -s * px + c * py;
  const double dx = c * r.dx + s * r.dy;
  const double dy = -s * r.dx + c * r.dy;

  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  const double half[3] = {0.5 * b.l, 0.5 * b.w, 0.5 * b.h};
  const double o[3] = {ox, oy, pz};
  const double d[3] = {dx, dy, r.dz};
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (std::abs(o[axis]) > half[axis]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (-half[axis] - o[axis]) / d[axis];
    double tb = (half[axis] - o[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

std::vector<Box3D> make_walls(const SceneSpec& spec) {
  std::vector<Box3D> walls;
  if (spec.wall_height <= 0.0) return walls;
  const double L = spec.wall_distance;
  const double span = 2.0 * L + 2.0;
  const double cz = spec.ground_z + 0.5 * spec.wall_height;
  walls.push_back({L, 0.0, cz, 1.0, span, spec.wall_height, 0.0});
  walls.push_back({-L, 0.0, cz, 1.0, span, spec.wall_height, 0.0});
  walls.push_back({0.0, L, cz, span, 1.0, spec.wall_height, 0.0});
  walls.push_back({0.0, -L, cz, span, 1.0, spec.wall_height, 0.0});
  return walls;
}

std::vector<Box3D> place_objects(const SceneSpec& spec, SeededRng& rng) {
  std::vector<Box3D> objects;
  const int count = spec.object_count_max <= spec.object_count_min
                        ? spec.object_count_min
                        : rng.uniform_int(spec.object_count_min, spec.object_count_max);
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Box3D b;
      b.l = rng.uniform(spec.length_min, spec.length_max);
      b.w = rng.uniform(spec.width_min, spec.width_max);
      b.h = rng.uniform(spec.height_min, spec.height_max);
      const double radius = rng.uniform(spec.object_radius_min, spec.object_radius_max);
      const double angle = rng.uniform(-kPi, kPi);
      b.cx = radius * std::cos(angle);
      b.cy = radius * std::sin(angle);
      b.cz = spec.ground_z + 0.5 * b.h;
      b.yaw = wrap_angle(rng.uniform(-kPi, kPi));
      bool clear = true;
      for (const Box3D& other : objects) {
        if (bev_iou(b, other) > 0.0) {
          clear = false;
          break;
        }
      }
      if (clear) {
        objects.push_back(b);
        break;
      }
    }
  }
  return objects;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  require(spec.beams >= 1, "generate_scene: beam count must be >= 1");
  require(spec.azimuth_step_deg > 0.0, "generate_scene: azimuth step must be positive");
  require(spec.zenith_max_deg >= spec.zenith_min_deg, "generate_scene: FOV bounds out of order");

  const int n_az = static_cast<int>(std::floor(360.0 / spec.azimuth_step_deg));
  require(n_az >= 1 && spec.beams >= 1, "generate_scene: FOV yields zero rays");

  SeededRng rng(mix_seed(spec.seed, 0xA11CE5ULL));
  Scene scene;
  scene.gt_boxes = place_objects(spec, rng);
  const std::vector<Box3D> walls = make_walls(spec);

  scene.beam_zeniths.resize(static_cast<std::size_t>(spec.beams));
  const double zen_max = deg_to_rad(spec.zenith_max_deg);
  const double zen_min = deg_to_rad(spec.zenith_min_deg);
  for (int b = 0; b < spec.beams; ++b) {
    scene.beam_zeniths[static_cast<std::size_t>(b)] =
        spec.beams == 1 ? 0.5 * (zen_max + zen_min)
                        : zen_max - (zen_max - zen_min) * b / (spec.beams - 1);
  }

  const double jitter = deg_to_rad(spec.zenith_jitter_deg);
  const double step = deg_to_rad(spec.azimuth_step_deg);
  const double oz = 0.0;  // sensor frame

  scene.emitted_per_beam.assign(static_cast<std::size_t>(spec.beams), 0);
  scene.returned_per_beam.assign(static_cast<std::size_t>(spec.beams), 0);
  scene.cloud.frame_id = "scene-" + std::to_string(spec.seed);
  scene.cloud.points.reserve(static_cast<std::size_t>(spec.beams) * static_cast<std::size_t>(n_az));

  for (int b = 0; b < spec.beams; ++b) {
    const double base_zenith = scene.beam_zeniths[static_cast<std::size_t>(b)];
    for (int a = 0; a < n_az; ++a) {
      scene.emitted_per_beam[static_cast<std::size_t>(b)] += 1;
      const double zen = jitter > 0.0 ? base_zenith + rng.uniform(-jitter, jitter) : base_zenith;
      const double az = -kPi + step * a;
      Ray ray{0.0, 0.0, oz,
              std::cos(zen) * std::cos(az), std::cos(zen) * std::sin(az), std::sin(zen)};

      double best_t = std::numeric_limits<double>::infinity();
      double intensity = 0.0;
      if (ray.dz < 0.0) {
        best_t = (spec.ground_z - ray.oz) / ray.dz;
        intensity = kGroundIntensity;
      }
      for (const Box3D& wall : walls) {
        const double t = ray_box_entry(ray, wall);
        if (t < best_t) {
          best_t = t;
          intensity = kWallIntensity;
        }
      }
      for (const Box3D& obj : scene.gt_boxes) {
        const double t = ray_box_entry(ray, obj);
        if (t < best_t) {
          best_t = t;
          intensity = kObjectIntensity;
        }
      }
      if (spec.range_noise_sigma > 0.0 && std::isfinite(best_t)) {
        best_t = std::max(0.1, best_t + rng.normal(0.0, spec.range_noise_sigma));
      }
      if (!std::isfinite(best_t) || best_t > spec.max_range) continue;

      scene.cloud.points.push_back(Point{ray.ox + best_t * ray.dx, ray.oy + best_t * ray.dy,
                                         ray.oz + best_t * ray.dz, intensity});
      scene.beam_labels.push_back(b);
      scene.returned_per_beam[static_cast<std::size_t>(b)] += 1;
    }
  }
  return scene;
}

BeamLabeling labeling_from_truth(const std::vector<int>& labels,
                                 const std::vector<double>& beam_zeniths) {
  BeamLabeling out;
  out.labels = labels;
  out.centroids = beam_zeniths;
  return out;
}

BeamLabeling labeling_from_truth(const Scene& scene) {
  return labeling_from_truth(scene.beam_labels, scene.beam_zeniths);
}

Benchmark generate_benchmark(const SceneSpec& spec, int frame_count, double train_ratio,
                             const std::vector<BeamVariantSpec>& variants) {
  require(frame_count >= 2, "generate_benchmark: need at least 2 frames");
  require(train_ratio > 0.0 && train_ratio < 1.0, "generate_benchmark: train ratio in (0,1)");

  Benchmark bench;
  for (const BeamVariantSpec& v : variants) bench.variant_names.push_back(v.name);

  const int train_count =
      std::clamp(static_cast<int>(std::lround(train_ratio * frame_count)), 1, frame_count - 1);

  for (int f = 0; f < frame_count; ++f) {
    SceneSpec frame_spec = spec;
    frame_spec.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(f));
    Scene scene = generate_scene(frame_spec);
    scene.cloud.frame_id = "frame-" + std::to_string(f);

    LabeledFrame frame{scene.cloud, scene.gt_boxes, scene.beam_labels};
    if (f < train_count) {
      bench.train.push_back(std::move(frame));
      continue;
    }

    const BeamLabeling truth = labeling_from_truth(scene);
    std::vector<PointCloud> clouds = make_beam_variants(scene.cloud, truth, variants);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      LabeledFrame variant_frame;
      variant_frame.cloud = std::move(clouds[v]);
      variant_frame.gts = scene.gt_boxes;
      bench.val_variants[variants[v].name].push_back(std::move(variant_frame));
    }
    bench.val.push_back(std::move(frame));
  }
  return bench;
}

}  // namespace lsf
