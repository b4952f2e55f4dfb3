#include "lsf/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>

#include "lsf/io.hpp"

namespace lsf {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& value) {
  long v = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + value +
                      "'");
  }
  return v;
}

BeamVariantSpec parse_variant(const std::string& value) {
  // name:beam_stride:point_stride
  const std::size_t c1 = value.find(':');
  const std::size_t c2 = c1 == std::string::npos ? std::string::npos : value.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw ConfigError("config key 'variant': expected name:beam_stride:point_stride, got '" +
                      value + "'");
  }
  BeamVariantSpec spec;
  spec.name = trim(value.substr(0, c1));
  if (spec.name.empty()) throw ConfigError("config key 'variant': empty variant name");
  spec.beam_keep_stride =
      static_cast<int>(to_long("variant", trim(value.substr(c1 + 1, c2 - c1 - 1))));
  spec.point_keep_stride = static_cast<int>(to_long("variant", trim(value.substr(c2 + 1))));
  if (spec.beam_keep_stride < 1 || spec.point_keep_stride < 1) {
    throw ConfigError("config key 'variant': strides must be >= 1 in '" + value + "'");
  }
  return spec;
}

}  // namespace

std::string sanitize_variant_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') {
      out += c;
    } else if (c == '*') {
      out += 's';
    } else {
      out += '_';
    }
  }
  return out;
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  cfg.raw_text = text;
  cfg.train.variants.clear();

  using Setter = std::function<void(const std::string&, const std::string&)>;
  std::map<std::string, Setter> schema;
  const auto key_name = [](const std::string& section, const std::string& key) {
    return "[" + section + "] " + key;
  };

  const auto add = [&](const std::string& section, const std::string& key, Setter setter) {
    schema[key_name(section, key)] = std::move(setter);
  };

  // [scene]
  add("scene", "seed", [&](const std::string& k, const std::string& v) { cfg.scene.seed = to_seed(k, v); });
  add("scene", "beams", [&](const std::string& k, const std::string& v) { cfg.scene.beams = static_cast<int>(to_long(k, v)); });
  add("scene", "zenith_min_deg", [&](const std::string& k, const std::string& v) { cfg.scene.zenith_min_deg = to_double(k, v); });
  add("scene", "zenith_max_deg", [&](const std::string& k, const std::string& v) { cfg.scene.zenith_max_deg = to_double(k, v); });
  add("scene", "azimuth_step_deg", [&](const std::string& k, const std::string& v) { cfg.scene.azimuth_step_deg = to_double(k, v); });
  add("scene", "ground_z", [&](const std::string& k, const std::string& v) { cfg.scene.ground_z = to_double(k, v); });
  add("scene", "max_range", [&](const std::string& k, const std::string& v) { cfg.scene.max_range = to_double(k, v); });
  add("scene", "object_count_min", [&](const std::string& k, const std::string& v) { cfg.scene.object_count_min = static_cast<int>(to_long(k, v)); });
  add("scene", "object_count_max", [&](const std::string& k, const std::string& v) { cfg.scene.object_count_max = static_cast<int>(to_long(k, v)); });
  add("scene", "object_radius_min", [&](const std::string& k, const std::string& v) { cfg.scene.object_radius_min = to_double(k, v); });
  add("scene", "object_radius_max", [&](const std::string& k, const std::string& v) { cfg.scene.object_radius_max = to_double(k, v); });
  add("scene", "wall_height", [&](const std::string& k, const std::string& v) { cfg.scene.wall_height = to_double(k, v); });
  add("scene", "wall_distance", [&](const std::string& k, const std::string& v) { cfg.scene.wall_distance = to_double(k, v); });
  add("scene", "zenith_jitter_deg", [&](const std::string& k, const std::string& v) { cfg.scene.zenith_jitter_deg = to_double(k, v); });
  add("scene", "range_noise_sigma", [&](const std::string& k, const std::string& v) { cfg.scene.range_noise_sigma = to_double(k, v); });

  // [data]
  add("data", "frames", [&](const std::string& k, const std::string& v) { cfg.frames = static_cast<int>(to_long(k, v)); });
  add("data", "train_ratio", [&](const std::string& k, const std::string& v) { cfg.train_ratio = to_double(k, v); });
  add("data", "output_dir", [&](const std::string&, const std::string& v) { cfg.output_dir = v; });
  add("data", "dataset_dir", [&](const std::string&, const std::string& v) { cfg.dataset_dir = v; });

  // [train]
  add("train", "alpha", [&](const std::string& k, const std::string& v) { cfg.train.alpha = to_double(k, v); });
  add("train", "beta", [&](const std::string& k, const std::string& v) { cfg.train.beta = to_double(k, v); });
  add("train", "lambda", [&](const std::string& k, const std::string& v) { cfg.train.lambda = to_double(k, v); });
  add("train", "epsilon", [&](const std::string& k, const std::string& v) { cfg.train.epsilon = to_double(k, v); });
  add("train", "iou_threshold", [&](const std::string& k, const std::string& v) { cfg.train.iou_threshold = to_double(k, v); });
  add("train", "learning_rate", [&](const std::string& k, const std::string& v) { cfg.train.learning_rate = to_double(k, v); });
  add("train", "momentum", [&](const std::string& k, const std::string& v) { cfg.train.momentum = to_double(k, v); });
  add("train", "epochs", [&](const std::string& k, const std::string& v) { cfg.train.epochs = static_cast<int>(to_long(k, v)); });
  add("train", "seed", [&](const std::string& k, const std::string& v) { cfg.train.seed = to_seed(k, v); });
  add("train", "use_selection", [&](const std::string& k, const std::string& v) { cfg.train.use_selection = to_bool(k, v); });
  add("train", "selection_criterion", [&](const std::string& k, const std::string& v) {
    if (v == "bev") {
      cfg.train.selection_criterion = IouCriterion::kBev;
    } else if (v == "3d") {
      cfg.train.selection_criterion = IouCriterion::k3d;
    } else {
      throw ConfigError("config key '" + k + "': expected bev or 3d, got '" + v + "'");
    }
  });

  // [model]
  add("model", "grid_x_min", [&](const std::string& k, const std::string& v) { cfg.train.grid.x_min = to_double(k, v); });
  add("model", "grid_x_max", [&](const std::string& k, const std::string& v) { cfg.train.grid.x_max = to_double(k, v); });
  add("model", "grid_y_min", [&](const std::string& k, const std::string& v) { cfg.train.grid.y_min = to_double(k, v); });
  add("model", "grid_y_max", [&](const std::string& k, const std::string& v) { cfg.train.grid.y_max = to_double(k, v); });
  add("model", "grid_cell", [&](const std::string& k, const std::string& v) { cfg.train.grid.cell = to_double(k, v); });
  add("model", "feature_dim", [&](const std::string& k, const std::string& v) { cfg.train.feature_dim = static_cast<int>(to_long(k, v)); });
  add("model", "roi_h", [&](const std::string& k, const std::string& v) { cfg.train.roi_h = static_cast<int>(to_long(k, v)); });
  add("model", "roi_w", [&](const std::string& k, const std::string& v) { cfg.train.roi_w = static_cast<int>(to_long(k, v)); });
  add("model", "train_jitter_center", [&](const std::string& k, const std::string& v) { cfg.train.train_jitter.center = to_double(k, v); });
  add("model", "train_jitter_yaw", [&](const std::string& k, const std::string& v) { cfg.train.train_jitter.yaw = to_double(k, v); });
  add("model", "eval_jitter_center", [&](const std::string& k, const std::string& v) { cfg.train.eval_jitter.center = to_double(k, v); });
  add("model", "eval_jitter_yaw", [&](const std::string& k, const std::string& v) { cfg.train.eval_jitter.yaw = to_double(k, v); });
  add("model", "background_rois", [&](const std::string& k, const std::string& v) { cfg.train.background_rois = static_cast<int>(to_long(k, v)); });

  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= cfg.raw_text.size()) {
    const std::size_t nl = cfg.raw_text.find('\n', start);
    std::string line = cfg.raw_text.substr(
        start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? cfg.raw_text.size() + 1 : nl + 1;
    ++line_no;

    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = "[" + section + "] " + key;

    if (section == "variants" && key == "variant") {
      cfg.train.variants.push_back(parse_variant(value));
      continue;
    }
    const auto it = schema.find(full);
    if (it == schema.end()) {
      throw ConfigError("unknown config key '" + full + "'");
    }
    if (!seen.insert(full).second) {
      throw ConfigError("duplicate config key '" + full + "'");
    }
    it->second(key, value);
  }

  for (const auto& [full, setter] : schema) {
    if (!seen.count(full)) {
      throw ConfigError("missing config key '" + full + "'");
    }
  }
  if (cfg.train.variants.empty()) {
    throw ConfigError("missing config key '[variants] variant'");
  }

  // Range validation.
  if (cfg.frames < 2) throw ConfigError("config key '[data] frames': need at least 2 frames");
  if (cfg.train_ratio <= 0.0 || cfg.train_ratio >= 1.0) {
    throw ConfigError("config key '[data] train_ratio': must lie in (0, 1)");
  }
  if (cfg.output_dir.empty()) throw ConfigError("config key '[data] output_dir': must not be empty");
  if (cfg.scene.beams < 1) throw ConfigError("config key '[scene] beams': must be >= 1");
  if (cfg.scene.azimuth_step_deg <= 0.0) {
    throw ConfigError("config key '[scene] azimuth_step_deg': must be positive");
  }
  if (cfg.scene.zenith_max_deg < cfg.scene.zenith_min_deg) {
    throw ConfigError("config key '[scene] zenith_max_deg': FOV bounds out of order");
  }
  cfg.train.source_beams = cfg.scene.beams;
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config validation failed: ") + e.what());
  }
  return cfg;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  return parse_run_config_text(read_text_file(path));
}

std::string default_config_text() {
  return R"(# Experiment configuration
[scene]
seed = 1
beams = 64
zenith_min_deg = -17.6
zenith_max_deg = 2.4
azimuth_step_deg = 1.5
ground_z = -1.73
max_range = 90
object_count_min = 4
object_count_max = 9
object_radius_min = 8
object_radius_max = 32
wall_height = 8
wall_distance = 45
zenith_jitter_deg = 0.01
range_noise_sigma = 0

[data]
frames = 250
train_ratio = 0.8
output_dir = out
dataset_dir =

[variants]
variant = 32:2:1
variant = 32*:2:2
variant = 16:4:1
variant = 16*:4:2

[train]
alpha = 1.0
beta = 1.0
lambda = 0.1
epsilon = 1.0
iou_threshold = 0.5
learning_rate = 0.02
momentum = 0.9
epochs = 2
seed = 1
use_selection = true
selection_criterion = bev

[model]
grid_x_min = -40
grid_x_max = 40
grid_y_min = -40
grid_y_max = 40
grid_cell = 0.5
feature_dim = 8
roi_h = 4
roi_w = 4
train_jitter_center = 0.3
train_jitter_yaw = 0.1
eval_jitter_center = 0.15
eval_jitter_yaw = 0.05
background_rois = 4
)";
}

}  // namespace lsf
