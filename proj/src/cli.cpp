#include "lsf/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "lsf/gradcheck.hpp"
#include "lsf/io.hpp"
#include "lsf/rng.hpp"
#include "lsf/trainer.hpp"

namespace lsf {

namespace fs = std::filesystem;

namespace {

std::string frame_stem(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "frame_%05zu", index);
  return buf;
}

std::string epoch_eval_csv(const std::vector<EpochEval>& evals) {
  std::string out = "epoch,variant_name,ap_bev,ap_3d,num_gt,num_pred\n";
  for (const EpochEval& e : evals) {
    for (const SweepRow& row : e.variants) {
      out += std::to_string(e.epoch) + "," + row.variant_name + "," +
             fmt_double(row.result.ap_bev) + "," + fmt_double(row.result.ap_3d) + "," +
             std::to_string(row.result.num_gt) + "," + std::to_string(row.result.num_pred) + "\n";
    }
  }
  return out;
}

ToyModel load_model_for(const RunConfig& cfg, const fs::path& path) {
  return load_model(path, cfg.train.grid, cfg.train.feature_dim, cfg.train.roi_h,
                    cfg.train.roi_w);
}

int cmd_gen_scenes(const std::string& config_path, const std::string& out_override) {
  const RunConfig cfg = parse_run_config(config_path);
  const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  const Benchmark bench =
      generate_benchmark(cfg.scene, cfg.frames, cfg.train_ratio, cfg.train.variants);
  write_benchmark_dataset(bench, out, cfg.raw_text);
  std::cout << "wrote " << bench.train.size() << " train / " << bench.val.size()
            << " val frames (+" << bench.variant_names.size() << " density variants) to " << out
            << "\n";
  return 0;
}

int cmd_label_beams(const std::string& in, int beams, const std::string& out,
                    const std::string& centroids_out) {
  const PointCloud cloud = read_bin(in);
  const BeamLabeling labeling = label_beams(cloud, beams);
  std::string text;
  for (int lbl : labeling.labels) text += std::to_string(lbl) + "\n";
  write_text_file(out, text);
  if (!centroids_out.empty()) {
    std::string ctext = "beam,zenith_rad\n";
    for (int b = 0; b < labeling.beam_count(); ++b) {
      ctext += std::to_string(b) + "," + fmt_double(labeling.centroids[b]) + "\n";
    }
    write_text_file(centroids_out, ctext);
  }
  std::cout << "labeled " << cloud.size() << " points into " << beams << " beams\n";
  return 0;
}

int cmd_downsample(const std::string& in, const std::string& out, int source_beams,
                   int target_beams, int point_stride) {
  require(target_beams >= 1 && source_beams >= target_beams,
          "downsample: target beam count must lie in [1, source beams]");
  require(source_beams % target_beams == 0,
          "downsample: source beams (" + std::to_string(source_beams) +
              ") not divisible by target (" + std::to_string(target_beams) + ")");
  const PointCloud cloud = read_bin(in);
  const BeamLabeling labeling = label_beams(cloud, source_beams);
  const int stride = source_beams / target_beams;
  const std::vector<BeamVariantSpec> spec{{"cli", stride, point_stride}};
  const PointCloud reduced = make_beam_variants(cloud, labeling, spec)[0];
  write_bin(out, reduced);
  std::cout << "kept " << reduced.size() << " of " << cloud.size() << " points\n";
  return 0;
}

int cmd_select(const std::string& config_path, const std::string& model_path,
               const std::string& in, const std::string& labels_path, const std::string& out_dir) {
  const RunConfig cfg = parse_run_config(config_path);
  const ToyModel model = load_model_for(cfg, model_path);
  const PointCloud cloud = read_bin(in);
  const std::vector<Box3D> gts = read_label_boxes(labels_path);

  std::vector<std::string> names;
  for (const auto& v : cfg.train.variants) names.push_back(v.name);
  SelectionState state(names, cfg.train.iou_threshold);

  const std::vector<Roi> rois = make_rois(gts, cfg.train.grid, cfg.train.train_jitter,
                                          cfg.train.background_rois, mix_seed(cfg.train.seed, 1));
  const DetectorFn detector = [&](const PointCloud& c) { return detect(model, c, rois); };
  const SelectionResult res =
      select_augmentation(cloud, gts, detector, cfg.train.variants, state,
                          cfg.train.source_beams, cfg.train.selection_criterion);

  const fs::path out = out_dir;
  fs::create_directories(out);
  write_bin(out / "selected.bin", res.chosen);
  std::string csv = "variant_name,score,matched_count,had_valid_matches\n";
  csv += res.record.variant_name + "," + fmt_double(res.record.score) + "," +
         std::to_string(res.record.matched_count) + "," +
         (res.record.had_valid_matches ? "true" : "false") + "\n";
  write_text_file(out / "selection.csv", csv);
  std::cout << "selected variant " << res.record.variant_name << " (score "
            << fmt_double(res.record.score) << "), " << res.chosen.size() << " points\n";
  return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& data_dir,
                 const std::string& out_override, bool no_selection) {
  RunConfig cfg = parse_run_config(config_path);
  if (no_selection) cfg.train.use_selection = false;
  const fs::path data = data_dir.empty() ? fs::path(cfg.dataset_dir) : fs::path(data_dir);
  require(!data.empty(), "pretrain: no dataset directory (set --data or [data] dataset_dir)");
  const std::vector<LabeledFrame> frames = read_frame_set(data / "train");

  std::vector<LossBreakdown> history;
  const ToyModel model = pretrain(frames, cfg.train, &history);

  const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  fs::create_directories(out);
  write_text_file(out / "config.cfg", cfg.raw_text);
  save_model(out / "pretrained.ckpt", model);
  write_text_file(out / "pretrain_log.csv", loss_log_csv(history));
  std::cout << "pretrained on " << frames.size() << " frames for " << cfg.train.epochs
            << " epochs; checkpoint at " << (out / "pretrained.ckpt") << "\n";
  return 0;
}

int cmd_distill(const std::string& config_path, const std::string& data_dir,
                const std::string& teacher_path, const std::string& out_override) {
  const RunConfig cfg = parse_run_config(config_path);
  const fs::path data = data_dir.empty() ? fs::path(cfg.dataset_dir) : fs::path(data_dir);
  require(!data.empty(), "distill: no dataset directory (set --data or [data] dataset_dir)");
  const Benchmark bench = read_benchmark_dataset(data, cfg.train.variants);
  const ToyModel teacher = load_model_for(cfg, teacher_path);

  const DistillRun run = run_distillation(bench, teacher, cfg.train);

  const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  fs::create_directories(out);
  write_text_file(out / "config.cfg", cfg.raw_text);
  save_model(out / "student.ckpt", run.state.student);
  write_param_file(out / "embed.ckpt", run.state.embed.config_string(), run.state.embed.params);
  write_text_file(out / "distill_log.csv", loss_log_csv(run.state.history));
  write_text_file(out / "epoch_eval.csv", epoch_eval_csv(run.epoch_evals));
  std::cout << "distilled for " << cfg.train.epochs << " epochs over " << bench.train.size()
            << " frames; student at " << (out / "student.ckpt") << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& model_path,
             const std::string& data_dir, const std::string& variant, const std::string& out) {
  const RunConfig cfg = parse_run_config(config_path);
  const ToyModel model = load_model_for(cfg, model_path);
  const fs::path data = data_dir.empty() ? fs::path(cfg.dataset_dir) : fs::path(data_dir);
  const fs::path set_dir =
      variant.empty() ? data / "val" : data / ("val_" + sanitize_variant_name(variant));
  const std::vector<LabeledFrame> frames = read_frame_set(set_dir);
  const EvalResult res = evaluate_detector(model, frames, cfg.train, cfg.train.seed);

  const std::string name = variant.empty() ? "source" : variant;
  std::cout << name << ": ap_bev " << fmt_double(res.ap_bev) << "  ap_3d " << fmt_double(res.ap_3d)
            << "  (" << res.num_gt << " gt, " << res.num_pred << " predictions)\n";
  if (!out.empty()) {
    write_text_file(out, sweep_report_csv({{name, res}}));
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& model_path,
              const std::string& data_dir, const std::string& out) {
  const RunConfig cfg = parse_run_config(config_path);
  const ToyModel model = load_model_for(cfg, model_path);
  const fs::path data = data_dir.empty() ? fs::path(cfg.dataset_dir) : fs::path(data_dir);

  std::vector<SweepRow> rows;
  rows.push_back({std::to_string(cfg.scene.beams),
                  evaluate_detector(model, read_frame_set(data / "val"), cfg.train,
                                    cfg.train.seed)});
  for (const auto& v : cfg.train.variants) {
    const fs::path dir = data / ("val_" + sanitize_variant_name(v.name));
    rows.push_back({v.name, evaluate_detector(model, read_frame_set(dir), cfg.train,
                                              cfg.train.seed)});
  }
  const std::string csv = sweep_report_csv(rows);
  std::cout << csv;
  if (!out.empty()) write_text_file(out, csv);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int rounds) {
  const GradCheckReport report = run_gradcheck_suite(seed, rounds);
  std::cout << "max relative gradient error: " << report.summary() << "\n";
  if (!report.passed()) {
    std::cerr << "gradcheck FAILED (threshold 1e-5)\n";
    return 1;
  }
  return 0;
}

}  // namespace

void write_frame_set(const fs::path& dir, const std::vector<LabeledFrame>& frames,
                     bool with_beams) {
  fs::create_directories(dir);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string stem = frame_stem(f);
    write_bin(dir / (stem + ".bin"), frames[f].cloud);
    write_labels(dir / (stem + "_labels.csv"), frames[f].gts);
    if (with_beams && !frames[f].true_beam_labels.empty()) {
      std::string text;
      for (int lbl : frames[f].true_beam_labels) text += std::to_string(lbl) + "\n";
      write_text_file(dir / (stem + "_beams.csv"), text);
    }
  }
}

std::vector<LabeledFrame> read_frame_set(const fs::path& dir) {
  require(fs::is_directory(dir), "frame set directory missing: " + dir.string());
  std::vector<fs::path> bins;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".bin") bins.push_back(entry.path());
  }
  std::sort(bins.begin(), bins.end());
  require(!bins.empty(), "no .bin frames under " + dir.string());

  std::vector<LabeledFrame> frames;
  frames.reserve(bins.size());
  for (const fs::path& bin : bins) {
    LabeledFrame frame;
    frame.cloud = read_bin(bin);
    frame.gts = read_label_boxes(bin.parent_path() / (bin.stem().string() + "_labels.csv"));
    const fs::path beams = bin.parent_path() / (bin.stem().string() + "_beams.csv");
    if (fs::exists(beams)) {
      for (const std::string& line : [&] {
             std::vector<std::string> lines;
             std::string text = read_text_file(beams);
             std::size_t start = 0;
             while (start < text.size()) {
               const std::size_t nl = text.find('\n', start);
               lines.push_back(text.substr(start, nl - start));
               if (nl == std::string::npos) break;
               start = nl + 1;
             }
             return lines;
           }()) {
        if (!line.empty()) frame.true_beam_labels.push_back(std::stoi(line));
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_benchmark_dataset(const Benchmark& bench, const fs::path& dir,
                             const std::string& config_text) {
  fs::create_directories(dir);
  write_text_file(dir / "config.cfg", config_text);
  write_frame_set(dir / "train", bench.train, true);
  write_frame_set(dir / "val", bench.val, true);
  for (const std::string& name : bench.variant_names) {
    write_frame_set(dir / ("val_" + sanitize_variant_name(name)), bench.val_variants.at(name),
                    false);
  }
}

Benchmark read_benchmark_dataset(const fs::path& dir,
                                 const std::vector<BeamVariantSpec>& variants) {
  Benchmark bench;
  bench.train = read_frame_set(dir / "train");
  bench.val = read_frame_set(dir / "val");
  for (const BeamVariantSpec& v : variants) {
    bench.variant_names.push_back(v.name);
    bench.val_variants[v.name] = read_frame_set(dir / ("val_" + sanitize_variant_name(v.name)));
  }
  return bench;
}

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"sparsity-invariant LiDAR detection training pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, model_path, teacher_path;
  std::string in_path, labels_path, centroids_out, variant;
  int beams = 64, source_beams = 64, point_stride = 1, rounds = 20;
  std::uint64_t seed = 7;
  bool no_selection = false;

  auto* gen = app.add_subcommand("gen-scenes", "generate a synthetic benchmark dataset");
  gen->add_option("--config", config_path, "run configuration file")->required();
  gen->add_option("--out", out_dir, "output directory (default: config output_dir)");

  auto* lab = app.add_subcommand("label-beams", "K-means beam labeling of a point file");
  lab->add_option("--in", in_path, "input .bin point file")->required();
  lab->add_option("--beams", beams, "number of beams")->required();
  lab->add_option("--out", out_dir, "output label CSV")->required();
  lab->add_option("--centroids-out", centroids_out, "optional centroid CSV");

  auto* down = app.add_subcommand("downsample", "beam-based density reduction of a point file");
  down->add_option("--source-beams", source_beams, "beam count of the input (default 64)");
  down->add_option("--beams", beams, "target beam count")->required();
  down->add_option("--point-stride", point_stride, "per-beam point keep stride (default 1)");
  down->add_option("input", in_path, "input .bin")->required();
  down->add_option("output", out_dir, "output .bin")->required();

  auto* sel = app.add_subcommand("select", "confidence-based density selection for one frame");
  sel->add_option("--config", config_path)->required();
  sel->add_option("--model", model_path, "detector checkpoint")->required();
  sel->add_option("--in", in_path, "frame .bin")->required();
  sel->add_option("--labels", labels_path, "frame label CSV")->required();
  sel->add_option("--out", out_dir, "output directory")->required();

  auto* pre = app.add_subcommand("pretrain", "train a detector with selected densities");
  pre->add_option("--config", config_path)->required();
  pre->add_option("--data", data_dir, "dataset directory (from gen-scenes)");
  pre->add_option("--out", out_dir, "output directory (default: config output_dir)");
  pre->add_flag("--no-selection", no_selection, "train on the source density only");

  auto* dis = app.add_subcommand("distill", "teacher-student distillation with FCA and GERA");
  dis->add_option("--config", config_path)->required();
  dis->add_option("--data", data_dir, "dataset directory");
  dis->add_option("--teacher", teacher_path, "pretrained teacher checkpoint")->required();
  dis->add_option("--out", out_dir, "output directory (default: config output_dir)");

  auto* ev = app.add_subcommand("eval", "AP evaluation on a validation set");
  ev->add_option("--config", config_path)->required();
  ev->add_option("--model", model_path)->required();
  ev->add_option("--data", data_dir, "dataset directory");
  ev->add_option("--variant", variant, "density variant name (default: source validation set)");
  ev->add_option("--out", out_dir, "optional CSV output file");

  auto* sw = app.add_subcommand("sweep", "AP across all density variants");
  sw->add_option("--config", config_path)->required();
  sw->add_option("--model", model_path)->required();
  sw->add_option("--data", data_dir, "dataset directory");
  sw->add_option("--out", out_dir, "optional CSV output file");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference verification of every gradient");
  gc->add_option("--seed", seed, "suite seed (default 7)");
  gc->add_option("--rounds", rounds, "random configurations (default 20)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_scenes(config_path, out_dir);
    if (lab->parsed()) return cmd_label_beams(in_path, beams, out_dir, centroids_out);
    if (down->parsed()) return cmd_downsample(in_path, out_dir, source_beams, beams, point_stride);
    if (sel->parsed()) return cmd_select(config_path, model_path, in_path, labels_path, out_dir);
    if (pre->parsed()) return cmd_pretrain(config_path, data_dir, out_dir, no_selection);
    if (dis->parsed()) return cmd_distill(config_path, data_dir, teacher_path, out_dir);
    if (ev->parsed()) return cmd_eval(config_path, model_path, data_dir, variant, out_dir);
    if (sw->parsed()) return cmd_sweep(config_path, model_path, data_dir, out_dir);
    if (gc->parsed()) return cmd_gradcheck(seed, rounds);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace lsf
