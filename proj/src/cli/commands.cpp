#include "satpose/cli/commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "satpose/data/augment.hpp"
#include "satpose/odr/odr.hpp"
#include "satpose/train/trainer.hpp"
#include "satpose/util/csv.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/svg.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

namespace {

class ManifestWriter {
 public:
  ManifestWriter(std::string command, const std::filesystem::path& out_dir)
      : command_(std::move(command)), out_dir_(out_dir), start_(std::chrono::steady_clock::now()) {
    ensure_dir(out_dir);
  }

  void set_config(const std::string& toml) { config_toml_ = toml; }
  void add_input(const std::string& key, const std::filesystem::path& p) {
    inputs_[key] = std::filesystem::absolute(p).string();
  }
  void add_output(const std::string& key, const std::string& relative) { outputs_[key] = relative; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void write() const {
    nlohmann::json j;
    j["command"] = command_;
    j["tool_version"] = kToolVersion;
    j["seed"] = seed_;
    j["config_toml"] = config_toml_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["duration_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text_file(out_dir_ / "manifest.json", j.dump(1) + "\n");
  }

 private:
  std::string command_;
  std::filesystem::path out_dir_;
  std::chrono::steady_clock::time_point start_;
  std::string config_toml_;
  std::uint64_t seed_ = 0;
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json outputs_ = nlohmann::json::object();
};

TomlTable resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
  TomlTable t;
  if (!config_path.empty()) t = TomlTable::load(config_path);
  for (const auto& s : sets) t.set_override(s);
  return t;
}

}  // namespace

EvalOptions eval_options_from_toml(const TomlTable& t) {
  EvalOptions o;
  o.hil_thresholds = t.get_bool("eval.hil", o.hil_thresholds);
  o.batch_size = static_cast<int>(t.get_int("eval.batch_size", o.batch_size));
  o.keypoint_conf_thresh = t.get_double("eval.keypoint_conf_thresh", o.keypoint_conf_thresh);
  o.threads = static_cast<int>(t.get_int("eval.threads", o.threads));
  return o;
}

std::string eval_options_to_toml(const EvalOptions& o) {
  std::string s = "[eval]\n";
  s += "hil = " + std::string(o.hil_thresholds ? "true" : "false") + "\n";
  s += "batch_size = " + std::to_string(o.batch_size) + "\n";
  s += "keypoint_conf_thresh = " + format_g9(o.keypoint_conf_thresh) + "\n";
  s += "threads = " + std::to_string(o.threads) + "\n";
  return s;
}

void cmd_gen_data(const GenRunConfig& cfg, const std::filesystem::path& out_dir) {
  ManifestWriter manifest("gen-data", out_dir);
  manifest.set_seed(cfg.seed);
  manifest.set_config(gen_config_to_toml(cfg));
  set_worker_threads(cfg.threads);

  GenConfig gen;
  gen.count = cfg.count;
  gen.domain = cfg.domain;
  gen.seed = cfg.seed;
  gen.depth_min = cfg.depth_min;
  gen.depth_max = cfg.depth_max;
  gen.margin_px = cfg.margin_px;
  generate_dataset(gen, default_camera(), out_dir);

  manifest.add_output("labels", "labels.json");
  manifest.add_output("camera", "camera.json");
  manifest.write();
  std::printf("gen-data: %d %s images -> %s\n", cfg.count, cfg.domain.c_str(),
              out_dir.string().c_str());
}

void cmd_train(const TrainConfig& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir) {
  ManifestWriter manifest("train", out_dir);
  manifest.set_seed(cfg.seed);
  manifest.set_config(train_config_to_toml(cfg));
  manifest.add_input("data_dir", data_dir);

  const TrainResult result = train_offline(cfg, data_dir, out_dir);
  manifest.add_output("checkpoint", "checkpoint.ckpt");
  manifest.add_output("loss_history", "loss_history.csv");
  manifest.write();
  std::printf("train: final total loss %.4f -> %s\n",
              result.history.empty() ? 0.0 : result.history.back().total,
              result.checkpoint_path.string().c_str());
}

void cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
              const EvalOptions& opt, const std::filesystem::path& out_dir) {
  ManifestWriter manifest("eval", out_dir);
  manifest.set_config(eval_options_to_toml(opt));
  manifest.add_input("checkpoint", checkpoint);
  manifest.add_input("data_dir", data_dir);

  const MetricsReport report = evaluate_checkpoint(checkpoint, data_dir, opt, out_dir);
  manifest.add_output("metrics", "metrics.csv");
  manifest.add_output("summary", "summary.json");
  manifest.write();
  std::printf(
      "eval: n=%zu  E_T %.3f m  E_R %.3f deg  E_pose %.4f  E*_pose %.4f  IoU %.3f  rej %lld\n",
      report.samples.size(), report.mean_e_t, report.mean_e_r_deg, report.mean_e_pose,
      report.mean_e_pose_star, report.mean_iou, report.outlier_count);
}

void cmd_odr(const std::filesystem::path& checkpoint, const std::filesystem::path& target_dir,
             const std::filesystem::path& probe_dir, const OdrConfig& cfg,
             const std::filesystem::path& out_dir) {
  ManifestWriter manifest("odr", out_dir);
  manifest.set_seed(cfg.seed);
  manifest.set_config(odr_config_to_toml(cfg));
  manifest.add_input("checkpoint", checkpoint);
  manifest.add_input("target_dir", target_dir);
  if (!probe_dir.empty()) manifest.add_input("probe_dir", probe_dir);

  SpnModel model = load_model(checkpoint);
  Dataset probe;
  const bool has_probe = !probe_dir.empty();
  if (has_probe) probe = load_dataset(probe_dir);

  const OdrResult result = odr_run(model, target_dir, cfg, has_probe ? &probe : nullptr);

  save_model(model, out_dir / "refined.ckpt");
  write_odr_history_csv(result, out_dir / "odr_history.csv");
  manifest.add_output("refined_checkpoint", "refined.ckpt");
  manifest.add_output("odr_history", "odr_history.csv");

  if (has_probe && result.probes.size() >= 2) {
    const ScoreChange sc =
        score_change_histogram(result.probes.front().report, result.probes.back().report);
    write_score_change(sc, out_dir / "score_change.csv", out_dir / "score_change.svg");
    manifest.add_output("score_change", "score_change.csv");

    SvgChartSpec spec;
    spec.title = "Refinement on " + target_dir.filename().string();
    spec.x_label = "images observed";
    spec.y_label = "mean E*_pose";
    SvgSeries series;
    series.label = "B=" + std::to_string(cfg.stat_period);
    for (const auto& p : result.probes) {
      series.x.push_back(p.images_seen);
      series.y.push_back(p.report.mean_e_pose_star);
    }
    write_text_file(out_dir / "odr_curve.svg", svg_line_chart(spec, {series}));
    manifest.add_output("odr_curve", "odr_curve.svg");

    std::printf("odr: E*_pose %.4f -> %.4f after %d images (improved %lld, worsened %lld)\n",
                result.probes.front().report.mean_e_pose_star,
                result.probes.back().report.mean_e_pose_star, result.images_processed, sc.improved,
                sc.worsened);
  } else {
    std::printf("odr: processed %d images\n", result.images_processed);
  }
  manifest.write();
}

void cmd_preview(std::uint64_t seed, const std::filesystem::path& out_dir) {
  ManifestWriter manifest("preview", out_dir);
  manifest.set_seed(seed);

  const CameraIntrinsics K = default_camera();
  Rng rng(seed);
  const Pose pose = sample_pose(rng, K, 3.0, 7.0, 24.0);

  // One base render per domain.
  for (const auto& name : {"source", "lightbox_like", "sunlamp_like"}) {
    const auto sample = render_scene(pose, DomainParams::by_name(name), K, seed);
    write_png_gray8(out_dir / (std::string("domain_") + name + ".png"), sample.image);
  }

  // Augmentation gallery on the source render.
  const auto base_render = render_scene(pose, DomainParams::source(), K, seed);
  Sample base;
  base.filename = "preview";
  base.image = base_render.image;
  base.mask = base_render.mask;
  base.pose = base_render.pose;
  base.keypoints = base_render.keypoints;
  base.bbox = base_render.bbox;
  write_png_gray8(out_dir / "aug_none.png", base.image);

  const char* names[5] = {"brightness_contrast", "random_erase", "sun_flare", "blur", "noise"};
  for (int i = 0; i < 5; ++i) {
    AugmentConfig cfg = AugmentConfig::all_off();
    cfg.probability = 1.0;
    switch (i) {
      case 0: cfg.brightness_contrast = true; break;
      case 1: cfg.random_erase = true; break;
      case 2: cfg.sun_flare = true; break;
      case 3: cfg.blur = true; break;
      case 4: cfg.noise = true; break;
    }
    Sample s = base;
    Rng arng(Rng::mix(seed, 1000 + static_cast<std::uint64_t>(i)));
    augment(s, arng, cfg);
    write_png_gray8(out_dir / (std::string("aug_") + names[i] + ".png"), s.image);
  }

  // Mean-intensity histograms documenting that the domains are distinct.
  {
    CsvWriter csv({"domain", "sample", "mean_intensity"});
    std::vector<SvgSeries> series;
    for (const auto& name : {"source", "lightbox_like", "sunlamp_like"}) {
      const DomainParams domain = DomainParams::by_name(name);
      std::vector<long long> hist(32, 0);
      for (int i = 0; i < 64; ++i) {
        Rng srng = Rng::derive(Rng::mix(seed, 0xD0), static_cast<std::uint64_t>(i) * 3 +
                                                         (name[0] == 's' && name[1] == 'u' ? 2
                                                          : name[0] == 'l'                 ? 1
                                                                                           : 0));
        const Pose p = sample_pose(srng, K, 3.0, 10.0, 16.0);
        const auto sample = render_scene(p, domain, K, srng.next_u64());
        double mean = 0;
        for (const auto px : sample.image.pixels) mean += px;
        mean /= static_cast<double>(sample.image.pixels.size());
        csv.add(std::string(name));
        csv.add(i);
        csv.add(mean);
        csv.end_row();
        ++hist[static_cast<std::size_t>(std::min(31.0, mean / 8.0))];
      }
      SvgSeries ser;
      ser.label = name;
      for (int b = 0; b < 32; ++b) {
        ser.x.push_back(b * 8.0 + 4.0);
        ser.y.push_back(static_cast<double>(hist[static_cast<std::size_t>(b)]));
      }
      series.push_back(std::move(ser));
    }
    csv.save(out_dir / "domain_intensity.csv");
    SvgChartSpec spec;
    spec.title = "Mean image intensity by domain (64 renders each)";
    spec.x_label = "mean intensity";
    spec.y_label = "count";
    write_text_file(out_dir / "domain_intensity.svg", svg_line_chart(spec, series));
  }

  manifest.add_output("gallery", "aug_none.png");
  manifest.write();
  std::printf("preview: gallery written to %s\n", out_dir.string().c_str());
}

void cmd_ablate_heads(const TrainConfig& base, const std::vector<std::string>& head_configs,
                      const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& train_dir,
                      const std::filesystem::path& eval_dir, const std::filesystem::path& out_dir) {
  ManifestWriter manifest("ablate-heads", out_dir);
  manifest.set_seed(base.seed);
  manifest.set_config(train_config_to_toml(base));
  manifest.add_input("train_dir", train_dir);
  manifest.add_input("eval_dir", eval_dir);

  CsvWriter csv({"heads", "seed", "E_T", "E_R_deg", "E_pose", "E_pose_star", "IoU", "hh_outliers",
                 "hh_E_T_excl"});
  for (const auto& heads : head_configs) {
    for (const auto seed : seeds) {
      TrainConfig cfg = base;
      cfg.head_set = HeadSet::parse(heads);
      cfg.seed = seed;
      const auto run_dir = out_dir / ("train_" + heads + "_s" + std::to_string(seed));
      cmd_train(cfg, train_dir, run_dir);
      EvalOptions eopt;
      eopt.threads = cfg.threads;
      const auto eval_out = out_dir / ("eval_" + heads + "_s" + std::to_string(seed));
      const MetricsReport r =
          evaluate_checkpoint(run_dir / "checkpoint.ckpt", eval_dir, eopt, eval_out);
      csv.add(heads);
      csv.add(static_cast<long long>(seed));
      csv.add(r.mean_e_t);
      csv.add(r.mean_e_r_deg);
      csv.add(r.mean_e_pose);
      csv.add(r.mean_e_pose_star);
      csv.add(r.mean_iou);
      csv.add(r.outlier_count);
      csv.add(r.hh_e_t_mean);
      csv.end_row();
    }
  }
  csv.save(out_dir / "ablation_heads.csv");
  manifest.add_output("table", "ablation_heads.csv");
  manifest.write();
}

void cmd_ablate_augs(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                     const std::filesystem::path& data_plain_dir,
                     const std::filesystem::path& data_textured_dir,
                     const std::filesystem::path& eval_dir, const std::filesystem::path& out_dir) {
  ManifestWriter manifest("ablate-augs", out_dir);
  manifest.set_seed(base.seed);
  manifest.set_config(train_config_to_toml(base));
  manifest.add_input("data_plain", data_plain_dir);
  manifest.add_input("data_textured", data_textured_dir);
  manifest.add_input("eval_dir", eval_dir);

  struct Row {
    const char* label;
    bool erase, flare, textured;
  };
  // Progressive additions on top of brightness/contrast + blur + noise.
  const Row rows[4] = {{"baseline", false, false, false},
                       {"+random_erase", true, false, false},
                       {"+sun_flare", true, true, false},
                       {"+texture_rand", true, true, true}};

  CsvWriter csv({"config", "seed", "E_T", "E_R_deg", "E_pose", "E_pose_star", "IoU"});
  int row_idx = 0;
  for (const Row& row : rows) {
    for (const auto seed : seeds) {
      TrainConfig cfg = base;
      cfg.aug = AugmentConfig::baseline();
      cfg.aug.random_erase = row.erase;
      cfg.aug.sun_flare = row.flare;
      cfg.seed = seed;
      const auto& data_dir = row.textured ? data_textured_dir : data_plain_dir;
      const auto run_dir = out_dir / ("train_r" + std::to_string(row_idx) + "_s" + std::to_string(seed));
      cmd_train(cfg, data_dir, run_dir);
      EvalOptions eopt;
      eopt.threads = cfg.threads;
      const MetricsReport r = evaluate_checkpoint(
          run_dir / "checkpoint.ckpt", eval_dir, eopt,
          out_dir / ("eval_r" + std::to_string(row_idx) + "_s" + std::to_string(seed)));
      csv.add(std::string(row.label));
      csv.add(static_cast<long long>(seed));
      csv.add(r.mean_e_t);
      csv.add(r.mean_e_r_deg);
      csv.add(r.mean_e_pose);
      csv.add(r.mean_e_pose_star);
      csv.add(r.mean_iou);
      csv.end_row();
    }
    ++row_idx;
  }
  csv.save(out_dir / "ablation_augs.csv");
  manifest.add_output("table", "ablation_augs.csv");
  manifest.write();
}

void cmd_sweep_odr(const OdrConfig& base, const std::string& param,
                   const std::vector<long long>& values, int seeds,
                   const std::filesystem::path& checkpoint, const std::filesystem::path& target_dir,
                   const std::filesystem::path& probe_dir, const std::filesystem::path& out_dir) {
  if (param != "B" && param != "N") throw ConfigError("sweep-odr: param must be B or N");
  ManifestWriter manifest("sweep-odr", out_dir);
  manifest.set_seed(base.seed);
  manifest.set_config(odr_config_to_toml(base));
  manifest.add_input("checkpoint", checkpoint);
  manifest.add_input("target_dir", target_dir);
  manifest.add_input("probe_dir", probe_dir);

  std::vector<std::filesystem::path> run_dirs;
  for (const long long value : values) {
    for (int s = 0; s < seeds; ++s) {
      OdrConfig cfg = base;
      if (param == "B") {
        cfg.stat_period = static_cast<int>(value);
      } else {
        cfg.total_images = static_cast<int>(value);
      }
      cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      const auto run_dir =
          out_dir / (param + std::to_string(value) + "_s" + std::to_string(cfg.seed));
      cmd_odr(checkpoint, target_dir, probe_dir, cfg, run_dir);
      run_dirs.push_back(run_dir);
    }
  }
  cmd_report(run_dirs, out_dir / "report");
  manifest.add_output("report", "report");
  manifest.write();
}

void cmd_rerun(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir) {
  const auto j = nlohmann::json::parse(read_text_file(manifest_path));
  const std::string command = j.at("command").get<std::string>();
  const TomlTable cfg = TomlTable::parse(j.at("config_toml").get<std::string>());
  const auto inputs = j.at("inputs");
  const std::filesystem::path out =
      out_dir.empty() ? manifest_path.parent_path() : out_dir;

  if (command == "gen-data") {
    cmd_gen_data(gen_config_from_toml(cfg), out);
  } else if (command == "train") {
    cmd_train(train_config_from_toml(cfg), inputs.at("data_dir").get<std::string>(), out);
  } else if (command == "eval") {
    cmd_eval(inputs.at("checkpoint").get<std::string>(), inputs.at("data_dir").get<std::string>(),
             eval_options_from_toml(cfg), out);
  } else if (command == "odr") {
    const std::string probe =
        inputs.contains("probe_dir") ? inputs.at("probe_dir").get<std::string>() : "";
    cmd_odr(inputs.at("checkpoint").get<std::string>(), inputs.at("target_dir").get<std::string>(),
            probe, odr_config_from_toml(cfg), out);
  } else {
    throw ConfigError("rerun: unsupported command " + command);
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multi-task spacecraft pose estimation with online refinement of normalization "
               "parameters"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  std::int64_t seed_flag = -1;

  auto add_common = [&](CLI::App* sub, bool needs_out = true) {
    sub->add_option("--config", config_path, "TOML config file");
    sub->add_option("--set", sets, "override config keys (key=value)");
    auto* o = sub->add_option("--out", out, "output directory");
    if (needs_out) o->required();
    sub->add_option("--seed", seed_flag, "seed override");
  };

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "render a labeled dataset");
  std::string domain_flag;
  std::int64_t count_flag = -1;
  add_common(gen);
  gen->add_option("--domain", domain_flag, "source | lightbox_like | sunlamp_like");
  gen->add_option("--n", count_flag, "sample count");

  // train
  auto* train = app.add_subcommand("train", "offline robust training");
  std::string data_dir;
  add_common(train);
  train->add_option("--data", data_dir, "training dataset directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt, hil_flag = "on";
  add_common(eval);
  eval->add_option("--ckpt", ckpt, "checkpoint path")->required();
  eval->add_option("--data", data_dir, "evaluation dataset directory")->required();
  eval->add_option("--hil", hil_flag, "on|off: zero sub-threshold errors");

  // odr
  auto* odr = app.add_subcommand("odr", "online refinement on an unlabeled target stream");
  std::string target_dir, probe_dir;
  add_common(odr);
  odr->add_option("--ckpt", ckpt, "checkpoint path")->required();
  odr->add_option("--target", target_dir, "target-domain dataset directory (images used only)")
      ->required();
  odr->add_option("--probe", probe_dir, "labeled probe set for progress curves");

  // report
  auto* report = app.add_subcommand("report", "aggregate run directories");
  std::vector<std::string> run_dirs;
  add_common(report);
  report->add_option("runs", run_dirs, "run directories")->required();

  // preview
  auto* preview = app.add_subcommand("preview", "augmentation / domain gallery");
  add_common(preview);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "head or augmentation ablation harness");
  std::string kind = "heads", head_list = "E,H,EH,EHS", eval_dir, data2;
  std::int64_t n_seeds = 1;
  add_common(ablate);
  ablate->add_option("--kind", kind, "heads | augs");
  ablate->add_option("--data", data_dir, "training dataset")->required();
  ablate->add_option("--data-textured", data2, "texture-randomized dataset (augs kind)");
  ablate->add_option("--eval-data", eval_dir, "evaluation dataset")->required();
  ablate->add_option("--heads", head_list, "comma-separated head configs");
  ablate->add_option("--seeds", n_seeds, "seeds per configuration");

  // sweep-odr
  auto* sweep = app.add_subcommand("sweep-odr", "refinement hyperparameter sweep");
  std::string sweep_param = "B", values_list = "1,4,16";
  add_common(sweep);
  sweep->add_option("--ckpt", ckpt, "checkpoint path")->required();
  sweep->add_option("--target", target_dir, "target dataset")->required();
  sweep->add_option("--probe", probe_dir, "probe dataset")->required();
  sweep->add_option("--param", sweep_param, "B | N");
  sweep->add_option("--values", values_list, "comma-separated values");
  sweep->add_option("--seeds", n_seeds, "seeds per value");

  // rerun
  auto* rerun = app.add_subcommand("rerun", "re-run a command from its manifest");
  std::string manifest_path;
  add_common(rerun, false);
  rerun->add_option("manifest", manifest_path, "manifest.json path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::ConfigError);
  }

  try {
    TomlTable cfg = resolve_config(config_path, sets);
    const auto seed_override = [&](std::uint64_t s) {
      return seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : s;
    };

    if (gen->parsed()) {
      GenRunConfig g = gen_config_from_toml(cfg);
      if (!domain_flag.empty()) g.domain = domain_flag;
      if (count_flag > 0) g.count = static_cast<int>(count_flag);
      g.seed = seed_override(g.seed);
      cmd_gen_data(g, out);
    } else if (train->parsed()) {
      TrainConfig t = train_config_from_toml(cfg);
      t.seed = seed_override(t.seed);
      cmd_train(t, data_dir, out);
    } else if (eval->parsed()) {
      EvalOptions o = eval_options_from_toml(cfg);
      if (hil_flag == "off") o.hil_thresholds = false;
      cmd_eval(ckpt, data_dir, o, out);
    } else if (odr->parsed()) {
      OdrConfig o = odr_config_from_toml(cfg);
      o.seed = seed_override(o.seed);
      cmd_odr(ckpt, target_dir, probe_dir, o, out);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      cmd_report(dirs, out);
    } else if (preview->parsed()) {
      cmd_preview(seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : 1, out);
    } else if (ablate->parsed()) {
      TrainConfig t = train_config_from_toml(cfg);
      t.seed = seed_override(t.seed);
      std::vector<std::uint64_t> seeds;
      for (int s = 0; s < n_seeds; ++s) seeds.push_back(t.seed + static_cast<std::uint64_t>(s));
      if (kind == "heads") {
        std::vector<std::string> configs;
        std::size_t start = 0;
        while (start <= head_list.size()) {
          const auto pos = head_list.find(',', start);
          configs.push_back(head_list.substr(start, pos - start));
          if (pos == std::string::npos) break;
          start = pos + 1;
        }
        cmd_ablate_heads(t, configs, seeds, data_dir, eval_dir, out);
      } else if (kind == "augs") {
        cmd_ablate_augs(t, seeds, data_dir, data2.empty() ? data_dir : data2, eval_dir, out);
      } else {
        throw ConfigError("ablate: kind must be heads or augs");
      }
    } else if (sweep->parsed()) {
      OdrConfig o = odr_config_from_toml(cfg);
      o.seed = seed_override(o.seed);
      std::vector<long long> values;
      std::size_t start = 0;
      while (start <= values_list.size()) {
        const auto pos = values_list.find(',', start);
        values.push_back(std::stoll(values_list.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
      cmd_sweep_odr(o, sweep_param, values, static_cast<int>(n_seeds), ckpt, target_dir, probe_dir,
                    out);
    } else if (rerun->parsed()) {
      cmd_rerun(manifest_path, out);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return static_cast<int>(ExitCode::ConfigError);
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return static_cast<int>(ExitCode::DataError);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return static_cast<int>(ExitCode::NumericalError);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

SATPOSE_NS_END
