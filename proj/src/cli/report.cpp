#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>

#include "satpose/cli/commands.hpp"
#include "satpose/util/csv.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/svg.hpp"

SATPOSE_NS_BEGIN

namespace {

struct OdrRun {
  std::string group;  // config key without the seed
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> probe_curve;  // images_seen -> E*_pose
};

struct EvalRun {
  std::string name;
  nlohmann::json summary;
};

}  // namespace

void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  std::vector<EvalRun> evals;
  std::vector<OdrRun> odrs;
  std::vector<double> all_deltas;

  for (const auto& dir : run_dirs) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
      throw DataError("report: missing manifest in " + dir.string());
    }
    const auto manifest = nlohmann::json::parse(read_text_file(manifest_path));
    const std::string command = manifest.at("command").get<std::string>();

    if (command == "eval") {
      EvalRun run;
      run.name = dir.filename().string();
      run.summary = nlohmann::json::parse(read_text_file(dir / "summary.json"));
      evals.push_back(std::move(run));
    } else if (command == "odr") {
      OdrRun run;
      const TomlTable cfg = TomlTable::parse(manifest.at("config_toml").get<std::string>());
      run.seed = static_cast<std::uint64_t>(cfg.get_int("odr.seed", 0));
      run.group = "B=" + std::to_string(cfg.get_int("odr.B", 0)) +
                  ",N=" + std::to_string(cfg.get_int("odr.N", 0));
      const CsvTable hist = read_csv(dir / "odr_history.csv");
      const int kind_col = hist.column("kind");
      const int seen_col = hist.column("images_seen");
      const int score_col = hist.column("probe_e_pose_star");
      for (std::size_t r = 0; r < hist.rows.size(); ++r) {
        if (hist.rows[r][static_cast<std::size_t>(kind_col)] != "probe") continue;
        run.probe_curve.emplace_back(static_cast<int>(hist.number(r, seen_col)),
                                     hist.number(r, score_col));
      }
      odrs.push_back(std::move(run));
      const auto sc_path = dir / "score_change.csv";
      if (std::filesystem::exists(sc_path)) {
        const CsvTable sc = read_csv(sc_path);
        const int delta_col = sc.column("delta_e_pose_star");
        for (std::size_t r = 0; r < sc.rows.size(); ++r) {
          all_deltas.push_back(sc.number(r, delta_col));
        }
      }
    }
  }

  // Comparison table over eval runs.
  if (!evals.empty()) {
    CsvWriter csv({"run", "n", "IoU", "E_T", "E_R_deg", "E_pose", "E_pose_star", "num_rejected",
                   "hh_E_T_excl"});
    std::string md = "| run | n | IoU | E_T [m] | E_R [deg] | E_pose | E*_pose | # rej |\n";
    md += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& run : evals) {
      const auto& s = run.summary;
      csv.add(run.name);
      csv.add(s.at("n").get<long long>());
      csv.add(s.at("mean_iou").get<double>());
      csv.add(s.at("mean_e_t").get<double>());
      csv.add(s.at("mean_e_r_deg").get<double>());
      csv.add(s.at("mean_e_pose").get<double>());
      csv.add(s.at("mean_e_pose_star").get<double>());
      csv.add(s.at("outlier_count").get<long long>());
      csv.add(s.at("hh_e_t_mean_excl_outliers").get<double>());
      csv.end_row();
      char row[256];
      std::snprintf(row, sizeof(row), "| %s | %lld | %.3f | %.3f | %.2f | %.4f | %.4f | %lld |\n",
                    run.name.c_str(), s.at("n").get<long long>(), s.at("mean_iou").get<double>(),
                    s.at("mean_e_t").get<double>(), s.at("mean_e_r_deg").get<double>(),
                    s.at("mean_e_pose").get<double>(), s.at("mean_e_pose_star").get<double>(),
                    s.at("outlier_count").get<long long>());
      md += row;
    }
    csv.save(out_dir / "comparison_table.csv");
    write_text_file(out_dir / "comparison_table.md", md);
  }

  // Refinement curves: mean +- std over seeds per config group.
  if (!odrs.empty()) {
    std::map<std::string, std::map<int, std::vector<double>>> grouped;
    for (const auto& run : odrs) {
      for (const auto& [seen, score] : run.probe_curve) grouped[run.group][seen].push_back(score);
    }
    std::vector<SvgSeries> series;
    CsvWriter csv({"group", "images_seen", "mean_e_pose_star", "std_e_pose_star", "runs"});
    for (const auto& [group, curve] : grouped) {
      SvgSeries ser;
      ser.label = group;
      for (const auto& [seen, scores] : curve) {
        double mean = 0;
        for (const double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        double var = 0;
        for (const double s : scores) var += (s - mean) * (s - mean);
        const double stddev = scores.size() > 1 ? std::sqrt(var / (scores.size() - 1)) : 0.0;
        ser.x.push_back(seen);
        ser.y.push_back(mean);
        ser.yerr.push_back(stddev);
        csv.add(group);
        csv.add(seen);
        csv.add(mean);
        csv.add(stddev);
        csv.add(static_cast<long long>(scores.size()));
        csv.end_row();
      }
      series.push_back(std::move(ser));
    }
    csv.save(out_dir / "odr_curves.csv");
    SvgChartSpec spec;
    spec.title = "Online refinement (error bars: std over seeds)";
    spec.x_label = "images observed";
    spec.y_label = "mean E*_pose";
    write_text_file(out_dir / "odr_curves.svg", svg_line_chart(spec, series));
  }

  // Combined score-change histogram.
  if (!all_deltas.empty()) {
    double span = 1e-6;
    for (const double d : all_deltas) span = std::max(span, std::abs(d));
    const int bins = 41;
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) edges[static_cast<std::size_t>(b)] = -span + 2 * span * b / bins;
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (const double d : all_deltas) {
      const int b = std::clamp(static_cast<int>((d + span) / (2 * span) * bins), 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    SvgChartSpec spec;
    spec.title = "E*_pose change distribution";
    spec.x_label = "delta E*_pose";
    spec.y_label = "images";
    write_text_file(out_dir / "score_change.svg", svg_histogram_logy(spec, edges, counts));
  }

  std::printf("report: %zu eval runs, %zu refinement runs -> %s\n", evals.size(), odrs.size(),
              out_dir.string().c_str());
}

SATPOSE_NS_END
