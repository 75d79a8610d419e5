#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "satpose/train/config.hpp"
#include "satpose/train/evaluate.hpp"

SATPOSE_NS_BEGIN

inline constexpr const char* kToolVersion = "satpose 0.1.0";

// Programmatic command entry points. Every command writes its outputs plus a
// manifest.json capturing the fully resolved configuration.
void cmd_gen_data(const GenRunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_train(const TrainConfig& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir);
void cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
              const EvalOptions& opt, const std::filesystem::path& out_dir);
void cmd_odr(const std::filesystem::path& checkpoint, const std::filesystem::path& target_dir,
             const std::filesystem::path& probe_dir, const OdrConfig& cfg,
             const std::filesystem::path& out_dir);
void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_dir);
void cmd_preview(std::uint64_t seed, const std::filesystem::path& out_dir);

// Experiment harnesses.
void cmd_ablate_heads(const TrainConfig& base, const std::vector<std::string>& head_configs,
                      const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& train_dir,
                      const std::filesystem::path& eval_dir, const std::filesystem::path& out_dir);
void cmd_ablate_augs(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                     const std::filesystem::path& data_plain_dir,
                     const std::filesystem::path& data_textured_dir,
                     const std::filesystem::path& eval_dir, const std::filesystem::path& out_dir);
void cmd_sweep_odr(const OdrConfig& base, const std::string& param,
                   const std::vector<long long>& values, int seeds,
                   const std::filesystem::path& checkpoint, const std::filesystem::path& target_dir,
                   const std::filesystem::path& probe_dir, const std::filesystem::path& out_dir);

// Re-runs a finished command from its manifest (out_dir override optional).
void cmd_rerun(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir);

// Full CLI; returns the process exit code.
int run_cli(int argc, char** argv);

// EvalOptions <-> TOML (for manifests).
EvalOptions eval_options_from_toml(const TomlTable& t);
std::string eval_options_to_toml(const EvalOptions& opt);

SATPOSE_NS_END
