// Command-line driver for the meta-RL resource allocation experiments.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "metaran/config.hpp"
#include "metaran/errors.hpp"
#include "metaran/experiment.hpp"
#include "metaran/metrics.hpp"

using namespace metaran;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string profile = "toy";
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "YAML experiment config");
  cmd->add_option("--profile", opts.profile, "Default profile: toy or paper")
      ->check(CLI::IsMember({"toy", "paper"}));
  cmd->add_option("--seed", opts.seed, "Run a single seed instead of the configured list");
  cmd->add_option("--out", opts.out, "Output directory (overrides output_dir)");
}

ExperimentConfig resolve(const CommonOptions& opts) {
  const Profile profile = parse_profile(opts.profile);
  ExperimentConfig config = opts.config_path.empty() ? default_config(profile)
                                                     : load_config(opts.config_path, profile);
  if (opts.seed) config.seeds = {*opts.seed};
  if (!opts.out.empty()) config.output_dir = opts.out;
  config.validate();
  return config;
}

MetaModel load_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open meta checkpoint " + path.string());
  return MetaModel::load(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-reinforcement-learning RB and power allocation simulator"};
  app.require_subcommand(1);

  CommonOptions meta_opts, adapt_opts, base_opts, eval_opts, run_opts;
  std::string summarize_dir;
  int summarize_window = 5;
  std::string baseline_kind;
  std::string run_mode = "all";
  std::string adapt_ckpt, eval_ckpt;
  int eval_episodes = 5;

  auto* meta_cmd = app.add_subcommand("meta-train", "Meta-train on the task portfolio");
  add_common(meta_cmd, meta_opts);

  auto* adapt_cmd = app.add_subcommand("adapt", "Adapt a meta-model to the new task");
  add_common(adapt_cmd, adapt_opts);
  adapt_cmd->add_option("--checkpoint", adapt_ckpt,
                        "Meta checkpoint (default: <out>/meta_model_seed<seed>.ckpt)");

  auto* base_cmd = app.add_subcommand("baseline", "Train a baseline on the new task");
  add_common(base_cmd, base_opts);
  base_cmd->add_option("--kind", baseline_kind, "scratch, tl or mtl")
      ->required()
      ->check(CLI::IsMember({"scratch", "tl", "mtl"}));

  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a meta-model on the new task");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Meta checkpoint")->required();
  eval_cmd->add_option("--episodes", eval_episodes, "Evaluation episodes");

  auto* sum_cmd = app.add_subcommand("summarize", "Summarize run CSVs in a directory");
  sum_cmd->add_option("--out", summarize_dir, "Directory holding the run CSVs")->required();
  sum_cmd->add_option("--final-window", summarize_window, "Episodes averaged for the final return");

  auto* run_cmd = app.add_subcommand("run", "Full experiment: meta and/or baselines for every seed");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--mode", run_mode, "meta, scratch, tl, mtl or all")
      ->check(CLI::IsMember({"meta", "scratch", "tl", "mtl", "all"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (meta_cmd->parsed()) {
      const auto config = resolve(meta_opts);
      for (auto seed : config.seeds) {
        run_meta_training(config, seed, config.output_dir, &std::cout);
        std::cout << "wrote " << meta_checkpoint_path(config.output_dir, seed).string() << '\n';
      }
    } else if (adapt_cmd->parsed()) {
      const auto config = resolve(adapt_opts);
      for (auto seed : config.seeds) {
        const auto path = adapt_ckpt.empty() ? meta_checkpoint_path(config.output_dir, seed)
                                             : std::filesystem::path(adapt_ckpt);
        const auto metrics = run_meta_adaptation(config, load_meta(path), seed, config.output_dir);
        std::cout << "seed " << seed << ": final shot return " << metrics.back().episode_return << '\n';
      }
    } else if (base_cmd->parsed()) {
      const auto config = resolve(base_opts);
      const auto kind = parse_baseline_kind(baseline_kind);
      for (auto seed : config.seeds) {
        const auto metrics = run_baseline_method(config, kind, seed, config.output_dir);
        if (!metrics.empty())
          std::cout << "seed " << seed << ": final shot return " << metrics.back().episode_return << '\n';
      }
    } else if (eval_cmd->parsed()) {
      const auto config = resolve(eval_opts);
      const MetaModel model = load_meta(eval_ckpt);
      const auto result = inner_adapt(model, config.new_task(), 0, config.learner, config.seeds.front());
      TaskEnvironment env(config.new_task());
      const auto eval = evaluate_policy(result.agent, env, eval_episodes, config.learner.agent.horizon,
                                        config.learner.eval_seed);
      std::cout << "mean discounted return " << eval.mean_return << "\nmean QoS (bits/s) avg "
                << eval.mean_qos.avg << " min " << eval.mean_qos.min << " max " << eval.mean_qos.max
                << '\n';
    } else if (sum_cmd->parsed()) {
      const MetricsLog log = read_metrics_dir(summarize_dir);
      const auto report = summarize(log, summarize_window);
      const std::string text = format_summary(report);
      std::ofstream(std::filesystem::path(summarize_dir) / "summary.txt") << text;
      write_qos_cdfs(summarize_dir, log);
      std::cout << text;
    } else if (run_cmd->parsed()) {
      const auto config = resolve(run_opts);
      const MetricsLog log = run_experiment(config, parse_run_mode(run_mode), &std::cout);
      const std::string text = format_summary(summarize(log, config.final_window));
      std::ofstream(std::filesystem::path(config.output_dir) / "summary.txt") << text;
      write_qos_cdfs(config.output_dir, log);
      std::cout << text;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
