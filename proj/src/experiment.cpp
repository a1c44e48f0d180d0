#include "metaran/experiment.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include "metaran/errors.hpp"

namespace metaran {

RunMode parse_run_mode(const std::string& name) {
  if (name == "meta") return RunMode::kMeta;
  if (name == "scratch") return RunMode::kScratch;
  if (name == "tl") return RunMode::kTransfer;
  if (name == "mtl") return RunMode::kMultiTask;
  if (name == "all") return RunMode::kAll;
  throw ConfigError("unknown mode '" + name + "' (expected meta, scratch, tl, mtl or all)");
}

std::vector<EpisodeMetric> to_metrics(const std::string& method, int task_id, std::uint64_t seed,
                                      const std::vector<ShotRecord>& trace) {
  std::vector<EpisodeMetric> out;
  out.reserve(trace.size());
  for (const auto& shot : trace)
    out.push_back({method, task_id, seed, shot.shot, shot.eval_return, shot.eval_qos});
  return out;
}

std::filesystem::path meta_checkpoint_path(const std::filesystem::path& dir, std::uint64_t seed) {
  return dir / ("meta_model_seed" + std::to_string(seed) + ".ckpt");
}

namespace {

template <typename Fn>
auto annotated(const char* phase, std::uint64_t seed, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(std::string("phase ") + phase + ", seed " + std::to_string(seed) + ": " +
                          e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

}  // namespace

MetaModel run_meta_training(const ExperimentConfig& config, std::uint64_t seed,
                            const std::filesystem::path& out_dir, std::ostream* progress) {
  return annotated("meta-train", seed, [&] {
    auto curve = open_out(out_dir / ("meta_train_seed" + std::to_string(seed) + ".csv"));
    curve << "iteration,mean_train_return,query_critic_loss,query_actor_loss,contributing_tasks\n";
    const int report_every = std::max(1, config.schedule.outer_iterations / 10);
    auto result = meta_train(config.training_tasks(), config.schedule, config.learner, seed,
                             [&](const IterationRecord& r) {
                               curve << r.iteration << ',' << format_number(r.mean_train_return) << ','
                                     << format_number(r.mean_query_critic_loss) << ','
                                     << format_number(r.mean_query_actor_loss) << ','
                                     << r.contributing_tasks << '\n';
                               if (progress && r.iteration % report_every == 0)
                                 *progress << "  seed " << seed << " meta iteration " << r.iteration
                                           << "/" << config.schedule.outer_iterations
                                           << " mean train return " << r.mean_train_return << '\n';
                             });
    auto ckpt = open_out(meta_checkpoint_path(out_dir, seed));
    result.model.save(ckpt);
    return result.model;
  });
}

std::vector<EpisodeMetric> run_meta_adaptation(const ExperimentConfig& config, const MetaModel& model,
                                               std::uint64_t seed, const std::filesystem::path& out_dir) {
  return annotated("meta-adapt", seed, [&] {
    const TaskSpec task = config.new_task();
    const auto adapted = meta_adapt_new(model, task, config.schedule, config.learner, seed);
    auto trace = open_out(out_dir / ("adapt_trace_seed" + std::to_string(seed) + ".csv"));
    trace << "shot,episode_return\n";
    for (const auto& s : adapted.trace) trace << s.shot << ',' << format_number(s.eval_return) << '\n';
    auto metrics = to_metrics(kMetaMethod, task.task_id, seed, adapted.trace);
    write_run_csv(out_dir, metrics);
    return metrics;
  });
}

std::vector<EpisodeMetric> run_baseline_method(const ExperimentConfig& config, BaselineKind kind,
                                               std::uint64_t seed, const std::filesystem::path& out_dir) {
  const std::string name = to_string(kind);
  return annotated(name.c_str(), seed, [&] {
    const TaskSpec task = config.new_task();
    const auto donors = config.training_tasks();
    const int budget = config.schedule.adapt_episodes();
    AdaptationResult result = [&] {
      if (kind == BaselineKind::kTransfer) {
        const DdpgAgent donor = train_donor(donors.front(), config.donor_episodes, config.learner, seed);
        return run_baseline(kind, task, donors, budget, config.learner, seed, &donor);
      }
      return run_baseline(kind, task, donors, budget, config.learner, seed);
    }();
    auto metrics = to_metrics(name, task.task_id, seed, result.trace);
    write_run_csv(out_dir, metrics);
    return metrics;
  });
}

MetricsLog run_experiment(const ExperimentConfig& config, RunMode mode, std::ostream* progress) {
  config.validate();
  const std::filesystem::path out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir);
  MetricsLog log;
  using clock = std::chrono::steady_clock;

  auto timed = [&](const std::string& phase, std::uint64_t seed, auto&& fn) {
    if (progress) *progress << "[" << phase << "] seed " << seed << '\n';
    const auto start = clock::now();
    auto metrics = fn();
    log.timings.push_back({phase, seed, std::chrono::duration<double>(clock::now() - start).count()});
    for (auto& m : metrics) log.append(std::move(m));
  };

  for (const auto seed : config.seeds) {
    if (mode == RunMode::kMeta || mode == RunMode::kAll) {
      timed("meta", seed, [&] {
        const MetaModel model = run_meta_training(config, seed, out_dir, progress);
        return run_meta_adaptation(config, model, seed, out_dir);
      });
    }
    const std::pair<RunMode, BaselineKind> baselines[] = {
        {RunMode::kScratch, BaselineKind::kScratch},
        {RunMode::kTransfer, BaselineKind::kTransfer},
        {RunMode::kMultiTask, BaselineKind::kMultiTask}};
    for (const auto& [m, kind] : baselines) {
      if (mode == m || mode == RunMode::kAll)
        timed(to_string(kind), seed, [&] { return run_baseline_method(config, kind, seed, out_dir); });
    }
  }

  std::ofstream timings(out_dir / "timings.txt");
  for (const auto& t : log.timings) timings << t.phase << " seed " << t.seed << ' ' << t.seconds << " s\n";
  return log;
}

}  // namespace metaran
