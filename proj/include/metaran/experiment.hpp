#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaran/config.hpp"
#include "metaran/metrics.hpp"

namespace metaran {

enum class RunMode { kMeta, kScratch, kTransfer, kMultiTask, kAll };

RunMode parse_run_mode(const std::string& name);

// Training failure annotated with the phase and seed it happened in.
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Method names used in file names and summaries.
inline constexpr const char* kMetaMethod = "meta";

std::vector<EpisodeMetric> to_metrics(const std::string& method, int task_id, std::uint64_t seed,
                                      const std::vector<ShotRecord>& trace);

// Meta-trains one seed and writes meta_model_seed<k>.ckpt and meta_train_seed<k>.csv.
MetaModel run_meta_training(const ExperimentConfig& config, std::uint64_t seed,
                            const std::filesystem::path& out_dir, std::ostream* progress = nullptr);
std::filesystem::path meta_checkpoint_path(const std::filesystem::path& dir, std::uint64_t seed);

// Adapts a meta-model to the new task, writing the run CSV and adapt_trace_seed<k>.csv.
std::vector<EpisodeMetric> run_meta_adaptation(const ExperimentConfig& config, const MetaModel& model,
                                               std::uint64_t seed, const std::filesystem::path& out_dir);

std::vector<EpisodeMetric> run_baseline_method(const ExperimentConfig& config, BaselineKind kind,
                                               std::uint64_t seed, const std::filesystem::path& out_dir);

// Runs the requested methods for every configured seed. CSVs are written as each run
// finishes; an interrupted experiment is restarted from scratch. timings.txt records
// wall-clock per phase.
MetricsLog run_experiment(const ExperimentConfig& config, RunMode mode,
                          std::ostream* progress = nullptr);

}  // namespace metaran
