#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metaran/meta.hpp"

namespace metaran {

enum class Profile { kToy, kPaper };

Profile parse_profile(const std::string& name);
std::string to_string(Profile p);

inline constexpr int kConfigSchemaVersion = 1;

// Everything one experiment needs. Training tasks are the first num_tasks entries of
// the sequence pairing task_num_rbs[g % |K|] with task_demand_min_bps[g % |c_m|].
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  Profile profile = Profile::kPaper;
  CellConfig cell;
  std::vector<int> task_num_rbs{60, 80, 100};
  std::vector<double> task_demand_min_bps{1e6, 3e6};
  double demand_max_bps = 10e6;
  int new_task_num_rbs = 80;
  double new_task_demand_min_bps = 2e6;
  MetaSchedule schedule;
  LearnerSettings learner;
  int donor_episodes = 50;
  int final_window = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string output_dir = "out";

  std::vector<TaskSpec> training_tasks() const;
  // Task id equals num_tasks so it never collides with a training task.
  TaskSpec new_task() const;

  // Throws ConfigError with the offending field path.
  void validate() const;
};

ExperimentConfig default_config(Profile profile);

// Reads a YAML file. Values override the defaults of the file's `profile`
// (or `fallback` when the file names none). Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path, Profile fallback = Profile::kPaper);
ExperimentConfig parse_config(const std::string& yaml_text, Profile fallback = Profile::kPaper);

}  // namespace metaran
