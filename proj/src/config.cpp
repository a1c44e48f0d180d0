#include "metaran/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "metaran/errors.hpp"

namespace metaran {

Profile parse_profile(const std::string& name) {
  if (name == "toy") return Profile::kToy;
  if (name == "paper") return Profile::kPaper;
  throw ConfigError("profile: unknown profile '" + name + "' (expected toy or paper)");
}

std::string to_string(Profile p) { return p == Profile::kToy ? "toy" : "paper"; }

std::vector<TaskSpec> ExperimentConfig::training_tasks() const {
  std::vector<TaskSpec> tasks;
  for (int g = 0; g < schedule.num_tasks; ++g) {
    TaskSpec t;
    t.task_id = g;
    t.cell = cell;
    t.cell.num_rbs = task_num_rbs[g % task_num_rbs.size()];
    t.demand_min_bps = task_demand_min_bps[g % task_demand_min_bps.size()];
    t.demand_max_bps = demand_max_bps;
    tasks.push_back(t);
  }
  return tasks;
}

TaskSpec ExperimentConfig::new_task() const {
  TaskSpec t;
  t.task_id = schedule.num_tasks;
  t.cell = cell;
  t.cell.num_rbs = new_task_num_rbs;
  t.demand_min_bps = new_task_demand_min_bps;
  t.demand_max_bps = demand_max_bps;
  return t;
}

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion)
    throw ConfigError("schema_version: unsupported version " + std::to_string(schema_version));
  cell.validate();
  if (task_num_rbs.empty()) throw ConfigError("tasks.num_rbs: must not be empty");
  for (int k : task_num_rbs)
    if (k <= 0) throw ConfigError("tasks.num_rbs: entries must be positive");
  if (task_demand_min_bps.empty()) throw ConfigError("tasks.demand_min_bps: must not be empty");
  for (double c : task_demand_min_bps)
    if (!(c >= 0 && c < demand_max_bps))
      throw ConfigError("tasks.demand_min_bps: entries must lie in [0, demand_max_bps)");
  if (new_task_num_rbs <= 0) throw ConfigError("tasks.new_task.num_rbs: must be positive");
  if (!(new_task_demand_min_bps >= 0 && new_task_demand_min_bps < demand_max_bps))
    throw ConfigError("tasks.new_task.demand_min_bps: must lie in [0, demand_max_bps)");
  schedule.validate();
  learner.validate();
  if (donor_episodes < 0) throw ConfigError("baselines.donor_episodes: must be nonnegative");
  if (final_window < 1) throw ConfigError("report.final_window: must be at least 1");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

ExperimentConfig default_config(Profile profile) {
  ExperimentConfig c;
  c.profile = profile;
  if (profile == Profile::kPaper) {
    c.output_dir = "out/paper";
    return c;
  }
  c.cell.num_ues = 5;
  c.cell.num_rbs = 10;
  c.task_num_rbs = {8, 10, 12};
  // Demands scaled to what five UEs sharing ~10 RBs can reach.
  c.task_demand_min_bps = {0.25e6, 0.75e6};
  c.demand_max_bps = 2e6;
  c.new_task_num_rbs = 10;
  c.new_task_demand_min_bps = 0.5e6;
  c.schedule.outer_iterations = 200;
  c.schedule.inner_episodes = 2;
  c.schedule.num_tasks = 3;
  c.learner.agent.hidden = {64, 64};
  c.learner.agent.actor_lr = 1e-3;
  c.learner.agent.critic_lr = 1e-3;
  c.learner.meta_lr = 5e-3;
  c.learner.agent.batch_size = 32;
  c.learner.agent.buffer_capacity = 20000;
  c.learner.agent.horizon = 25;
  c.learner.agent.warmup = 64;
  c.learner.agent.noise_decay = 0.99;
  c.donor_episodes = 20;
  c.seeds = {1, 2, 3, 4, 5};
  c.output_dir = "out/toy";
  return c;
}

namespace {

class Reader {
 public:
  explicit Reader(const YAML::Node& root) : root_(root) {}

  // Visits a mapping, rejecting keys outside `allowed`.
  YAML::Node map(const YAML::Node& node, const std::string& path,
                 std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) throw ConfigError(path + ": expected a mapping");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) throw ConfigError(join(path, key) + ": unknown key");
    }
    return node;
  }

  template <typename T>
  void get(const YAML::Node& parent, const std::string& path, const char* key, T& out) {
    const YAML::Node node = parent[key];
    if (!node) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(join(path, key) + ": invalid value '" + dump(node) + "'");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  static std::string dump(const YAML::Node& n) {
    std::stringstream ss;
    ss << n;
    return ss.str();
  }
  YAML::Node root_;
};

ExperimentConfig from_yaml(const YAML::Node& root, Profile fallback) {
  if (!root || root.IsNull()) throw ConfigError("config: empty document");
  Reader r(root);
  r.map(root, "", {"schema_version", "profile", "cell", "tasks", "schedule", "agent", "baselines",
                   "report", "seeds", "output_dir"});

  Profile profile = fallback;
  if (root["profile"]) {
    std::string name;
    r.get(root, "", "profile", name);
    profile = parse_profile(name);
  }
  ExperimentConfig c = default_config(profile);
  if (!root["schema_version"]) throw ConfigError("schema_version: missing");
  r.get(root, "", "schema_version", c.schema_version);

  if (const auto cell = root["cell"]) {
    r.map(cell, "cell",
          {"num_ues", "rb_bandwidth_hz", "p_min_dbm", "p_max_dbm", "path_loss_exponent",
           "noise_psd_dbm_hz", "cell_radius_m", "num_neighbors", "neighbor_distance_m",
           "neighbor_occupancy", "subcarrier_spacing_hz", "speed_min_mps", "speed_max_mps",
           "traffic_switch_prob"});
    auto& k = c.cell;
    r.get(cell, "cell", "num_ues", k.num_ues);
    r.get(cell, "cell", "rb_bandwidth_hz", k.rb_bandwidth_hz);
    if (cell["p_min_dbm"]) {
      double dbm = 0;
      r.get(cell, "cell", "p_min_dbm", dbm);
      k.p_min_mw = dbm_to_mw(dbm);
    }
    if (cell["p_max_dbm"]) {
      double dbm = 0;
      r.get(cell, "cell", "p_max_dbm", dbm);
      k.p_max_mw = dbm_to_mw(dbm);
    }
    r.get(cell, "cell", "path_loss_exponent", k.path_loss_exponent);
    r.get(cell, "cell", "noise_psd_dbm_hz", k.noise_psd_dbm_hz);
    r.get(cell, "cell", "cell_radius_m", k.cell_radius_m);
    r.get(cell, "cell", "num_neighbors", k.num_neighbors);
    r.get(cell, "cell", "neighbor_distance_m", k.neighbor_distance_m);
    r.get(cell, "cell", "neighbor_occupancy", k.neighbor_occupancy);
    r.get(cell, "cell", "subcarrier_spacing_hz", k.subcarrier_spacing_hz);
    r.get(cell, "cell", "speed_min_mps", k.speed_min_mps);
    r.get(cell, "cell", "speed_max_mps", k.speed_max_mps);
    r.get(cell, "cell", "traffic_switch_prob", k.traffic_switch_prob);
  }

  if (const auto tasks = root["tasks"]) {
    r.map(tasks, "tasks", {"num_rbs", "demand_min_bps", "demand_max_bps", "new_task"});
    r.get(tasks, "tasks", "num_rbs", c.task_num_rbs);
    r.get(tasks, "tasks", "demand_min_bps", c.task_demand_min_bps);
    r.get(tasks, "tasks", "demand_max_bps", c.demand_max_bps);
    if (const auto nt = tasks["new_task"]) {
      r.map(nt, "tasks.new_task", {"num_rbs", "demand_min_bps"});
      r.get(nt, "tasks.new_task", "num_rbs", c.new_task_num_rbs);
      r.get(nt, "tasks.new_task", "demand_min_bps", c.new_task_demand_min_bps);
    }
  }

  if (const auto s = root["schedule"]) {
    r.map(s, "schedule", {"outer_iterations", "inner_episodes", "num_tasks", "adapt_fraction"});
    r.get(s, "schedule", "outer_iterations", c.schedule.outer_iterations);
    r.get(s, "schedule", "inner_episodes", c.schedule.inner_episodes);
    r.get(s, "schedule", "num_tasks", c.schedule.num_tasks);
    r.get(s, "schedule", "adapt_fraction", c.schedule.adapt_fraction);
  }

  if (const auto a = root["agent"]) {
    r.map(a, "agent",
          {"hidden", "gamma", "actor_lr", "critic_lr", "meta_lr", "tau", "noise_std", "noise_decay",
           "noise_floor", "batch_size", "buffer_capacity", "horizon", "warmup", "eval_episodes",
           "eval_seed", "parallel_tasks"});
    auto& d = c.learner.agent;
    r.get(a, "agent", "hidden", d.hidden);
    r.get(a, "agent", "gamma", d.gamma);
    r.get(a, "agent", "actor_lr", d.actor_lr);
    r.get(a, "agent", "critic_lr", d.critic_lr);
    r.get(a, "agent", "meta_lr", c.learner.meta_lr);
    r.get(a, "agent", "tau", d.tau);
    r.get(a, "agent", "noise_std", d.noise_std);
    r.get(a, "agent", "noise_decay", d.noise_decay);
    r.get(a, "agent", "noise_floor", d.noise_floor);
    r.get(a, "agent", "batch_size", d.batch_size);
    r.get(a, "agent", "buffer_capacity", d.buffer_capacity);
    r.get(a, "agent", "horizon", d.horizon);
    r.get(a, "agent", "warmup", d.warmup);
    r.get(a, "agent", "eval_episodes", c.learner.eval_episodes);
    r.get(a, "agent", "eval_seed", c.learner.eval_seed);
    r.get(a, "agent", "parallel_tasks", c.learner.parallel_tasks);
  }

  if (const auto b = root["baselines"]) {
    r.map(b, "baselines", {"donor_episodes"});
    r.get(b, "baselines", "donor_episodes", c.donor_episodes);
  }
  if (const auto rep = root["report"]) {
    r.map(rep, "report", {"final_window"});
    r.get(rep, "report", "final_window", c.final_window);
  }

  if (!root["seeds"]) throw ConfigError("seeds: missing");
  r.get(root, "", "seeds", c.seeds);
  r.get(root, "", "output_dir", c.output_dir);

  c.validate();
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text, Profile fallback) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return from_yaml(root, fallback);
}

ExperimentConfig load_config(const std::filesystem::path& path, Profile fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback);
}

}  // namespace metaran
