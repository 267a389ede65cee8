#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "carshare/ev.hpp"
#include "carshare/power.hpp"

namespace carshare::pipeline {

// One LP solve: charging strategy, uptake regime and sensitivities.
struct RunSpec {
  std::string name;
  power::ChargingStrategy strategy = power::ChargingStrategy::smart;
  power::Uptake uptake = power::Uptake::none;
  power::FleetRole role = power::FleetRole::reference;  // scenario unless uptake is none
  bool hydrogen = false;
  double shared_consumption_factor = 1.0;  // scales shared driving energy (<= 1)
};

struct ComparisonSpec {
  std::string name;
  std::string scenario;
  std::string reference;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon_hours;
};

// Scenario configuration. Parsed strictly (unknown keys are errors); the
// effective configuration with defaults filled in is kept as canonical JSON
// and drives the stage cache keys. Relative paths resolve against base_dir.
struct Config {
  std::uint64_t seed = 42;
  std::size_t horizon_hours = 168;
  std::size_t start_hour = 0;  // hour of year of the first modelled hour
  int start_weekday = 0;       // 0 = Monday

  // diaries: exactly one of generator / input
  std::optional<diary::GeneratorConfig> generator;
  std::string generator_json;
  std::filesystem::path diary_input;
  std::filesystem::path diary_mapping;

  std::size_t k = 2;
  std::size_t max_sequences_per_location = 1500;
  bool ward_squared = true;
  std::size_t memory_limit_bytes = std::size_t{4} << 30;

  int n_max = 48;

  std::size_t profiles_per_cell = 5;
  double battery_kwh = 58.0;
  double large_battery_kwh = 100.0;
  std::set<int> large_battery_clusters{1};
  ev::ChargingRule uncontrolled_rule = ev::ChargingRule::balanced;
  ev::AvailabilityConfig availability = ev::AvailabilityConfig::defaults();
  std::filesystem::path temperature_file;
  std::string temperature_column = "temperature_c";
  int max_resamples = 20;

  power::FleetSpec fleet;

  std::string parameters_json;  // resolved parameter file (built-in placeholders by default)
  std::filesystem::path series_file;
  std::uint64_t series_seed = 7;
  bool export_mps = false;

  std::vector<RunSpec> runs;
  std::vector<ComparisonSpec> comparisons;

  std::filesystem::path base_dir;
  std::string canonical;  // effective configuration, pretty JSON

  static Config from_json(const std::string& text, const std::filesystem::path& base_dir = {},
                          const Overrides& overrides = {});
  static Config load(const std::filesystem::path& path, const Overrides& overrides = {});

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const RunSpec& run(const std::string& name) const;
  power::FleetSpec fleet_for(const RunSpec& run) const;
  power::PowerParams power_params() const;
};

// Built-in demo configuration and placeholder power-sector parameters.
const std::string& demo_config_json();
const std::string& default_parameters_json();

struct StageStatus {
  std::string name;
  std::filesystem::path dir;
  bool cache_hit = false;
  std::string key;
};

// Runs stages into a run directory. Each stage directory carries a
// .stage.json with the stage key (hash of its configuration and input
// artifacts) and the hashes of its outputs; a stage whose key and outputs
// match is skipped. Errors are rethrown as UserError naming the stage and
// its directory.
class Pipeline {
 public:
  Pipeline(Config config, std::filesystem::path out_dir, std::ostream* log = nullptr);

  StageStatus ingest();
  StageStatus cluster();
  StageStatus distributions();
  StageStatus synth();
  // Empty = every configured run.
  std::vector<StageStatus> solve(const std::vector<std::string>& runs = {});
  std::vector<StageStatus> compare(const std::vector<std::string>& comparisons = {});
  // All stages, then summary.json.
  void run_all();
  void write_summary();

  const Config& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_; }
  const std::vector<StageStatus>& history() const { return history_; }

 private:
  StageStatus solve_one(const RunSpec& run, const std::string& synth_key);
  StageStatus compare_one(const ComparisonSpec& cmp);
  void note(const std::string& message);

  Config config_;
  std::filesystem::path out_;
  std::ostream* log_;
  std::vector<StageStatus> history_;
  std::map<std::string, std::string> done_;  // stage -> key within this process
};

// Hourly model inputs of every profile (synth/hourly.json).
struct ProfileInputs {
  ev::ProfileSpec spec;
  std::vector<double> consumption_kwh, rating_kw, balanced_kwh, immediate_kwh;
  double balanced_initial_soc_kwh = 0.0, immediate_initial_soc_kwh = 0.0;

  power::BevProfile bev(double weight, ev::ChargingRule rule, double shared_consumption_factor) const;
};

std::string profile_inputs_json(const std::vector<ev::VehicleProfile>& profiles);
std::vector<ProfileInputs> read_profile_inputs(const std::string& text);

}  // namespace carshare::pipeline
