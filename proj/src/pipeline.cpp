#include "carshare/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <ostream>
#include <regex>
#include <sstream>

#include "carshare/cluster.hpp"
#include "carshare/embedded_data.hpp"
#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "carshare/mobility.hpp"
#include "carshare/mps.hpp"
#include "carshare/rng.hpp"
#include "json.hpp"

namespace carshare::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw UserError(context + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = k == "comment";
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw UserError(context + ": unknown key '" + k + "'");
  }
}

power::FleetCell fleet_cell(const json& j, const std::string& context) {
  check_keys(j, {"location", "cluster", "share"}, context);
  power::FleetCell c;
  c.location = location_from(j.at("location").get<std::string>());
  c.cluster = j.at("cluster").get<int>();
  if (c.cluster < 1) throw UserError(context + ": clusters are numbered from 1");
  return c;
}

json cell_json(const power::FleetCell& c) {
  return json{{"location", std::string(to_string(c.location))}, {"cluster", c.cluster}};
}

std::string_view rule_name(ev::ChargingRule r) { return r == ev::ChargingRule::balanced ? "balanced" : "immediate"; }

ev::ChargingRule rule_from(const std::string& s) {
  if (s == "balanced") return ev::ChargingRule::balanced;
  if (s == "immediate") return ev::ChargingRule::immediate;
  throw UserError("unknown charging rule '" + s + "'");
}

std::string_view role_name(power::FleetRole r) { return r == power::FleetRole::reference ? "reference" : "scenario"; }

const std::regex run_name_pattern("[A-Za-z0-9_-]+");

std::string hash_parts(std::initializer_list<std::string> parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined += p;
    joined += '\n';
  }
  return io::sha256_hex(joined);
}

std::string file_hash_or_empty(const fs::path& p) { return p.empty() ? std::string{} : io::sha256_file(p); }

constexpr std::size_t window_winter_hour = 24 * 28;   // 29 January
constexpr std::size_t window_summer_hour = 24 * 196;  // 16 July

std::string cell_name(const power::FleetCell& c) {
  return std::string(to_string(c.location)) + "_c" + std::to_string(c.cluster);
}

}  // namespace

const std::string& demo_config_json() {
  static const std::string text = embedded::demo_json;
  return text;
}

const std::string& default_parameters_json() {
  static const std::string text = embedded::parameters_json;
  return text;
}

// ---- configuration ----

Config Config::from_json(const std::string& text, const fs::path& base_dir, const Overrides& overrides) {
  Config c;
  c.base_dir = base_dir;
  json canon;
  try {
    json j = json::parse(text);
    check_keys(j, {"seed", "horizon_hours", "start_hour", "start_weekday", "diaries", "clustering", "distributions",
                   "profiles", "fleet", "power", "runs", "comparisons"},
               "config");
    c.seed = j.value("seed", c.seed);
    c.horizon_hours = j.value("horizon_hours", c.horizon_hours);
    c.start_hour = j.value("start_hour", c.start_hour);
    c.start_weekday = j.value("start_weekday", c.start_weekday);
    if (overrides.seed) c.seed = *overrides.seed;
    if (overrides.horizon_hours) c.horizon_hours = *overrides.horizon_hours;
    if (c.horizon_hours == 0 || c.horizon_hours % 24 != 0)
      throw UserError("config: horizon_hours must be a positive multiple of 24");
    if (c.start_hour + c.horizon_hours > static_cast<std::size_t>(power::hours_per_year))
      throw UserError("config: start_hour + horizon_hours exceeds one year");
    if (c.start_weekday < 0 || c.start_weekday > 6) throw UserError("config: start_weekday must lie in 0..6");
    canon["seed"] = c.seed;
    canon["horizon_hours"] = c.horizon_hours;
    canon["start_hour"] = c.start_hour;
    canon["start_weekday"] = c.start_weekday;

    // diaries
    const json d = j.value("diaries", json{{"generator", json::object()}});
    check_keys(d, {"generator", "generator_file", "input", "mapping"}, "config.diaries");
    const int sources = static_cast<int>(d.contains("generator")) + static_cast<int>(d.contains("generator_file")) +
                        static_cast<int>(d.contains("input"));
    if (sources != 1) throw UserError("config.diaries: give exactly one of generator, generator_file, input");
    json dc;
    if (d.contains("input")) {
      c.diary_input = d["input"].get<std::string>();
      dc["input"] = c.diary_input.string();
      if (d.contains("mapping")) {
        c.diary_mapping = d["mapping"].get<std::string>();
        dc["mapping"] = c.diary_mapping.string();
      }
    } else {
      if (d.contains("mapping")) throw UserError("config.diaries: mapping applies to input files only");
      json g = d.contains("generator") ? d["generator"]
                                       : json::parse(io::read_file(c.resolve(d["generator_file"].get<std::string>())));
      if (!g.contains("person_days")) g["person_days"] = json{{"metropolis", 700}, {"rural", 700}};
      c.generator_json = g.dump();
      c.generator = diary::GeneratorConfig::from_json(c.generator_json);
      dc["generator"] = g;
    }
    canon["diaries"] = dc;

    const json cl = j.value("clustering", json::object());
    check_keys(cl, {"k", "max_sequences_per_location", "squared", "memory_limit_mb"}, "config.clustering");
    c.k = cl.value("k", c.k);
    c.max_sequences_per_location = cl.value("max_sequences_per_location", c.max_sequences_per_location);
    c.ward_squared = cl.value("squared", c.ward_squared);
    c.memory_limit_bytes = cl.value("memory_limit_mb", c.memory_limit_bytes >> 20) << 20;
    if (c.k < 1) throw UserError("config.clustering: k must be at least 1");
    if (c.max_sequences_per_location < 2) throw UserError("config.clustering: max_sequences_per_location below 2");
    canon["clustering"] = {{"k", c.k},
                           {"max_sequences_per_location", c.max_sequences_per_location},
                           {"squared", c.ward_squared},
                           {"memory_limit_mb", c.memory_limit_bytes >> 20}};

    const json di = j.value("distributions", json::object());
    check_keys(di, {"n_max"}, "config.distributions");
    c.n_max = di.value("n_max", c.n_max);
    if (c.n_max < 1) throw UserError("config.distributions: n_max must be positive");
    canon["distributions"] = {{"n_max", c.n_max}};

    const json pr = j.value("profiles", json::object());
    check_keys(pr, {"per_cell", "battery_kwh", "large_battery_kwh", "large_battery_clusters", "uncontrolled_rule",
                    "availability", "temperature_file", "temperature_column", "max_resamples"},
               "config.profiles");
    c.profiles_per_cell = pr.value("per_cell", c.profiles_per_cell);
    c.battery_kwh = pr.value("battery_kwh", c.battery_kwh);
    c.large_battery_kwh = pr.value("large_battery_kwh", c.large_battery_kwh);
    if (pr.contains("large_battery_clusters"))
      c.large_battery_clusters = pr["large_battery_clusters"].get<std::set<int>>();
    c.uncontrolled_rule = rule_from(pr.value("uncontrolled_rule", std::string(rule_name(c.uncontrolled_rule))));
    c.max_resamples = pr.value("max_resamples", c.max_resamples);
    if (pr.contains("temperature_file")) c.temperature_file = pr["temperature_file"].get<std::string>();
    c.temperature_column = pr.value("temperature_column", c.temperature_column);
    if (pr.contains("availability")) {
      const json& a = pr["availability"];
      check_keys(a, {"work_school", "leisure", "home", "errands", "shared_rating_kw"}, "config.profiles.availability");
      for (const auto& [k, v] : a.items()) {
        if (k == "shared_rating_kw" || k == "comment") continue;
        check_keys(v, {"plug_probability", "ratings"}, "config.profiles.availability." + k);
        ev::ChargingOption o;
        o.plug_probability = v.at("plug_probability").get<double>();
        for (const auto& r : v.at("ratings")) {
          if (!r.is_array() || r.size() != 2)
            throw UserError("config.profiles.availability." + k + ": ratings are [kW, probability] pairs");
          o.ratings.emplace_back(r[0].get<double>(), r[1].get<double>());
        }
        c.availability.private_options[destination_from(k)] = o;
      }
      c.availability.shared_rating_kw = a.value("shared_rating_kw", c.availability.shared_rating_kw);
    }
    c.availability.validate();
    if (c.profiles_per_cell < 1) throw UserError("config.profiles: per_cell must be at least 1");
    if (!(c.battery_kwh > 0.0) || !(c.large_battery_kwh > 0.0))
      throw UserError("config.profiles: battery sizes must be positive");
    json avail;
    for (const auto& [dest, o] : c.availability.private_options) {
      json r = json::array();
      for (auto [kw, p] : o.ratings) r.push_back({kw, p});
      avail[std::string(to_string(dest))] = {{"plug_probability", o.plug_probability}, {"ratings", r}};
    }
    avail["shared_rating_kw"] = c.availability.shared_rating_kw;
    canon["profiles"] = {{"per_cell", c.profiles_per_cell},
                         {"battery_kwh", c.battery_kwh},
                         {"large_battery_kwh", c.large_battery_kwh},
                         {"large_battery_clusters", c.large_battery_clusters},
                         {"uncontrolled_rule", rule_name(c.uncontrolled_rule)},
                         {"availability", avail},
                         {"temperature_file", c.temperature_file.string()},
                         {"temperature_column", c.temperature_column},
                         {"max_resamples", c.max_resamples}};

    const json fl = j.value("fleet", json::object());
    check_keys(fl, {"total_bevs", "substitution_rate", "framework", "cells", "uptake"}, "config.fleet");
    c.fleet.total_bevs = fl.value("total_bevs", c.fleet.total_bevs);
    c.fleet.substitution_rate = fl.value("substitution_rate", c.fleet.substitution_rate);
    c.fleet.framework = power::framework_from(fl.value("framework", std::string(to_string(c.fleet.framework))));
    if (!fl.contains("cells")) throw UserError("config.fleet: cells are required");
    json cells = json::array();
    for (const auto& jc : fl["cells"]) {
      auto cell = fleet_cell(jc, "config.fleet.cells");
      if (c.fleet.cell_shares.count(cell)) throw UserError("config.fleet.cells: duplicate cell " + cell_name(cell));
      if (cell.cluster > static_cast<int>(c.k))
        throw UserError("config.fleet.cells: cluster " + std::to_string(cell.cluster) + " exceeds k");
      c.fleet.cell_shares[cell] = jc.at("share").get<double>();
    }
    for (const auto& [cell, share] : c.fleet.cell_shares) {
      auto e = cell_json(cell);
      e["share"] = share;
      cells.push_back(e);
    }
    json uptake = json::object();
    if (fl.contains("uptake")) {
      check_keys(fl["uptake"], {"low", "high"}, "config.fleet.uptake");
      for (const auto& [name, list] : fl["uptake"].items()) {
        if (name == "comment") continue;
        auto& set = c.fleet.uptake_cells[power::uptake_from(name)];
        for (const auto& jc : list) set.insert(fleet_cell(jc, "config.fleet.uptake." + name));
      }
    }
    for (const auto& [u, set] : c.fleet.uptake_cells) {
      json list = json::array();
      for (const auto& cell : set) list.push_back(cell_json(cell));
      uptake[std::string(to_string(u))] = list;
    }
    c.fleet.validate();
    canon["fleet"] = {{"total_bevs", c.fleet.total_bevs},
                      {"substitution_rate", c.fleet.substitution_rate},
                      {"framework", to_string(c.fleet.framework)},
                      {"cells", cells},
                      {"uptake", uptake}};

    const json pw = j.value("power", json::object());
    check_keys(pw, {"parameters", "parameters_file", "series_file", "series_seed", "export_mps"}, "config.power");
    if (pw.contains("parameters") && pw.contains("parameters_file"))
      throw UserError("config.power: give parameters or parameters_file, not both");
    if (pw.contains("parameters"))
      c.parameters_json = pw["parameters"].dump();
    else if (pw.contains("parameters_file"))
      c.parameters_json = io::read_file(c.resolve(pw["parameters_file"].get<std::string>()));
    else
      c.parameters_json = default_parameters_json();
    power::PowerParams::from_json(c.parameters_json).validate();
    if (pw.contains("series_file")) c.series_file = pw["series_file"].get<std::string>();
    c.series_seed = pw.value("series_seed", c.series_seed);
    c.export_mps = pw.value("export_mps", c.export_mps);
    canon["power"] = {{"parameters", json::parse(c.parameters_json)},
                      {"series_file", c.series_file.string()},
                      {"series_seed", c.series_seed},
                      {"export_mps", c.export_mps}};

    if (j.contains("runs")) {
      for (const auto& jr : j["runs"]) {
        check_keys(jr, {"name", "strategy", "uptake", "role", "hydrogen", "shared_consumption_factor"}, "config.runs");
        RunSpec r;
        r.name = jr.at("name").get<std::string>();
        r.strategy = power::charging_strategy_from(jr.value("strategy", std::string("smart")));
        r.uptake = power::uptake_from(jr.value("uptake", std::string("none")));
        r.role = r.uptake == power::Uptake::none ? power::FleetRole::reference : power::FleetRole::scenario;
        if (jr.contains("role")) {
          auto role = jr["role"].get<std::string>();
          if (role != "reference" && role != "scenario") throw UserError("config.runs: unknown role '" + role + "'");
          r.role = role == "reference" ? power::FleetRole::reference : power::FleetRole::scenario;
        }
        r.hydrogen = jr.value("hydrogen", false);
        r.shared_consumption_factor = jr.value("shared_consumption_factor", 1.0);
        c.runs.push_back(r);
      }
    } else {
      for (auto s : {power::ChargingStrategy::uncontrolled, power::ChargingStrategy::smart,
                     power::ChargingStrategy::bidirectional})
        for (auto u : {power::Uptake::none, power::Uptake::low, power::Uptake::high}) {
          RunSpec r;
          r.strategy = s;
          r.uptake = u;
          r.role = u == power::Uptake::none ? power::FleetRole::reference : power::FleetRole::scenario;
          r.name = std::string(to_string(s)) + "_" + (u == power::Uptake::none ? "ref" : std::string(to_string(u)));
          c.runs.push_back(r);
        }
    }
    json runs = json::array();
    std::set<std::string> names;
    for (const auto& r : c.runs) {
      if (!std::regex_match(r.name, run_name_pattern))
        throw UserError("config.runs: run name '" + r.name + "' may only use letters, digits, '_' and '-'");
      if (!names.insert(r.name).second) throw UserError("config.runs: duplicate run name '" + r.name + "'");
      if (!(r.shared_consumption_factor > 0.0 && r.shared_consumption_factor <= 1.0))
        throw UserError("config.runs: shared_consumption_factor of " + r.name + " must lie in (0, 1]");
      runs.push_back({{"name", r.name},
                      {"strategy", to_string(r.strategy)},
                      {"uptake", to_string(r.uptake)},
                      {"role", role_name(r.role)},
                      {"hydrogen", r.hydrogen},
                      {"shared_consumption_factor", r.shared_consumption_factor}});
    }
    canon["runs"] = runs;

    if (j.contains("comparisons")) {
      for (const auto& jc : j["comparisons"]) {
        check_keys(jc, {"name", "scenario", "reference"}, "config.comparisons");
        ComparisonSpec cmp;
        cmp.scenario = jc.at("scenario").get<std::string>();
        cmp.reference = jc.at("reference").get<std::string>();
        cmp.name = jc.value("name", cmp.scenario);
        c.comparisons.push_back(cmp);
      }
    } else {
      for (const auto& s : c.runs) {
        if (s.role != power::FleetRole::scenario) continue;
        for (const auto& r : c.runs)
          if (r.role == power::FleetRole::reference && r.uptake == power::Uptake::none &&
              r.strategy == s.strategy && r.hydrogen == s.hydrogen) {
            c.comparisons.push_back({s.name, s.name, r.name});
            break;
          }
      }
    }
    json cmps = json::array();
    std::set<std::string> cmp_names;
    for (const auto& cmp : c.comparisons) {
      if (!std::regex_match(cmp.name, run_name_pattern))
        throw UserError("config.comparisons: name '" + cmp.name + "' may only use letters, digits, '_' and '-'");
      if (!cmp_names.insert(cmp.name).second)
        throw UserError("config.comparisons: duplicate name '" + cmp.name + "'");
      const auto& s = c.run(cmp.scenario);
      const auto& r = c.run(cmp.reference);
      if (s.strategy != r.strategy)
        throw UserError("config.comparisons: " + cmp.name + " compares runs with different charging strategies");
      if (s.hydrogen != r.hydrogen)
        throw UserError("config.comparisons: " + cmp.name + " compares runs with different hydrogen settings");
      cmps.push_back({{"name", cmp.name}, {"scenario", cmp.scenario}, {"reference", cmp.reference}});
    }
    canon["comparisons"] = cmps;
  } catch (const json::exception& e) {
    throw UserError(std::string("config: ") + e.what());
  }
  c.canonical = canon.dump(2) + "\n";
  return c;
}

Config Config::load(const fs::path& path, const Overrides& overrides) {
  return from_json(io::read_file(path), path.parent_path(), overrides);
}

fs::path Config::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

const RunSpec& Config::run(const std::string& name) const {
  for (const auto& r : runs)
    if (r.name == name) return r;
  throw UserError("no run named '" + name + "'");
}

power::FleetSpec Config::fleet_for(const RunSpec& r) const {
  power::FleetSpec f = fleet;
  f.uptake = r.uptake;
  return f;
}

power::PowerParams Config::power_params() const { return power::PowerParams::from_json(parameters_json); }

// ---- profile inputs ----

power::BevProfile ProfileInputs::bev(double weight, ev::ChargingRule rule, double factor) const {
  power::BevProfile b;
  b.id = spec.id;
  b.ownership = spec.ownership;
  b.weight = weight;
  b.battery_kwh = spec.vehicle.battery_kwh;
  b.charge_efficiency = spec.vehicle.charge_efficiency;
  b.discharge_efficiency = spec.vehicle.discharge_efficiency;
  b.consumption_kwh = consumption_kwh;
  b.rating_kw = rating_kw;
  b.uncontrolled_kwh = rule == ev::ChargingRule::balanced ? balanced_kwh : immediate_kwh;
  b.uncontrolled_initial_soc_kwh =
      rule == ev::ChargingRule::balanced ? balanced_initial_soc_kwh : immediate_initial_soc_kwh;
  if (spec.ownership == Ownership::shared && factor != 1.0) {
    // Scaling consumption and the fixed-rule path together keeps the path
    // within [0, battery].
    for (auto& v : b.consumption_kwh) v *= factor;
    for (auto& v : b.uncontrolled_kwh) v *= factor;
    b.uncontrolled_initial_soc_kwh *= factor;
  }
  return b;
}

std::string profile_inputs_json(const std::vector<ev::VehicleProfile>& profiles) {
  json list = json::array();
  for (const auto& p : profiles) {
    list.push_back({{"id", p.spec.id},
                    {"location", to_string(p.spec.location)},
                    {"cluster", p.spec.cluster},
                    {"ownership", to_string(p.spec.ownership)},
                    {"weight", p.spec.weight},
                    {"battery_kwh", p.spec.vehicle.battery_kwh},
                    {"charge_efficiency", p.spec.vehicle.charge_efficiency},
                    {"discharge_efficiency", p.spec.vehicle.discharge_efficiency},
                    {"consumption_kwh", p.hourly_consumption_kwh},
                    {"rating_kw", p.hourly_rating_kw},
                    {"balanced_kwh", p.hourly_balanced_kwh},
                    {"immediate_kwh", p.hourly_immediate_kwh},
                    {"balanced_initial_soc_kwh", p.balanced.initial_soc_kwh},
                    {"immediate_initial_soc_kwh", p.immediate.initial_soc_kwh}});
  }
  json j{{"schema", "carshare.profiles/1"}, {"profiles", list}};
  return j.dump(1) + "\n";
}

std::vector<ProfileInputs> read_profile_inputs(const std::string& text) {
  std::vector<ProfileInputs> out;
  try {
    json j = json::parse(text);
    if (j.value("schema", "") != "carshare.profiles/1") throw UserError("not a profile input file");
    for (const auto& p : j.at("profiles")) {
      ProfileInputs in;
      in.spec.id = p.at("id").get<std::string>();
      in.spec.location = location_from(p.at("location").get<std::string>());
      in.spec.cluster = p.at("cluster").get<int>();
      in.spec.ownership = ownership_from(p.at("ownership").get<std::string>());
      in.spec.weight = p.at("weight").get<double>();
      in.spec.vehicle.battery_kwh = p.at("battery_kwh").get<double>();
      in.spec.vehicle.charge_efficiency = p.at("charge_efficiency").get<double>();
      in.spec.vehicle.discharge_efficiency = p.at("discharge_efficiency").get<double>();
      in.consumption_kwh = p.at("consumption_kwh").get<std::vector<double>>();
      in.rating_kw = p.at("rating_kw").get<std::vector<double>>();
      in.balanced_kwh = p.at("balanced_kwh").get<std::vector<double>>();
      in.immediate_kwh = p.at("immediate_kwh").get<std::vector<double>>();
      in.balanced_initial_soc_kwh = p.at("balanced_initial_soc_kwh").get<double>();
      in.immediate_initial_soc_kwh = p.at("immediate_initial_soc_kwh").get<double>();
      out.push_back(std::move(in));
    }
  } catch (const json::exception& e) {
    throw UserError(std::string("profile inputs: ") + e.what());
  }
  return out;
}

// ---- stage bookkeeping ----

namespace {

const char* stage_file = ".stage.json";

std::vector<std::pair<std::string, std::string>> hash_outputs(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == stage_file) continue;
    out.emplace_back(fs::relative(e.path(), dir).generic_string(), io::sha256_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Digest of a sealed stage's outputs, or empty if the stage is not sealed
// with the given key and intact outputs.
std::string sealed_digest(const fs::path& dir, const std::string& key) {
  const fs::path f = dir / stage_file;
  if (!fs::exists(f)) return {};
  json j;
  try {
    j = json::parse(io::read_file(f));
  } catch (const json::exception&) {
    return {};
  }
  if (j.value("key", "") != key || !j.contains("outputs")) return {};
  std::vector<std::pair<std::string, std::string>> recorded;
  for (const auto& [rel, h] : j["outputs"].items()) recorded.emplace_back(rel, h.get<std::string>());
  std::sort(recorded.begin(), recorded.end());
  if (recorded != hash_outputs(dir)) return {};
  std::string joined;
  for (const auto& [rel, h] : recorded) joined += rel + " " + h + "\n";
  return io::sha256_hex(joined);
}

std::string seal(const fs::path& dir, const std::string& name, const std::string& key) {
  json outputs = json::object();
  std::string joined;
  for (const auto& [rel, h] : hash_outputs(dir)) {
    outputs[rel] = h;
    joined += rel + " " + h + "\n";
  }
  json j{{"stage", name}, {"key", key}, {"outputs", outputs}};
  io::write_file(dir / stage_file, j.dump(1) + "\n");
  return io::sha256_hex(joined);
}

template <typename Fn>
std::string write_to_string(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

json sub(const std::string& canonical, std::initializer_list<const char*> keys) {
  json c = json::parse(canonical);
  json out = json::object();
  for (const char* k : keys) out[k] = c.at(k);
  return out;
}

}  // namespace

Pipeline::Pipeline(Config config, fs::path out_dir, std::ostream* log)
    : config_(std::move(config)), out_(std::move(out_dir)), log_(log) {
  fs::create_directories(out_);
  io::write_file(out_ / "config.json", config_.canonical);
}

void Pipeline::note(const std::string& message) {
  if (!log_) return;
#pragma omp critical(carshare_pipeline_log)
  *log_ << message << '\n';
}

namespace {

// Runs `body` into `dir` unless the stage is sealed with `key`. Returns the
// output digest that downstream keys build on.
template <typename Key, typename Body>
StageStatus run_stage(const std::string& name, const fs::path& dir, Key&& key_fn, Body&& body, std::string& digest) {
  StageStatus st{name, dir, false, {}};
  try {
    st.key = key_fn();
    digest = sealed_digest(dir, st.key);
    if (!digest.empty()) {
      st.cache_hit = true;
      return st;
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    body();
    digest = seal(dir, name, st.key);
  } catch (const UserError& e) {
    throw UserError("stage " + name + " (" + dir.string() + "): " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw UserError("stage " + name + " (" + dir.string() + "): " + e.what());
  }
  return st;
}

}  // namespace

// ---- ingest ----

StageStatus Pipeline::ingest() {
  const auto& c = config_;
  const fs::path dir = out_ / "ingest";
  auto key = [&] { return hash_parts({"ingest/1", sub(c.canonical, {"seed", "diaries"}).dump(), file_hash_or_empty(c.resolve(c.diary_input)),
                  file_hash_or_empty(c.resolve(c.diary_mapping))}); };
  std::string digest;
  auto st = run_stage("ingest", dir, key, [&] {
    diary::ParseResult parsed;
    if (c.generator) {
      parsed.trips = diary::generate_synthetic_diaries(*c.generator, mix_seed(c.seed, 1));
    } else {
      auto mapping = c.diary_mapping.empty() ? diary::ColumnMapping::identity()
                                             : diary::ColumnMapping::load(c.resolve(c.diary_mapping));
      parsed = diary::parse_diaries_file(c.resolve(c.diary_input), mapping);
    }
    diary::FilterReport report;
    auto trips = diary::filter_trips(parsed.trips, &report);
    if (trips.empty()) throw UserError("no trips left after filtering");
    auto seqs = diary::build_sequences(trips);
    io::write_file(dir / "trips.csv", write_to_string([&](std::ostream& o) { diary::write_trips(trips, o); }));
    io::write_file(dir / "rejections.csv",
                   write_to_string([&](std::ostream& o) { diary::write_rejections(parsed.rejected, o); }));
    io::write_file(dir / "filter_report.csv",
                   write_to_string([&](std::ostream& o) { diary::write_filter_report(report, o); }));
    io::write_file(dir / "sequences.csv", write_to_string([&](std::ostream& o) { diary::write_sequences(seqs, o); }));
    note("ingest: " + std::to_string(report.retained) + " of " + std::to_string(report.input) + " trips retained, " +
         std::to_string(seqs.size()) + " person-days, " + std::to_string(parsed.rejected.size()) + " rows rejected");
  }, digest);
  done_["ingest"] = digest;
  history_.push_back(st);
  note(std::string("stage ingest: ") + (st.cache_hit ? "cached" : "done"));
  return st;
}

// ---- cluster ----

StageStatus Pipeline::cluster() {
  if (!done_.count("ingest")) ingest();
  const auto& c = config_;
  const fs::path dir = out_ / "cluster";
  const fs::path in = out_ / "ingest";
  auto key = [&] { return hash_parts({"cluster/1", done_["ingest"], sub(c.canonical, {"seed", "clustering"}).dump()}); };
  std::string digest;
  auto st = run_stage("cluster", dir, key, [&] {
    auto trips = diary::parse_diaries_file(in / "trips.csv").trips;
    std::ifstream sf(in / "sequences.csv");
    auto seqs = diary::read_sequences(sf);

    std::ostringstream labels_out, index_out, stats_out;
    io::TableWriter labels(labels_out, {"person_day_id", "location", "cluster"});
    io::TableWriter index(index_out, {"location", "cluster", "order", "person_day_id", "blocks"});
    std::vector<cluster::ClusterStats> all_stats;
    for (std::size_t li = 0; li < all_locations.size(); ++li) {
      const auto loc = all_locations[li];
      std::vector<diary::DaySequence> subset;
      for (const auto& s : seqs)
        if (s.location_type == loc && s.day_type == DayType::weekday) subset.push_back(s);
      if (subset.empty()) continue;
      const std::string lname(to_string(loc));
      if (subset.size() < std::max<std::size_t>(c.k, 2))
        throw UserError(lname + " has " + std::to_string(subset.size()) + " weekday person-days; clustering needs at least " +
                        std::to_string(std::max<std::size_t>(c.k, 2)));
      if (subset.size() > c.max_sequences_per_location) {
        auto keep = cluster::stratified_subsample(subset, c.max_sequences_per_location, mix_seed(c.seed, 100 + li));
        std::vector<diary::DaySequence> kept;
        for (auto i : keep) kept.push_back(subset[i]);
        note("cluster: " + lname + " subsampled to " + std::to_string(kept.size()) + " of " +
             std::to_string(subset.size()) + " weekday person-days");
        subset = std::move(kept);
      }
      cluster::DistanceOptions dopt;
      dopt.memory_limit_bytes = c.memory_limit_bytes;
      auto dm = cluster::distance_matrix(subset, dopt);
      auto dg = cluster::hac_ward(dm, {c.ward_squared});
      if (!dg.monotone()) note("cluster: warning: " + lname + " dendrogram heights are not monotone");
      auto daily = cluster::daily_distance(subset, trips);
      auto lab = cluster::cut_dendrogram(dg, c.k, daily);
      auto stats = cluster::cluster_stats(loc, c.k, lab, subset, trips);
      for (const auto& s : stats)
        if (s.n_sequences == 0) note("cluster: warning: " + lname + " cluster " + std::to_string(s.cluster_id) + " is empty");
      all_stats.insert(all_stats.end(), stats.begin(), stats.end());
      {
        std::ofstream f(dir / (lname + ".csdm"), std::ios::binary);
        cluster::write_distance_matrix(dm, f);
      }
      io::write_file(dir / (lname + "_merges.csv"), write_to_string([&](std::ostream& o) { cluster::write_merges(dg, o); }));
      io::write_file(dir / (lname + "_heights.csv"), write_to_string([&](std::ostream& o) { cluster::write_heights(dg, o); }));
      for (std::size_t i = 0; i < subset.size(); ++i) {
        labels.cell(subset[i].person_day_id).cell(lname).cell(lab[i]);
        labels.end_row();
      }
      // Sequence index plot data: members grouped by cluster.
      std::vector<std::size_t> order(subset.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lab[a] < lab[b]; });
      for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& s = subset[order[r]];
        std::string blocks(slots_per_day, '0');
        for (int b = 0; b < slots_per_day; ++b)
          if (s.blocks[static_cast<std::size_t>(b)] == diary::BlockState::on_move) blocks[static_cast<std::size_t>(b)] = '1';
        index.cell(lname).cell(lab[order[r]]).cell(r).cell(s.person_day_id).cell(blocks);
        index.end_row();
      }
    }
    cluster::write_cluster_stats(all_stats, stats_out);
    io::write_file(dir / "labels.csv", labels_out.str());
    io::write_file(dir / "sequence_index.csv", index_out.str());
    io::write_file(dir / "stats.csv", stats_out.str());
  }, digest);
  done_["cluster"] = digest;
  history_.push_back(st);
  note(std::string("stage cluster: ") + (st.cache_hit ? "cached" : "done"));
  return st;
}

// ---- distributions ----

StageStatus Pipeline::distributions() {
  if (!done_.count("cluster")) cluster();
  const auto& c = config_;
  const fs::path dir = out_ / "distributions";
  auto key = [&] { return hash_parts({"distributions/1", done_["ingest"], done_["cluster"],
                                      sub(c.canonical, {"distributions", "fleet"}).dump()}); };
  std::string digest;
  auto st = run_stage("distributions", dir, key, [&] {
    auto trips = diary::parse_diaries_file(out_ / "ingest" / "trips.csv").trips;
    auto table = io::read_table_file(out_ / "cluster" / "labels.csv");
    const auto cid = table.require_column("person_day_id");
    const auto ccl = table.require_column("cluster");
    std::map<std::string, int> label;
    for (const auto& row : table.rows) label[row[cid]] = static_cast<int>(*io::parse_int(row[ccl]));

    mobility::EstimateOptions eopt;
    eopt.n_max = c.n_max;
    std::map<mobility::CellKey, std::vector<diary::TripRecord>> groups;
    for (const auto& t : trips) {
      mobility::CellKey key{t.location_type, mobility::location_level, t.day_type, Ownership::private_car};
      if (t.day_type == DayType::weekday) {
        auto it = label.find(t.person_day_id);
        if (it == label.end()) continue;  // not in the clustered subsample
        key.cluster = it->second;
      }
      groups[key].push_back(t);
    }
    mobility::DistributionCatalog catalog;
    for (const auto& [key, g] : groups) catalog[key] = mobility::estimate_distributions(key, g, eopt);

    // Shared sets for every cell that switches under some uptake regime.
    std::set<power::FleetCell> switching;
    for (const auto& [u, cells] : c.fleet.uptake_cells) switching.insert(cells.begin(), cells.end());
    std::map<LocationType, double> location_cars;
    for (const auto& cell : switching) {
      mobility::CellKey pk{cell.location, cell.cluster, DayType::weekday, Ownership::private_car};
      auto it = catalog.find(pk);
      if (it == catalog.end() || it->second.empty())
        throw UserError("no private distributions for switching cell " + pk.file_stem());
      mobility::SubstitutionSpec sub_spec{c.fleet.substitution_rate, c.fleet.cell_cars(cell)};
      auto shared = mobility::derive_shared_distributions(it->second, sub_spec);
      catalog[shared.cell] = std::move(shared);
      location_cars[cell.location] += c.fleet.cell_cars(cell);
    }
    for (const auto& [loc, cars] : location_cars) {
      for (auto day : {DayType::saturday, DayType::sunday}) {
        mobility::CellKey pk{loc, mobility::location_level, day, Ownership::private_car};
        auto it = catalog.find(pk);
        if (it == catalog.end() || it->second.empty())
          throw UserError("no private distributions for " + pk.file_stem());
        auto shared = mobility::derive_shared_distributions(it->second, {c.fleet.substitution_rate, cars});
        catalog[shared.cell] = std::move(shared);
      }
    }
    mobility::save_catalog(catalog, dir / "catalog");

    std::ostringstream cells_out;
    io::TableWriter w(cells_out, {"cell", "person_days", "mean_trips"});
    for (const auto& [key, set] : catalog) {
      w.cell(key.file_stem()).cell(set.person_days).cell(set.mean_trips());
      w.end_row();
    }
    io::write_file(dir / "cells.csv", cells_out.str());
  }, digest);
  done_["distributions"] = digest;
  history_.push_back(st);
  note(std::string("stage distributions: ") + (st.cache_hit ? "cached" : "done"));
  return st;
}

// ---- synth ----

StageStatus Pipeline::synth() {
  if (!done_.count("distributions")) distributions();
  const auto& c = config_;
  const fs::path dir = out_ / "synth";
  auto key = [&] { return hash_parts({"synth/1", done_["distributions"],
                  sub(c.canonical, {"seed", "horizon_hours", "start_hour", "start_weekday", "profiles", "fleet"}).dump(),
                  file_hash_or_empty(c.resolve(c.temperature_file))}); };
  std::string digest;
  auto st = run_stage("synth", dir, key, [&] {
    auto catalog = mobility::load_catalog(out_ / "distributions" / "catalog");

    std::vector<ev::ProfileSpec> specs;
    auto add_cell = [&](const power::FleetCell& cell, Ownership own) {
      for (std::size_t n = 1; n <= c.profiles_per_cell; ++n) {
        ev::ProfileSpec s;
        char idx[16];
        std::snprintf(idx, sizeof idx, "%02zu", n);
        s.id = cell_name(cell) + "_" + std::string(to_string(own)) + "_" + idx;
        s.location = cell.location;
        s.cluster = cell.cluster;
        s.ownership = own;
        const bool large = own == Ownership::shared || c.large_battery_clusters.count(cell.cluster) > 0;
        s.vehicle.battery_kwh = large ? c.large_battery_kwh : c.battery_kwh;
        specs.push_back(s);
      }
    };
    std::set<power::FleetCell> switching;
    for (const auto& [u, cells] : c.fleet.uptake_cells) switching.insert(cells.begin(), cells.end());
    for (const auto& [cell, share] : c.fleet.cell_shares)
      if (share > 0.0) add_cell(cell, Ownership::private_car);
    for (const auto& cell : switching) add_cell(cell, Ownership::shared);

    power::FleetSpec base = c.fleet;
    base.uptake = power::Uptake::none;
    auto weights = power::fleet_allocation(base, specs, power::FleetRole::reference);
    for (std::size_t i = 0; i < specs.size(); ++i) specs[i].weight = weights[i];

    auto lookup = [&](const mobility::CellKey& k) {
      auto it = catalog.find(k);
      if (it == catalog.end() || it->second.empty())
        throw UserError("no distributions for cell " + k.file_stem());
      return &it->second;
    };
    std::vector<ev::DaySources> sources;
    for (const auto& s : specs) {
      ev::DaySources src;
      src.weekday = lookup({s.location, s.cluster, DayType::weekday, s.ownership});
      src.saturday = lookup({s.location, mobility::location_level, DayType::saturday, s.ownership});
      src.sunday = lookup({s.location, mobility::location_level, DayType::sunday, s.ownership});
      sources.push_back(src);
    }

    ev::SynthConfig sc;
    sc.horizon_hours = c.horizon_hours;
    sc.sampling.start_dow = c.start_weekday;
    sc.availability = c.availability;
    sc.start_hour_of_year = c.start_hour;
    sc.max_resamples = c.max_resamples;
    if (!c.temperature_file.empty()) {
      auto t = ev::read_hourly_series(c.resolve(c.temperature_file), c.temperature_column);
      if (t.size() == c.horizon_hours) {
        sc.temperature_c = t;
      } else if (t.size() >= c.start_hour + c.horizon_hours) {
        sc.temperature_c.assign(t.begin() + static_cast<std::ptrdiff_t>(c.start_hour),
                                t.begin() + static_cast<std::ptrdiff_t>(c.start_hour + c.horizon_hours));
      } else {
        throw UserError("temperature series has " + std::to_string(t.size()) + " hours; need the horizon or a full year");
      }
    }
    auto profiles = ev::synthesize_profiles(specs, sources, sc, mix_seed(c.seed, 2));

    io::write_file(dir / "manifest.csv", write_to_string([&](std::ostream& o) { ev::write_manifest(profiles, o); }));
    std::ostringstream warn_out;
    io::TableWriter warn(warn_out, {"profile_id", "warning"});
    for (const auto& p : profiles) {
      io::write_file(dir / "profiles" / (p.spec.id + ".csv"),
                     write_to_string([&](std::ostream& o) { ev::write_profile_series(p, o); }));
      for (const auto& w : p.warnings) {
        warn.cell(p.spec.id).cell(w);
        warn.end_row();
      }
    }
    io::write_file(dir / "warnings.csv", warn_out.str());
    io::write_file(dir / "hourly.json", profile_inputs_json(profiles));
    note("synth: " + std::to_string(profiles.size()) + " profiles");
  }, digest);
  done_["synth"] = digest;
  history_.push_back(st);
  note(std::string("stage synth: ") + (st.cache_hit ? "cached" : "done"));
  return st;
}

// ---- solve ----

namespace {

power::SystemSeries system_series(const Config& c) {
  if (c.series_file.empty()) return power::synthetic_system_series(c.horizon_hours, c.start_hour, c.series_seed);
  auto s = power::read_system_series(c.resolve(c.series_file));
  if (s.hours() == c.horizon_hours) return s;
  if (s.hours() < c.start_hour + c.horizon_hours)
    throw UserError("system series has " + std::to_string(s.hours()) + " hours; need the horizon or a full year");
  auto slice = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(c.start_hour),
                               v.begin() + static_cast<std::ptrdiff_t>(c.start_hour + c.horizon_hours));
  };
  power::SystemSeries out;
  out.base_load_mw = slice(s.base_load_mw);
  out.heat_pump_mw = slice(s.heat_pump_mw);
  for (const auto& [name, v] : s.availability) out.availability[name] = slice(v);
  return out;
}

}  // namespace

StageStatus Pipeline::solve_one(const RunSpec& run, const std::string& synth_key) {
  const auto& c = config_;
  const fs::path dir = out_ / "solve" / run.name;
  json spec{{"strategy", to_string(run.strategy)},
            {"uptake", to_string(run.uptake)},
            {"role", role_name(run.role)},
            {"hydrogen", run.hydrogen},
            {"shared_consumption_factor", run.shared_consumption_factor}};
  auto key = [&] { return hash_parts({"solve/1", synth_key,
                  sub(c.canonical, {"horizon_hours", "start_hour", "power", "fleet", "profiles"}).dump(), spec.dump(),
                  file_hash_or_empty(c.resolve(c.series_file))}); };
  std::string digest;
  auto st = run_stage("solve/" + run.name, dir, key, [&] {
    auto inputs = read_profile_inputs(io::read_file(out_ / "synth" / "hourly.json"));
    std::vector<ev::ProfileSpec> specs;
    for (const auto& p : inputs) specs.push_back(p.spec);
    auto fleet = c.fleet_for(run);
    auto weights = power::fleet_allocation(fleet, specs, run.role);

    power::ModelInput in;
    in.params = c.power_params();
    in.params.hydrogen.enabled = run.hydrogen;
    in.system = system_series(c);
    in.strategy = run.strategy;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (weights[i] > 0.0)
        in.bevs.push_back(inputs[i].bev(weights[i], c.uncontrolled_rule, run.shared_consumption_factor));

    auto model = power::build_model(in);
    if (c.export_mps) {
      std::ofstream f(dir / "model.mps");
      lp::export_mps(model.lp, f, lp::MpsNames::indexed);
      std::ostringstream names_out;
      io::TableWriter w(names_out, {"mps_name", "column"});
      auto mps_names = lp::mps_column_names(model.lp, lp::MpsNames::indexed);
      for (std::size_t j = 0; j < mps_names.size(); ++j) {
        w.cell(mps_names[j]).cell(model.lp.col_names[j]);
        w.end_row();
      }
      io::write_file(dir / "mps_columns.csv", names_out.str());
    }
    auto report = power::solve(model, in);
    io::write_file(dir / "report.json", report.to_json() + "\n");
    std::string log_text;
    for (const auto& l : report.log) log_text += l + "\n";
    io::write_file(dir / "solver.log", log_text);
    if (report.status != lp::Status::optimal)
      throw UserError("run " + run.name + ": LP " + lp::to_string(report.status) + " after " +
                      std::to_string(report.iterations) + " iterations (see solver.log)");
    io::write_file(dir / "capacity.csv", write_to_string([&](std::ostream& o) { power::write_capacity_table(report, o); }));
    io::write_file(dir / "hourly.csv", write_to_string([&](std::ostream& o) { power::write_hourly_table(report, o); }));
    note("solve " + run.name + ": " + std::to_string(in.bevs.size()) + " profiles, " +
         std::to_string(model.lp.num_rows()) + " rows, " + std::to_string(model.lp.num_cols()) + " columns, " +
         std::to_string(report.iterations) + " iterations, annual cost " + io::format_fixed(report.annual_cost, 0));
  }, digest);
  st.key = digest;
  return st;
}

std::vector<StageStatus> Pipeline::solve(const std::vector<std::string>& names) {
  if (!done_.count("synth")) synth();
  std::vector<const RunSpec*> todo;
  if (names.empty())
    for (const auto& r : config_.runs) todo.push_back(&r);
  else
    for (const auto& n : names) todo.push_back(&config_.run(n));
  const std::string synth_key = done_["synth"];
  std::vector<StageStatus> out(todo.size());
  std::vector<std::exception_ptr> errors(todo.size());
  const long n = static_cast<long>(todo.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = solve_one(*todo[static_cast<std::size_t>(i)], synth_key);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t i = 0; i < todo.size(); ++i) {
    done_["solve/" + todo[i]->name] = out[i].key;
    history_.push_back(out[i]);
    note("stage " + out[i].name + ": " + (out[i].cache_hit ? "cached" : "done"));
  }
  return out;
}

// ---- compare ----

StageStatus Pipeline::compare_one(const ComparisonSpec& cmp) {
  const auto& c = config_;
  for (const auto& name : {cmp.scenario, cmp.reference})
    if (!done_.count("solve/" + name)) solve({name});
  const fs::path dir = out_ / "compare" / cmp.name;
  auto key = [&] { return hash_parts({"compare/1", done_["solve/" + cmp.scenario], done_["solve/" + cmp.reference],
                                      sub(c.canonical, {"fleet", "start_hour"}).dump()}); };
  std::string digest;
  auto st = run_stage("compare/" + cmp.name, dir, key, [&] {
    auto scen = power::SolutionReport::from_json(io::read_file(out_ / "solve" / cmp.scenario / "report.json"));
    auto ref = power::SolutionReport::from_json(io::read_file(out_ / "solve" / cmp.reference / "report.json"));
    const double substituted = c.fleet_for(c.run(cmp.scenario)).substituted_cars();
    auto delta = power::compute_kpis(scen, ref, substituted);
    io::write_file(dir / "delta.json", delta.to_json() + "\n");

    std::ostringstream costs;
    {
      io::TableWriter w(costs, {"run", "role", "annual_cost_eur", "renewable_share"});
      w.cell(cmp.reference).cell("reference").cell(ref.annual_cost).cell(ref.renewable_share);
      w.end_row();
      w.cell(cmp.scenario).cell("scenario").cell(scen.annual_cost).cell(scen.renewable_share);
      w.end_row();
    }
    io::write_file(dir / "costs.csv", costs.str());

    auto delta_table = [&](const std::map<std::string, double>& r, const std::map<std::string, double>& s,
                           const char* unit) {
      std::ostringstream o;
      io::TableWriter w(o, {"technology", std::string("reference_") + unit, std::string("scenario_") + unit,
                            std::string("delta_") + unit});
      std::set<std::string> keys;
      for (const auto& [k, v] : r) keys.insert(k);
      for (const auto& [k, v] : s) keys.insert(k);
      for (const auto& k : keys) {
        const double a = r.count(k) ? r.at(k) : 0.0;
        const double b = s.count(k) ? s.at(k) : 0.0;
        w.cell(k).cell(a).cell(b).cell(b - a);
        w.end_row();
      }
      return o.str();
    };
    auto caps = [](const power::SolutionReport& r) {
      auto m = r.capacity_mw;
      for (const auto& [k, v] : r.storage_discharge_mw) m[k + "_discharge"] = v;
      for (const auto& [k, v] : r.storage_charge_mw) m[k + "_charge"] = v;
      if (r.electrolysis_mw > 0.0) m["electrolysis"] = r.electrolysis_mw;
      return m;
    };
    io::write_file(dir / "capacity_delta.csv", delta_table(caps(ref), caps(scen), "mw"));
    io::write_file(dir / "generation_delta.csv", delta_table(ref.generation_mwh, scen.generation_mwh, "mwh"));

    auto dispatch = [&](std::size_t t0, std::size_t t1) {
      std::ostringstream o;
      io::TableWriter w(o, {"hour", "hour_of_year", "residual_load_mw", "bev_charge_private_mw", "bev_charge_shared_mw",
                            "bev_discharge_private_mw", "bev_discharge_shared_mw", "reference_bev_charge_mw",
                            "reference_bev_discharge_mw", "price_eur_per_mwh"});
      for (std::size_t t = t0; t < t1; ++t) {
        w.cell(t)
            .cell(c.start_hour + t)
            .cell(scen.residual_load_mw[t])
            .cell(scen.bev_charge_private_mw[t])
            .cell(scen.bev_charge_shared_mw[t])
            .cell(scen.bev_discharge_private_mw[t])
            .cell(scen.bev_discharge_shared_mw[t])
            .cell(ref.bev_charge_private_mw[t] + ref.bev_charge_shared_mw[t])
            .cell(ref.bev_discharge_private_mw[t] + ref.bev_discharge_shared_mw[t])
            .cell(scen.price[t]);
        w.end_row();
      }
      return o.str();
    };
    io::write_file(dir / "dispatch.csv", dispatch(0, scen.hours));
    // Winter and summer weeks when the horizon covers them.
    for (auto [label, first] : {std::pair{"winter", window_winter_hour}, std::pair{"summer", window_summer_hour}}) {
      if (first < c.start_hour || first + 168 > c.start_hour + scen.hours) continue;
      io::write_file(dir / (std::string("dispatch_") + label + ".csv"),
                     dispatch(first - c.start_hour, first - c.start_hour + 168));
    }

    std::ostringstream soc;
    {
      io::TableWriter w(soc, {"hour", "hour_of_year", "reference_soc_mwh", "scenario_soc_mwh"});
      for (std::size_t t = 0; t < scen.hours; ++t) {
        w.cell(t).cell(c.start_hour + t).cell(ref.bev_soc_mwh[t]).cell(scen.bev_soc_mwh[t]);
        w.end_row();
      }
    }
    io::write_file(dir / "soc.csv", soc.str());
    note("compare " + cmp.name + ": delta " + io::format_fixed(delta.delta_cost, 0) + " EUR/a" +
         (delta.per_car_defined ? ", " + io::format_fixed(delta.delta_per_car, 2) + " EUR per substituted car" : ""));
  }, digest);
  st.key = digest;
  done_["compare/" + cmp.name] = digest;
  history_.push_back(st);
  note("stage " + st.name + ": " + (st.cache_hit ? "cached" : "done"));
  return st;
}

std::vector<StageStatus> Pipeline::compare(const std::vector<std::string>& names) {
  std::vector<const ComparisonSpec*> todo;
  for (const auto& cmp : config_.comparisons)
    if (names.empty() || std::find(names.begin(), names.end(), cmp.name) != names.end()) todo.push_back(&cmp);
  for (const auto& n : names)
    if (std::none_of(todo.begin(), todo.end(), [&](const ComparisonSpec* p) { return p->name == n; }))
      throw UserError("no comparison named '" + n + "'");
  // Solve everything needed first so independent solves can run together.
  std::vector<std::string> needed;
  for (const auto* cmp : todo)
    for (const auto& r : {cmp->scenario, cmp->reference})
      if (!done_.count("solve/" + r) && std::find(needed.begin(), needed.end(), r) == needed.end()) needed.push_back(r);
  if (!needed.empty()) solve(needed);
  std::vector<StageStatus> out;
  for (const auto* cmp : todo) out.push_back(compare_one(*cmp));
  return out;
}

void Pipeline::write_summary() {
  json runs = json::object();
  for (const auto& r : config_.runs) {
    const fs::path f = out_ / "solve" / r.name / "report.json";
    if (!fs::exists(f)) continue;
    auto rep = power::SolutionReport::from_json(io::read_file(f));
    runs[r.name] = {{"strategy", to_string(r.strategy)},
                    {"uptake", to_string(r.uptake)},
                    {"hydrogen", r.hydrogen},
                    {"status", lp::to_string(rep.status)},
                    {"annual_cost_eur", rep.annual_cost},
                    {"renewable_share", rep.renewable_share},
                    {"max_balance_residual_mwh", rep.max_balance_residual}};
  }
  json cmps = json::object();
  for (const auto& cmp : config_.comparisons) {
    const fs::path f = out_ / "compare" / cmp.name / "delta.json";
    if (!fs::exists(f)) continue;
    json d = json::parse(io::read_file(f));
    cmps[cmp.name] = {{"scenario", cmp.scenario},
                      {"reference", cmp.reference},
                      {"delta_cost_eur_per_year", d["delta_cost_eur_per_year"]},
                      {"substituted_cars", d["substituted_cars"]},
                      {"delta_eur_per_substituted_car_year", d["delta_eur_per_substituted_car_year"]}};
  }
  json stages = json::array();
  for (const auto& s : history_) stages.push_back({{"stage", s.name}, {"key", s.key}});
  json inputs = json::object();
  for (const auto& [label, path] : {std::pair{"diaries", config_.diary_input}, std::pair{"mapping", config_.diary_mapping},
                                    std::pair{"temperature", config_.temperature_file},
                                    std::pair{"system_series", config_.series_file}})
    if (!path.empty()) inputs[label] = {{"path", path.generic_string()}, {"sha256", io::sha256_file(config_.resolve(path))}};
  json j{{"schema", "carshare.summary/1"},
         {"config_sha256", io::sha256_hex(config_.canonical)},
         {"inputs", inputs},
         {"stages", stages},
         {"runs", runs},
         {"comparisons", cmps}};
  io::write_file(out_ / "summary.json", j.dump(1) + "\n");
}

void Pipeline::run_all() {
  ingest();
  cluster();
  distributions();
  synth();
  solve();
  compare();
  write_summary();
}

}  // namespace carshare::pipeline
