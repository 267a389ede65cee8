#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "carshare/pipeline.hpp"
#include "json.hpp"

using namespace carshare;
using namespace carshare::pipeline;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("carshare_test_" + name);
  fs::remove_all(p);
  return p;
}

// One day, few diaries and profiles: every stage in about a second.
json small_config() {
  return json::parse(R"({
    "seed": 11,
    "horizon_hours": 24,
    "start_hour": 4000,
    "diaries": {"generator": {"person_days": {"metropolis": 160, "rural": 160}}},
    "clustering": {"k": 2},
    "profiles": {"per_cell": 2},
    "fleet": {
      "total_bevs": 1000000,
      "cells": [
        {"location": "metropolis", "cluster": 1, "share": 0.3},
        {"location": "metropolis", "cluster": 2, "share": 0.3},
        {"location": "rural", "cluster": 1, "share": 0.2},
        {"location": "rural", "cluster": 2, "share": 0.2}
      ],
      "uptake": {"high": [{"location": "metropolis", "cluster": 1}, {"location": "metropolis", "cluster": 2}]}
    },
    "runs": [
      {"name": "ref", "strategy": "smart"},
      {"name": "same", "strategy": "smart", "role": "scenario"},
      {"name": "high", "strategy": "smart", "uptake": "high"},
      {"name": "high90", "strategy": "smart", "uptake": "high", "shared_consumption_factor": 0.9}
    ],
    "comparisons": [
      {"name": "same", "scenario": "same", "reference": "ref"},
      {"name": "high", "scenario": "high", "reference": "ref"},
      {"name": "high90", "scenario": "high90", "reference": "ref"}
    ]
  })");
}

Config parse(const json& j) { return Config::from_json(j.dump()); }

std::map<std::string, std::string> tree_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::sha256_file(e.path());
  return out;
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

}  // namespace

TEST(Config, DemoConfigParses) {
  auto c = Config::from_json(demo_config_json());
  EXPECT_EQ(c.horizon_hours, 168u);
  EXPECT_EQ(c.runs.size(), 10u);
  EXPECT_EQ(c.comparisons.size(), 6u);
  EXPECT_FALSE(c.canonical.empty());
}

TEST(Config, UnknownKeysAreRejected) {
  auto j = small_config();
  j["profile"] = json::object();
  EXPECT_THROW(parse(j), UserError);
  j = small_config();
  j["profiles"]["battery"] = 50;
  EXPECT_THROW(parse(j), UserError);
}

TEST(Config, DefaultRunsAndComparisons) {
  auto j = small_config();
  j.erase("runs");
  j.erase("comparisons");
  auto c = parse(j);
  EXPECT_EQ(c.runs.size(), 9u);
  ASSERT_EQ(c.comparisons.size(), 6u);
  for (const auto& cmp : c.comparisons) {
    const auto& s = c.run(cmp.scenario);
    const auto& r = c.run(cmp.reference);
    EXPECT_EQ(s.strategy, r.strategy);
    EXPECT_EQ(r.uptake, power::Uptake::none);
  }
}

TEST(Config, Validation) {
  auto j = small_config();
  j["runs"][1]["name"] = "ref";
  EXPECT_THROW(parse(j), UserError);

  j = small_config();
  j["runs"][3]["shared_consumption_factor"] = 1.2;
  EXPECT_THROW(parse(j), UserError);

  j = small_config();
  j["runs"][2]["strategy"] = "bidirectional";
  EXPECT_THROW(parse(j), UserError);  // compared against a smart reference

  j = small_config();
  j["runs"][0]["name"] = "../escape";
  EXPECT_THROW(parse(j), UserError);

  j = small_config();
  j["horizon_hours"] = 30;
  EXPECT_THROW(parse(j), UserError);

  j = small_config();
  j["start_hour"] = 8750;
  EXPECT_THROW(parse(j), UserError);
}

TEST(Config, OverridesEnterTheCanonicalForm) {
  auto a = Config::from_json(small_config().dump(), {}, Overrides{7, 48});
  EXPECT_EQ(a.seed, 7u);
  EXPECT_EQ(a.horizon_hours, 48u);
  auto b = parse(small_config());
  EXPECT_NE(a.canonical, b.canonical);
}

TEST(ProfileInputs, SharedConsumptionFactorScalesSharedProfilesOnly) {
  ProfileInputs p;
  p.spec.id = "x";
  p.spec.vehicle.battery_kwh = 100.0;
  p.consumption_kwh = {10.0, 0.0};
  p.rating_kw = {0.0, 20.0};
  p.balanced_kwh = {0.0, 10.0};
  p.immediate_kwh = {0.0, 10.0};
  p.balanced_initial_soc_kwh = 50.0;
  auto priv = p.bev(1.0, ev::ChargingRule::balanced, 0.9);
  EXPECT_EQ(priv.consumption_kwh, p.consumption_kwh);
  p.spec.ownership = Ownership::shared;
  auto shared = p.bev(1.0, ev::ChargingRule::balanced, 0.9);
  EXPECT_DOUBLE_EQ(shared.consumption_kwh[0], 9.0);
  EXPECT_DOUBLE_EQ(shared.uncontrolled_kwh[1], 9.0);
  EXPECT_DOUBLE_EQ(shared.uncontrolled_initial_soc_kwh, 45.0);
}

class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("pipeline");
    Pipeline p(parse(small_config()), dir_);
    p.run_all();
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static fs::path dir_;
};
fs::path PipelineRun::dir_;

TEST_F(PipelineRun, WritesEveryStage) {
  for (const char* f : {"config.json", "summary.json", "ingest/trips.csv", "ingest/sequences.csv",
                        "cluster/labels.csv", "cluster/metropolis_merges.csv", "cluster/sequence_index.csv",
                        "distributions/cells.csv", "synth/manifest.csv", "synth/hourly.json",
                        "solve/ref/report.json", "solve/ref/capacity.csv", "solve/ref/hourly.csv",
                        "compare/high/delta.json", "compare/high/costs.csv", "compare/high/capacity_delta.csv",
                        "compare/high/generation_delta.csv", "compare/high/dispatch.csv", "compare/high/soc.csv"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  EXPECT_TRUE(fs::exists(dir_ / "distributions/catalog/metropolis_c1_weekday_shared.json"));
}

TEST_F(PipelineRun, RerunHitsEveryCacheAndKeepsBytes) {
  auto before = tree_hashes(dir_);
  Pipeline p(parse(small_config()), dir_);
  p.run_all();
  for (const auto& s : p.history()) EXPECT_TRUE(s.cache_hit) << s.name;
  EXPECT_EQ(tree_hashes(dir_), before);
}

TEST_F(PipelineRun, UptakeNoneGivesZeroDeltas) {
  auto d = read_json(dir_ / "compare/same/delta.json");
  EXPECT_EQ(d["delta_cost_eur_per_year"].get<double>(), 0.0);
  for (const auto& [k, v] : d["capacity_delta_mw"].items()) EXPECT_EQ(v.get<double>(), 0.0) << k;
}

TEST_F(PipelineRun, LowerSharedConsumptionLowersTheDelta) {
  const double base = read_json(dir_ / "compare/high/delta.json")["delta_cost_eur_per_year"].get<double>();
  const double low = read_json(dir_ / "compare/high90/delta.json")["delta_cost_eur_per_year"].get<double>();
  EXPECT_LT(low, base);
}

TEST_F(PipelineRun, ChangedProfilesReuseUpstreamStages) {
  auto copy = scratch("pipeline_copy");
  fs::copy(dir_, copy, fs::copy_options::recursive);
  auto j = small_config();
  j["profiles"]["per_cell"] = 3;
  Pipeline p(parse(j), copy);
  p.synth();
  std::map<std::string, bool> hit;
  for (const auto& s : p.history()) hit[s.name] = s.cache_hit;
  EXPECT_TRUE(hit.at("ingest"));
  EXPECT_TRUE(hit.at("cluster"));
  EXPECT_TRUE(hit.at("distributions"));
  EXPECT_FALSE(hit.at("synth"));
  fs::remove_all(copy);
}

TEST_F(PipelineRun, TamperedOutputIsRebuilt) {
  auto copy = scratch("pipeline_tamper");
  fs::copy(dir_, copy, fs::copy_options::recursive);
  const auto original = io::read_file(copy / "cluster/labels.csv");
  io::write_file(copy / "cluster/labels.csv", "person_day_id,location,cluster\n");
  Pipeline p(parse(small_config()), copy);
  p.cluster();
  EXPECT_FALSE(p.history().back().cache_hit);
  EXPECT_EQ(io::read_file(copy / "cluster/labels.csv"), original);
  fs::remove_all(copy);
}

TEST(Pipeline, StageErrorsNameStageAndDirectory) {
  auto dir = scratch("pipeline_error");
  auto j = small_config();
  j["diaries"] = {{"input", (dir / "missing.csv").string()}};
  Pipeline p(parse(j), dir);
  try {
    p.ingest();
    FAIL();
  } catch (const UserError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("stage ingest"), std::string::npos) << msg;
    EXPECT_NE(msg.find((dir / "ingest").string()), std::string::npos) << msg;
  }
  fs::remove_all(dir);
}
