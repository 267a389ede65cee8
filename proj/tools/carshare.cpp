#include <omp.h>

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carshare/error.hpp"
#include "carshare/pipeline.hpp"

namespace fs = std::filesystem;
using carshare::pipeline::Config;
using carshare::pipeline::Pipeline;
using carshare::pipeline::StageStatus;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  int jobs = 0;
  std::string out = "run";
  bool quiet = false;
};

void report(const std::vector<StageStatus>& stages) {
  for (const auto& s : stages)
    std::cout << s.name << '\t' << (s.cache_hit ? "cached" : "done") << '\t' << s.dir.string() << '\n';
}

int run(const std::string& verb, const Globals& g, const std::vector<std::string>& names) {
  if (g.jobs > 0) omp_set_num_threads(g.jobs);
  carshare::pipeline::Overrides ov{g.seed, g.horizon};
  Config config = g.config.empty()
                      ? Config::from_json(carshare::pipeline::demo_config_json(), fs::current_path(), ov)
                      : Config::load(g.config, ov);
  if (g.config.empty() && verb != "demo") std::cerr << "no --config given; using the built-in demo configuration\n";
  Pipeline p(std::move(config), g.out, g.quiet ? nullptr : &std::cerr);

  if (verb == "ingest") {
    report({p.ingest()});
  } else if (verb == "cluster") {
    p.cluster();
    report(p.history());
  } else if (verb == "distributions") {
    p.distributions();
    report(p.history());
  } else if (verb == "synth") {
    p.synth();
    report(p.history());
  } else if (verb == "solve") {
    p.solve(names);
    p.write_summary();
    report(p.history());
  } else if (verb == "compare") {
    p.compare(names);
    p.write_summary();
    report(p.history());
  } else {
    p.run_all();
    report(p.history());
  }
  std::cout << "output: " << fs::absolute(g.out).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carsharing and battery-electric vehicles in a power-sector model"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the configuration)");
  auto* horizon_opt = app.add_option("--horizon", horizon, "Modelled hours, a multiple of 24");
  app.add_option("--config", g.config, "Scenario configuration (JSON); default: built-in demo")
      ->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "OpenMP threads (default: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Run directory")->capture_default_str();
  app.add_flag("-q,--quiet", g.quiet, "No progress log on stderr");
  for (auto* o : {seed_opt, horizon_opt}) o->configurable(false);

  std::vector<std::string> names;
  std::string verb;
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"ingest", "Parse or generate travel diaries, filter trips, build day sequences"},
      {"cluster", "Cluster weekday sequences per location type"},
      {"distributions", "Estimate trip distributions per cell, derive shared sets"},
      {"synth", "Synthesize vehicle profiles"},
      {"solve", "Build and solve the power-sector LP for runs (default: all)"},
      {"compare", "Compare scenario runs with their references (default: all)"},
      {"demo", "Run every stage and write summary.json"}};
  for (const auto& [name, help] : verbs) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&verb, name = name] { verb = name; });
    if (name == "solve") sub->add_option("runs", names, "Run names");
    if (name == "compare") sub->add_option("comparisons", names, "Comparison names");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (seed_opt->count()) g.seed = seed;
  if (horizon_opt->count()) g.horizon = horizon;

  try {
    return run(verb, g, names);
  } catch (const carshare::UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
