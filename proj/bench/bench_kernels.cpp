// Serial vs OpenMP kernels: pairwise edit distances and profile synthesis.

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "carshare/cluster.hpp"
#include "carshare/ev.hpp"

using namespace carshare;

namespace {

std::vector<std::vector<std::uint8_t>> sequences(std::size_t n) {
  std::mt19937_64 g(1);
  std::vector<std::vector<std::uint8_t>> out(n);
  for (auto& s : out) {
    s.resize(20 + g() % 60);
    for (auto& c : s) c = static_cast<std::uint8_t>(g() % 4);
  }
  return out;
}

void distance_matrix(benchmark::State& state, cluster::Exec exec) {
  const auto seqs = sequences(static_cast<std::size_t>(state.range(0)));
  cluster::DistanceOptions opt;
  opt.exec = exec;
  for (auto _ : state) benchmark::DoNotOptimize(cluster::distance_matrix(seqs, opt));
  const auto n = static_cast<double>(seqs.size());
  state.counters["pairs/s"] = benchmark::Counter(n * (n - 1) / 2, benchmark::Counter::kIsIterationInvariantRate);
}

int hhmm(int h, int m) { return (h * 60 + m) / slot_minutes; }

mobility::DistributionSet commuter() {
  mobility::DistributionSet s;
  s.person_days = 10.0;
  s.p_ntrips.assign(49, 0.0);
  s.p_ntrips[2] = 0.6;
  s.p_ntrips[3] = 0.4;
  auto& dest = s.p_destination[{mobility::any, mobility::any}];
  dest.count = 10.0;
  dest.p = {0.4, 0.3, 0.2, 0.1};
  for (auto d : all_destinations) {
    auto& dep = s.p_departure[{d, mobility::any, mobility::any}];
    dep.count = 10.0;
    for (int k = hhmm(6, 0); k < hhmm(20, 0); ++k) dep.p[static_cast<std::size_t>(k)] = 1.0 / (hhmm(20, 0) - hhmm(6, 0));
    auto& dd = s.p_dur_dist[{d, mobility::any}];
    dd.count = 10.0;
    dd.bins = {{mobility::duration_bin(25.0), mobility::distance_bin(15.0), 1.0, 25.0, 15.0}};
  }
  return s;
}

void synthesize(benchmark::State& state, cluster::Exec exec) {
  const auto set = commuter();
  std::vector<ev::ProfileSpec> specs;
  std::vector<ev::DaySources> sources;
  for (int i = 0; i < state.range(0); ++i) {
    ev::ProfileSpec p;
    p.id = "bench_" + std::to_string(i);
    p.weight = 1.0;
    specs.push_back(p);
    sources.push_back({&set, &set, &set});
  }
  ev::SynthConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ev::synthesize_profiles(specs, sources, cfg, 7, exec));
  state.counters["profiles/s"] =
      benchmark::Counter(static_cast<double>(specs.size()), benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

BENCHMARK_CAPTURE(distance_matrix, serial, cluster::Exec::serial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(distance_matrix, parallel, cluster::Exec::parallel)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(synthesize, serial, cluster::Exec::serial)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(synthesize, parallel, cluster::Exec::parallel)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
