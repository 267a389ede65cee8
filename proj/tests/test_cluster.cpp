#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "carshare/cluster.hpp"
#include "carshare/error.hpp"
#include "cluster_oracle.hpp"

using namespace carshare;
using namespace carshare::cluster;

namespace {

std::vector<std::uint8_t> random_seq(std::mt19937_64& g, std::size_t max_len, int alphabet = 2) {
  std::size_t len = g() % (max_len + 1);
  std::vector<std::uint8_t> s(len);
  for (auto& c : s) c = static_cast<std::uint8_t>(g() % static_cast<unsigned>(alphabet));
  return s;
}

// Day-like sequence: mostly idle with a few runs of movement.
std::vector<std::uint8_t> day_like(std::mt19937_64& g) {
  std::vector<std::uint8_t> s(slots_per_day, 0);
  const int runs = static_cast<int>(g() % 5);
  for (int r = 0; r < runs; ++r) {
    const auto start = g() % 270;
    const auto len = 1 + g() % 15;
    for (std::size_t b = start; b < std::min<std::size_t>(slots_per_day, start + len); ++b) s[b] = 1;
  }
  return s;
}

DistanceMatrix random_matrix(std::mt19937_64& g, std::size_t n) {
  DistanceMatrix d(n);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (auto& v : d.condensed()) v = u(g);
  return d;
}

DistanceMatrix euclidean_matrix(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> z;
  std::vector<std::array<double, 3>> p(n);
  for (auto& x : p) x = {z(g), z(g), z(g)};
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (p[i][k] - p[j][k]) * (p[i][k] - p[j][k]);
      d.set(i, j, std::sqrt(s));
    }
  return d;
}

void expect_same_tree(const std::vector<oracle::OracleMerge>& got,
                      const std::vector<oracle::OracleMerge>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t s = 0; s < got.size(); ++s) {
    EXPECT_EQ(got[s].a, want[s].a) << "merge " << s;
    EXPECT_EQ(got[s].b, want[s].b) << "merge " << s;
    EXPECT_NEAR(got[s].height, want[s].height, 1e-9 * (1.0 + want[s].height)) << "merge " << s;
  }
}

}  // namespace

TEST(Levenshtein, Basics) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("flaw", "lawn"), 2u);
  EXPECT_EQ(levenshtein("same", "same"), 0u);
}

TEST(Levenshtein, DaySequenceSubstitutions) {
  diary::DaySequence a, b;
  a.blocks.fill(diary::BlockState::idle);
  b = a;
  for (int i = 96; i <= 101; ++i) b.blocks[i] = diary::BlockState::on_move;
  EXPECT_EQ(levenshtein(a, b), 6u);
  EXPECT_EQ(levenshtein(a, a), 0u);
}

TEST(Levenshtein, MatchesFullDp) {
  std::mt19937_64 g(11);
  for (int t = 0; t < 2000; ++t) {
    const int alphabet = t % 3 == 0 ? 4 : 2;
    auto a = random_seq(g, 50, alphabet), b = random_seq(g, 50, alphabet);
    ASSERT_EQ(levenshtein(a, b), oracle::full_dp(a, b)) << "trial " << t;
  }
  for (int t = 0; t < 100; ++t) {
    auto a = day_like(g), b = day_like(g);
    ASSERT_EQ(levenshtein(a, b), oracle::full_dp(a, b)) << "day trial " << t;
  }
}

TEST(Levenshtein, MetricAxioms) {
  std::mt19937_64 g(5);
  for (int t = 0; t < 200; ++t) {
    auto a = random_seq(g, 30), b = random_seq(g, 30), c = random_seq(g, 30);
    EXPECT_EQ(levenshtein(a, b), levenshtein(b, a));
    EXPECT_EQ(levenshtein(a, b) == 0, a == b);
    EXPECT_LE(levenshtein(a, c), levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST(DistanceMatrix, ParallelMatchesSerialAndOracle) {
  std::mt19937_64 g(3);
  std::vector<std::vector<std::uint8_t>> seqs;
  for (int i = 0; i < 10; ++i) seqs.push_back(day_like(g));
  auto par = distance_matrix(seqs, {Exec::parallel});
  auto ser = distance_matrix(seqs, {Exec::serial});
  EXPECT_EQ(par, ser);
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (std::size_t j = 0; j < seqs.size(); ++j)
      EXPECT_EQ(par(i, j), static_cast<double>(oracle::full_dp(seqs[i], seqs[j])));
}

TEST(DistanceMatrix, SmallCasesAndLimits) {
  std::vector<std::vector<std::uint8_t>> same(3, std::vector<std::uint8_t>(20, 1));
  auto zero = distance_matrix(same);
  for (double v : zero.condensed()) EXPECT_EQ(v, 0.0);
  std::vector<std::vector<std::uint8_t>> two{{0, 1, 1}, {1, 1}};
  auto d = distance_matrix(two);
  ASSERT_EQ(d.condensed().size(), 1u);
  EXPECT_EQ(d(0, 1), 1.0);
  EXPECT_THROW(distance_matrix(std::vector<std::vector<std::uint8_t>>(1)), UserError);
  DistanceOptions tight;
  tight.memory_limit_bytes = 10;
  EXPECT_THROW(distance_matrix(two, tight), UserError);
}

TEST(DistanceMatrix, BinaryRoundTripAndLayout) {
  std::mt19937_64 g(1);
  auto d = random_matrix(g, 6);
  std::stringstream ss;
  write_distance_matrix(d, ss);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 8u + 15u * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "CSDM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 6);
  EXPECT_EQ(read_distance_matrix(ss), d);
  std::istringstream bad("XXXX");
  EXPECT_THROW(read_distance_matrix(bad), UserError);
}

TEST(Ward, TwoLeaves) {
  DistanceMatrix d(2);
  d.set(0, 1, 7.0);
  auto dg = hac_ward(d);
  ASSERT_EQ(dg.merges.size(), 1u);
  EXPECT_DOUBLE_EQ(dg.merges[0].height, 7.0);
  EXPECT_EQ(dg.merges[0].size, 2u);
}

TEST(Ward, MatchesExhaustiveOracle) {
  std::mt19937_64 g(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + g() % 7;
    auto d = t % 2 ? random_matrix(g, n) : euclidean_matrix(g, n);
    expect_same_tree(oracle::leaf_sets(hac_ward(d)), oracle::exhaustive_ward(d));
    WardOptions raw;
    raw.squared = false;
    expect_same_tree(oracle::leaf_sets(hac_ward(d, raw)), oracle::exhaustive_ward(d, false));
  }
}

TEST(Ward, EuclideanHeightsMonotone) {
  std::mt19937_64 g(8);
  for (int t = 0; t < 20; ++t) EXPECT_TRUE(hac_ward(euclidean_matrix(g, 30)).monotone());
}

TEST(Ward, TwoSeparatedGroups) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  DistanceMatrix d(8);
  // Interleaved membership so slot order does not give the answer away.
  auto group = [](std::size_t i) { return i % 2; };
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) d.set(i, j, group(i) == group(j) ? u(g) : 100.0 * u(g));
  auto dg = hac_ward(d);
  auto sets = oracle::leaf_sets(dg);
  for (std::size_t s = 0; s < 6; ++s) {
    std::set<std::size_t> g0;
    for (auto x : sets[s].a) g0.insert(group(x));
    for (auto x : sets[s].b) g0.insert(group(x));
    EXPECT_EQ(g0.size(), 1u) << "merge " << s << " crosses groups";
  }
  auto labels = cut_dendrogram(dg, 2);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(labels[i], labels[group(i)]);
  EXPECT_NE(labels[0], labels[1]);
}

TEST(Ward, PermutationInvariant) {
  std::mt19937_64 g(13);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 12;
    auto d = euclidean_matrix(g, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), g);
    DistanceMatrix p(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) p.set(i, j, d(perm[i], perm[j]));
    auto a = oracle::leaf_sets(hac_ward(d));
    auto b = oracle::leaf_sets(hac_ward(p));
    std::multiset<std::pair<std::set<std::size_t>, long long>> sa, sb;
    for (const auto& m : a) {
      auto u = m.a;
      u.insert(m.b.begin(), m.b.end());
      sa.insert({u, std::llround(m.height * 1e8)});
    }
    for (const auto& m : b) {
      std::set<std::size_t> u;
      for (auto x : m.a) u.insert(perm[x]);
      for (auto x : m.b) u.insert(perm[x]);
      sb.insert({u, std::llround(m.height * 1e8)});
    }
    EXPECT_EQ(sa, sb);
  }
}

TEST(Cut, EdgeCountsAndRefinement) {
  std::mt19937_64 g(17);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + g() % 7;
    auto dg = hac_ward(random_matrix(g, n));
    auto all = cut_dendrogram(dg, n);
    std::set<int> distinct(all.begin(), all.end());
    EXPECT_EQ(distinct.size(), n);
    auto one = cut_dendrogram(dg, 1);
    EXPECT_TRUE(std::all_of(one.begin(), one.end(), [](int l) { return l == 1; }));
    for (std::size_t k = 2; k <= n; ++k) {
      auto fine = cut_dendrogram(dg, k), coarse = cut_dendrogram(dg, k - 1);
      EXPECT_EQ(std::set<int>(fine.begin(), fine.end()).size(), k);
      std::map<int, int> parent;
      for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = parent.try_emplace(fine[i], coarse[i]);
        EXPECT_EQ(it->second, coarse[i]) << "k=" << k;
      }
    }
  }
  auto dg = hac_ward(random_matrix(g, 4));
  EXPECT_THROW(cut_dendrogram(dg, 0), UserError);
  EXPECT_THROW(cut_dendrogram(dg, 5), UserError);
}

TEST(Cut, LabelsOrderedByDailyDistance) {
  DistanceMatrix d(4);
  d.set(0, 1, 1.0);
  d.set(2, 3, 1.0);
  d.set(0, 2, 50.0);
  d.set(0, 3, 50.0);
  d.set(1, 2, 50.0);
  d.set(1, 3, 50.0);
  auto dg = hac_ward(d);
  std::vector<double> km{5.0, 7.0, 40.0, 60.0};
  auto labels = cut_dendrogram(dg, 2, km);
  EXPECT_EQ(labels, (std::vector<int>{2, 2, 1, 1}));
  EXPECT_EQ(cut_dendrogram(dg, 2), (std::vector<int>{1, 1, 2, 2}));
}

TEST(Stats, SingleTripCluster) {
  diary::TripRecord t;
  t.person_day_id = "p";
  t.departure = 100;
  t.arrival = 120;
  t.duration_min = 20;
  t.distance_km = 10.0;
  auto seqs = diary::build_sequences({t});
  auto stats = cluster_stats(LocationType::rural, 2, {1}, seqs, {t});
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].n_sequences, 1u);
  EXPECT_DOUBLE_EQ(*stats[0].mean_daily_distance_km, 10.0);
  EXPECT_DOUBLE_EQ(*stats[0].mean_trip_distance_km, 10.0);
  EXPECT_DOUBLE_EQ(*stats[0].mean_trip_duration_min, 20.0);
  EXPECT_EQ(stats[1].n_sequences, 0u);
  EXPECT_FALSE(stats[1].mean_daily_distance_km.has_value());
}

TEST(Stats, DailyAtLeastTripDistance) {
  diary::GeneratorConfig cfg;
  cfg.person_days = {{LocationType::metropolis, 120}};
  cfg.archetypes = diary::GeneratorConfig::default_archetypes();
  auto trips = diary::generate_synthetic_diaries(cfg, 4);
  auto seqs = diary::build_sequences(trips);
  auto dg = hac_ward(distance_matrix(seqs));
  auto km = daily_distance(seqs, trips);
  auto labels = cut_dendrogram(dg, 4, km);
  auto stats = cluster_stats(LocationType::metropolis, 4, labels, seqs, trips);
  for (std::size_t c = 0; c < stats.size(); ++c) {
    ASSERT_TRUE(stats[c].mean_trips_per_day.has_value());
    EXPECT_GE(*stats[c].mean_daily_distance_km + 1e-12, *stats[c].mean_trip_distance_km);
    if (c > 0) EXPECT_LE(*stats[c].mean_daily_distance_km, *stats[c - 1].mean_daily_distance_km);
  }
}

TEST(Subsample, StratifiedAndSeeded) {
  diary::GeneratorConfig cfg;
  cfg.person_days = {{LocationType::metropolis, 300}, {LocationType::rural, 100}};
  cfg.archetypes = diary::GeneratorConfig::default_archetypes();
  auto seqs = diary::build_sequences(diary::generate_synthetic_diaries(cfg, 2));
  auto a = stratified_subsample(seqs, 100, 7);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a, stratified_subsample(seqs, 100, 7));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  std::size_t metro = 0;
  for (auto i : a) metro += seqs[i].location_type == LocationType::metropolis;
  std::size_t metro_all = 0;
  for (const auto& s : seqs) metro_all += s.location_type == LocationType::metropolis;
  const double expected = 100.0 * static_cast<double>(metro_all) / static_cast<double>(seqs.size());
  EXPECT_NEAR(static_cast<double>(metro), expected, 3.0);
  EXPECT_EQ(stratified_subsample(seqs, 10000, 1).size(), seqs.size());
}
