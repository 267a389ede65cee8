#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "carshare/error.hpp"
#include "carshare/mobility.hpp"

using namespace carshare;
using namespace carshare::mobility;

namespace {

diary::TripRecord trip(const std::string& id, int dep, int dur, double km, Destination d) {
  diary::TripRecord t;
  t.person_day_id = id;
  t.departure = dep;
  t.arrival = dep + dur;
  t.duration_min = dur;
  t.distance_km = km;
  t.destination = d;
  return t;
}

double mean_of(const std::vector<double>& p) {
  double m = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) m += static_cast<double>(k) * p[k];
  return m;
}

// 60 person-days with 2 trips (work 07:00, home 17:00) and 40 with 3
// (errands 09:00, leisure 12:00, home 18:00).
std::vector<diary::TripRecord> fixture() {
  std::vector<diary::TripRecord> trips;
  for (int i = 0; i < 60; ++i) {
    const auto id = "a" + std::to_string(i);
    trips.push_back(trip(id, 420, 30, 15.0, Destination::work_school));
    trips.push_back(trip(id, 1020, 30 + i % 2 * 10, 15.0, Destination::home));
  }
  for (int i = 0; i < 40; ++i) {
    const auto id = "b" + std::to_string(i);
    trips.push_back(trip(id, 540, 10, 3.0, Destination::errands));
    trips.push_back(trip(id, 720, 20, 8.5, Destination::leisure));
    trips.push_back(trip(id, 1080, 12, 4.0, Destination::home));
  }
  return trips;
}

CellKey cell() { return {LocationType::big_city, 3, DayType::weekday, Ownership::private_car}; }

}  // namespace

TEST(Bins, Boundaries) {
  EXPECT_EQ(duration_bin(0), 0);
  EXPECT_EQ(duration_bin(4.9), 0);
  EXPECT_EQ(duration_bin(119), 23);
  EXPECT_EQ(duration_bin(120), 24);
  EXPECT_EQ(duration_bin(134), 24);
  EXPECT_EQ(duration_bin(135), 25);
  EXPECT_EQ(distance_bin(0.5), 0);
  EXPECT_EQ(distance_bin(19.9), 19);
  EXPECT_EQ(distance_bin(20), 20);
  EXPECT_EQ(distance_bin(99), 35);
  EXPECT_EQ(distance_bin(100), 36);
  EXPECT_EQ(distance_bin(151), 37);
}

TEST(Estimate, TripCountsAndDeparture) {
  auto set = estimate_distributions(cell(), fixture());
  EXPECT_DOUBLE_EQ(set.person_days, 100.0);
  EXPECT_DOUBLE_EQ(set.p_ntrips[2], 0.6);
  EXPECT_DOUBLE_EQ(set.p_ntrips[3], 0.4);
  EXPECT_DOUBLE_EQ(set.mean_trips(), 2.4);
  const auto* work = set.departure(Destination::work_school, 2, 1);
  ASSERT_NE(work, nullptr);
  EXPECT_DOUBLE_EQ(work->p[84], 1.0);
  EXPECT_NO_THROW(set.validate());
}

TEST(Estimate, AllAtEightGivesSlot96) {
  std::vector<diary::TripRecord> trips;
  for (int i = 0; i < 5; ++i) trips.push_back(trip("p" + std::to_string(i), 480, 20, 5, Destination::home));
  auto set = estimate_distributions(cell(), trips);
  EXPECT_DOUBLE_EQ(set.departure(Destination::home, any, any)->p[96], 1.0);
}

TEST(Estimate, SlicesNormalizedIndependently) {
  // Hand tally: the work destination at (total 2, rank 1) holds 3 trips at
  // slot 84 and 1 at slot 90; (total 2, rank 2) holds 4 home trips.
  std::vector<diary::TripRecord> trips;
  for (int i = 0; i < 4; ++i) {
    const auto id = "p" + std::to_string(i);
    trips.push_back(trip(id, i == 3 ? 450 : 420, 20, 10, Destination::work_school));
    trips.push_back(trip(id, 1000, 20, 10, Destination::home));
  }
  auto set = estimate_distributions(cell(), trips);
  const auto* r1 = set.departure(Destination::work_school, 2, 1);
  EXPECT_DOUBLE_EQ(r1->count, 4.0);
  EXPECT_DOUBLE_EQ(r1->p[84], 0.75);
  EXPECT_DOUBLE_EQ(r1->p[90], 0.25);
  const auto* r2 = set.departure(Destination::home, 2, 2);
  EXPECT_DOUBLE_EQ(r2->p[200], 1.0);
  const auto* d1 = set.destination(2, 1);
  EXPECT_DOUBLE_EQ(d1->p[static_cast<int>(Destination::work_school)], 1.0);
}

TEST(Estimate, FallbackDropsRankThenTotal) {
  auto set = estimate_distributions(cell(), fixture());
  // No work trip at rank 2 of 2: falls back to (work, 2, any).
  EXPECT_EQ(set.departure(Destination::work_school, 2, 2), set.departure(Destination::work_school, 2, any));
  // No work trips with 3 in total: falls back to (work, any, any).
  EXPECT_EQ(set.departure(Destination::work_school, 3, 1),
            set.departure(Destination::work_school, any, any));
  EXPECT_EQ(set.dur_dist(Destination::leisure, 2), set.dur_dist(Destination::leisure, any));
}

TEST(Estimate, TooManyTrips) {
  std::vector<diary::TripRecord> trips;
  for (int i = 0; i < 5; ++i) trips.push_back(trip("x", 60 * i, 10, 1, Destination::errands));
  EstimateOptions o;
  o.n_max = 4;
  EXPECT_THROW(estimate_distributions(cell(), trips, o), UserError);
}

TEST(Shared, MeanTripsArithmetic) {
  DistributionSet p;
  p.p_ntrips.assign(49, 0.0);
  p.p_ntrips[3] = 1.0;
  EXPECT_DOUBLE_EQ(shared_mean_trips({5.0, 1000.0}, p), 15.0);
  EXPECT_DOUBLE_EQ(shared_mean_trips({1.0, 1000.0}, p), 3.0);
  p.p_ntrips[3] = 0.5;
  p.p_ntrips[2] = 0.5;  // mean 2.5
  EXPECT_DOUBLE_EQ(shared_mean_trips({8.0, 1600.0}, p), 20.0);
  EXPECT_THROW(shared_mean_trips({5.0, 0.0}, p), UserError);
  EXPECT_DOUBLE_EQ((SubstitutionSpec{5.0, 2.0}).shared_cars(), 1.0);
}

TEST(Shared, TransportPreservesMean) {
  std::vector<double> p{0.1, 0.2, 0.3, 0.25, 0.15};
  for (double f : {1.0, 1.7, 3.3, 5.0}) {
    auto q = transport_ntrips(p, f, 48);
    EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-12);
    EXPECT_NEAR(mean_of(q), f * mean_of(p), 1e-12);
  }
  EXPECT_EQ(transport_ntrips(p, 1.0, 48)[2], 0.3);
}

TEST(Shared, RecenterHitsTargetUnderTruncation) {
  std::vector<double> p(49, 0.0);
  p[1] = 0.2;
  p[5] = 0.5;
  p[12] = 0.3;
  for (double target : {4.0, 20.0, 35.0, 44.0}) {
    auto q = recenter_ntrips(p, target, 48);
    EXPECT_LE(std::abs(mean_of(q) - target), 0.01) << target;
    EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-9);
  }
  EXPECT_THROW(recenter_ntrips(p, 48.5, 48), UserError);
}

TEST(Shared, RateOneIsIdentityOnMean) {
  auto priv = estimate_distributions(cell(), fixture());
  auto shared = derive_shared_distributions(priv, {1.0, priv.person_days});
  EXPECT_NEAR(shared.mean_trips(), priv.mean_trips(), 1e-12);
  EXPECT_EQ(shared.cell.ownership, Ownership::shared);
}

TEST(Shared, MeanScalesWithRate) {
  auto priv = estimate_distributions(cell(), fixture());
  auto shared = derive_shared_distributions(priv, {5.0, priv.person_days});
  EXPECT_DOUBLE_EQ(shared.person_days, 20.0);
  EXPECT_NEAR(shared.mean_trips(), priv.mean_trips() * 5.0, 0.01 * priv.mean_trips() * 5.0);
  EXPECT_NO_THROW(shared.validate());
}

TEST(Shared, MarginalizationMatchesHandComputation) {
  // Two private slices for leisure: (total 2, rank 1) with 1 trip at slot
  // 100, and (total 3, rank 2) with 3 trips, two at slot 100 and one at 110.
  // Trip-weighted: slot 100 -> 3/4, slot 110 -> 1/4.
  std::vector<diary::TripRecord> trips;
  trips.push_back(trip("a", 500, 10, 2, Destination::leisure));
  trips.push_back(trip("a", 900, 10, 2, Destination::home));
  for (int i = 0; i < 3; ++i) {
    const auto id = "b" + std::to_string(i);
    trips.push_back(trip(id, 300, 10, 2, Destination::errands));
    trips.push_back(trip(id, i == 2 ? 550 : 500, 10, 2, Destination::leisure));
    trips.push_back(trip(id, 900, 10, 2, Destination::home));
  }
  auto priv = estimate_distributions(cell(), trips);
  auto shared = derive_shared_distributions(priv, {1.0, priv.person_days});
  const auto* s = shared.departure(Destination::leisure, 2, 1);
  ASSERT_NE(s, nullptr);
  EXPECT_DOUBLE_EQ(s->p[100], 0.75);
  EXPECT_DOUBLE_EQ(s->p[110], 0.25);
  // Only the unconditioned level exists in the shared set.
  EXPECT_EQ(shared.p_departure.count({Destination::leisure, 2, 1}), 0u);
  EXPECT_EQ(shared.p_dur_dist.count({Destination::leisure, 2}), 0u);
  // Equal to the pooled private slice.
  const auto* pooled = priv.departure(Destination::leisure, any, any);
  for (std::size_t b = 0; b < pooled->p.size(); ++b) EXPECT_NEAR(s->p[b], pooled->p[b], 1e-15);
}

TEST(Shared, DurDistMarginalKeepsBinMeans) {
  auto priv = estimate_distributions(cell(), fixture());
  auto shared = derive_shared_distributions(priv, {5.0, priv.person_days});
  const auto* home = shared.dur_dist(Destination::home, any);
  const auto* pooled = priv.dur_dist(Destination::home, any);
  ASSERT_EQ(home->bins.size(), pooled->bins.size());
  for (std::size_t i = 0; i < home->bins.size(); ++i) {
    EXPECT_NEAR(home->bins[i].p, pooled->bins[i].p, 1e-12);
    EXPECT_NEAR(home->bins[i].mean_duration_min, pooled->bins[i].mean_duration_min, 1e-12);
    EXPECT_NEAR(home->bins[i].mean_distance_km, pooled->bins[i].mean_distance_km, 1e-12);
  }
}

TEST(Serialization, JsonRoundTripAndCatalog) {
  auto priv = estimate_distributions(cell(), fixture());
  auto shared = derive_shared_distributions(priv, {5.0, priv.person_days});
  auto back = DistributionSet::from_json(priv.to_json());
  EXPECT_EQ(back.to_json(), priv.to_json());
  EXPECT_EQ(back.p_ntrips, priv.p_ntrips);

  const auto dir = std::filesystem::temp_directory_path() / "carshare_catalog_test";
  std::filesystem::remove_all(dir);
  DistributionCatalog cat{{priv.cell, priv}, {shared.cell, shared}};
  save_catalog(cat, dir);
  auto loaded = load_catalog(dir);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.at(shared.cell).to_json(), shared.to_json());
  std::filesystem::remove_all(dir);

  auto broken = priv.to_json();
  broken.replace(broken.find("\"p_ntrips\""), 10, "\"p_nothing\"");
  EXPECT_THROW(DistributionSet::from_json(broken), UserError);
}
