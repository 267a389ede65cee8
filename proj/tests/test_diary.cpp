#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "carshare/diary.hpp"
#include "carshare/error.hpp"

using namespace carshare;
using namespace carshare::diary;

namespace {

const char* header =
    "person_day_id,departure,arrival,distance_km,destination,location_type,day_type,is_driver,"
    "is_professional\n";

ParseResult parse(const std::string& body) {
  std::istringstream in(std::string(header) + body);
  return parse_diaries(in);
}

TripRecord trip(std::string id, int dep, int arr, double km = 5.0, bool driver = true,
                bool pro = false) {
  TripRecord t;
  t.person_day_id = std::move(id);
  t.departure = dep;
  t.arrival = arr;
  t.duration_min = arr - dep;
  t.distance_km = km;
  t.is_driver = driver;
  t.is_professional = pro;
  return t;
}

}  // namespace

TEST(Parse, ClockTimes) {
  auto r = parse("p1,08:00,08:30,12,work,metropolis,weekday,1,0\n");
  ASSERT_EQ(r.trips.size(), 1u);
  EXPECT_TRUE(r.rejected.empty());
  const auto& t = r.trips[0];
  EXPECT_EQ(t.departure, 480);
  EXPECT_EQ(t.arrival, 510);
  EXPECT_EQ(t.duration_min, 30);
  EXPECT_DOUBLE_EQ(t.distance_km, 12.0);
  EXPECT_EQ(t.destination, Destination::work_school);
}

TEST(Parse, MinuteTimesAndMidnight) {
  auto r = parse("p1,1400,1440,3,home,rural,sunday,true,false\n");
  ASSERT_EQ(r.trips.size(), 1u);
  EXPECT_EQ(r.trips[0].arrival, 1440);
}

TEST(Parse, NegativeDurationRejected) {
  auto r = parse("p1,09:00,08:30,12,work,metropolis,weekday,1,0\np2,09:00,09:10,1,home,rural,weekday,1,0\n");
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].reason, "negative duration");
  EXPECT_EQ(r.rejected[0].line, 2u);
  EXPECT_EQ(r.trips.size(), 1u);
}

TEST(Parse, RowLevelRejections) {
  auto r = parse(
      "p1,8h,08:30,12,work,metropolis,weekday,1,0\n"
      "p2,08:00,08:30,-1,work,metropolis,weekday,1,0\n"
      "p3,08:00,08:30,2,gym,metropolis,weekday,1,0\n"
      "p4,08:00,08:30,2,work,metropolis\n");
  ASSERT_EQ(r.rejected.size(), 4u);
  EXPECT_EQ(r.rejected[0].reason, "unparseable departure time");
  EXPECT_EQ(r.rejected[3].line, 5u);
}

TEST(Parse, SchemaMismatchNamesColumn) {
  std::istringstream missing("person_day_id,departure\np,1\n");
  try {
    parse_diaries(missing);
    FAIL();
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("arrival"), std::string::npos);
  }
  std::istringstream extra(std::string(header).insert(std::string(header).size() - 1, ",weight") +
                           "p,1,2,1,home,rural,weekday,1,0,3\n");
  try {
    parse_diaries(extra);
    FAIL();
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("weight"), std::string::npos);
  }
}

TEST(Parse, ColumnMappingTranslatesCodes) {
  auto m = ColumnMapping::from_json(R"({
    "columns": {"person_day_id": "HP_ID", "departure": "W_SZ", "arrival": "W_AZ",
                "distance_km": "wegkm", "destination": "zweck", "location_type": "RegioStaR",
                "day_type": "ST_WOTAG", "is_driver": "fahrer", "is_professional": "dienst"},
    "values": {"destination": {"1": "work_school", "3": "errands"},
               "is_driver": {"1": "1", "2": "0"}},
    "allow_extra_columns": true})");
  std::istringstream in(
      "HP_ID;W_SZ;W_AZ;wegkm;zweck;RegioStaR;ST_WOTAG;fahrer;dienst;extra\n"
      "a;07:10;07:40;21,5;1;big_city;weekday;2;0;x\n"
      "a;17:00;17:20;4;3;big_city;weekday;1;0;x\n");
  auto r = parse_diaries(in, m);
  // "21,5" is not a valid number in the canonical schema
  ASSERT_EQ(r.trips.size(), 1u);
  EXPECT_EQ(r.trips[0].destination, Destination::errands);
  EXPECT_TRUE(r.trips[0].is_driver);
}

TEST(Parse, NextDayArrival) {
  std::istringstream in(std::string(header).insert(std::string(header).size() - 1, ",next_day") +
                        "p,23:30,00:20,30,home,rural,saturday,1,0,1\n");
  auto r = parse_diaries(in);
  ASSERT_EQ(r.trips.size(), 1u);
  EXPECT_EQ(r.trips[0].arrival, 1460);
  EXPECT_EQ(r.trips[0].duration_min, 50);
}

TEST(Filter, Overlapping) {
  std::vector<TripRecord> trips{trip("a", 540, 600), trip("a", 570, 660), trip("b", 540, 600)};
  FilterReport rep;
  auto out = filter_trips(trips, &rep);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].person_day_id, "b");
  EXPECT_EQ(rep.overlapping, 2u);
}

TEST(Filter, RulesAndPrecedence) {
  std::vector<TripRecord> trips{trip("a", 100, 130, 3, false), trip("a", 200, 230, 3, true, true),
                                trip("b", 1400, 1460), trip("c", 10, 20), trip("c", 30, 40),
                                trip("c", 50, 60)};
  FilterReport rep;
  auto out = filter_trips(trips, &rep);
  EXPECT_EQ(rep.passenger, 1u);
  EXPECT_EQ(rep.professional, 1u);
  EXPECT_EQ(rep.spans_midnight, 1u);
  EXPECT_EQ(rep.overlapping, 0u);
  EXPECT_EQ(rep.retained, 3u);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1].departure, 30);
}

TEST(Filter, AdjacentTripsDoNotOverlap) {
  std::vector<TripRecord> trips{trip("a", 100, 130), trip("a", 130, 160)};
  EXPECT_EQ(filter_trips(trips).size(), 2u);
}

TEST(Sequences, BlockArithmetic) {
  auto seqs = build_sequences({trip("a", 480, 510)});
  ASSERT_EQ(seqs.size(), 1u);
  for (int b = 0; b < slots_per_day; ++b)
    EXPECT_EQ(seqs[0].blocks[b] == BlockState::on_move, b >= 96 && b <= 101) << b;
}

TEST(Sequences, PartialBlocksMarked) {
  auto seqs = build_sequences({trip("a", 481, 485), trip("a", 1437, 1440)});
  EXPECT_EQ(seqs[0].on_move_count(), 2u);
  EXPECT_EQ(seqs[0].blocks[96], BlockState::on_move);
  EXPECT_EQ(seqs[0].blocks[287], BlockState::on_move);
}

TEST(Sequences, RoundTrip) {
  auto seqs = build_sequences({trip("a", 480, 510), trip("b", 0, 5)});
  std::stringstream ss;
  write_sequences(seqs, ss);
  EXPECT_EQ(read_sequences(ss), seqs);
}

// Randomized properties over synthetic diaries mixed with injected noise.
TEST(Properties, FilterIdempotentAndSequenceBounds) {
  GeneratorConfig cfg;
  cfg.person_days = {{LocationType::metropolis, 150}, {LocationType::rural, 100}};
  cfg.archetypes = GeneratorConfig::default_archetypes();
  auto trips = generate_synthetic_diaries(cfg, 9);
  // Noise: passengers, overlaps, midnight spans.
  trips.push_back(trip("metropolis-000001", 0, 1500));
  trips.push_back(trip("rural-000003", 600, 620, 4, false));
  trips.push_back(trip("rural-000004", trips[0].departure, trips[0].arrival));

  auto once = filter_trips(trips);
  EXPECT_EQ(filter_trips(once), once);

  auto seqs = build_sequences(once);
  std::set<std::string> days;
  for (const auto& t : once) days.insert(t.person_day_id);
  EXPECT_EQ(seqs.size(), days.size());

  for (const auto& s : seqs) {
    long total = 0, n = 0;
    for (const auto& t : once)
      if (t.person_day_id == s.person_day_id) {
        total += t.duration_min;
        ++n;
      }
    const long moving = static_cast<long>(s.on_move_count()) * slot_minutes;
    EXPECT_GE(moving, total - 2 * slot_minutes * n);
    EXPECT_LE(moving, total + 2 * slot_minutes * n);
  }
}

TEST(Synthetic, DeterministicAndClean) {
  GeneratorConfig cfg;
  cfg.person_days = {{LocationType::big_city, 200}};
  cfg.archetypes = GeneratorConfig::default_archetypes();
  auto a = generate_synthetic_diaries(cfg, 1);
  auto b = generate_synthetic_diaries(cfg, 1);
  std::ostringstream sa, sb;
  write_trips(a, sa);
  write_trips(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(filter_trips(a), a);
  auto c = generate_synthetic_diaries(cfg, 2);
  EXPECT_NE(a, c);
}

TEST(Synthetic, CommuterArchetype) {
  auto cfg = GeneratorConfig::from_json(R"({
    "person_days": {"middle_city": 50},
    "day_type_share": {"weekday": 1},
    "archetypes": [{"name": "commuter", "legs": [
      {"destination": "work_school", "depart": ["06:30", "08:30"], "duration": [15, 40], "speed_kmh": [25, 55]},
      {"destination": "home", "depart": ["16:00", "18:30"], "duration": [15, 45], "speed_kmh": [25, 55]}]}]})");
  auto trips = generate_synthetic_diaries(cfg, 3);
  ASSERT_EQ(trips.size(), 100u);
  for (std::size_t i = 0; i < trips.size(); i += 2) {
    const auto& w = trips[i];
    const auto& h = trips[i + 1];
    EXPECT_EQ(w.person_day_id, h.person_day_id);
    EXPECT_EQ(w.destination, Destination::work_school);
    EXPECT_EQ(h.destination, Destination::home);
    EXPECT_GE(w.departure, 390);
    EXPECT_LE(w.departure, 510);
    EXPECT_GE(h.departure, 960);
    EXPECT_LE(h.departure, 1110);
    EXPECT_GE(w.duration_min, 15);
    EXPECT_LE(w.duration_min, 40);
    const double speed = w.distance_km / (w.duration_min / 60.0);
    EXPECT_GE(speed, 25.0 - 0.4);
    EXPECT_LE(speed, 55.0 + 0.4);
    EXPECT_EQ(w.day_type, DayType::weekday);
  }
}

TEST(Synthetic, EmptyAndInvalid) {
  GeneratorConfig cfg;
  cfg.person_days = {{LocationType::rural, 0}};
  cfg.archetypes = GeneratorConfig::default_archetypes();
  EXPECT_TRUE(generate_synthetic_diaries(cfg, 1).empty());
  EXPECT_THROW(GeneratorConfig::from_json(R"({"person_days": {"rural": -5}})"), UserError);
}
