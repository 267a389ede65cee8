#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "carshare/types.hpp"

namespace carshare::diary {

struct TripRecord {
  std::string person_day_id;
  int departure = 0;     // minutes since midnight, [0, 1440)
  int arrival = 0;       // minutes since midnight of the departure day; > 1440 spans midnight
  int duration_min = 0;  // arrival - departure
  double distance_km = 0.0;
  Destination destination = Destination::home;
  LocationType location_type = LocationType::metropolis;
  DayType day_type = DayType::weekday;
  bool is_driver = true;
  bool is_professional = false;

  bool operator==(const TripRecord&) const = default;
};

enum class BlockState : std::uint8_t { idle = 0, on_move = 1 };

struct DaySequence {
  std::string person_day_id;
  LocationType location_type = LocationType::metropolis;
  DayType day_type = DayType::weekday;
  std::array<BlockState, slots_per_day> blocks{};

  std::size_t on_move_count() const;
  bool operator==(const DaySequence&) const = default;
};

// Maps canonical field names to source column names and optionally source
// codes to canonical values (e.g. survey destination codes). Loaded from JSON:
//   {"columns": {"departure": "W_SZ", ...},
//    "values": {"destination": {"1": "work_school", ...}},
//    "allow_extra_columns": true}
struct ColumnMapping {
  std::map<std::string, std::string> columns;
  std::map<std::string, std::map<std::string, std::string>> values;
  bool allow_extra_columns = false;

  static ColumnMapping identity();
  static ColumnMapping from_json(const std::string& text);
  static ColumnMapping load(const std::filesystem::path& path);
};

struct Rejection {
  std::size_t line = 0;  // 1-based line in the input file
  std::string reason;
};

struct ParseResult {
  std::vector<TripRecord> trips;
  std::vector<Rejection> rejected;
};

// Canonical fields. The first nine are required; duration_min (checked
// against arrival - departure) and next_day (arrival is on the following
// day) are optional.
const std::vector<std::string>& required_fields();
const std::vector<std::string>& optional_fields();

// Times are HH:MM or minutes since midnight, detected per column from the
// first non-empty value. Throws UserError on schema mismatch.
ParseResult parse_diaries(std::istream& in, const ColumnMapping& mapping = ColumnMapping::identity());
ParseResult parse_diaries_file(const std::filesystem::path& path,
                               const ColumnMapping& mapping = ColumnMapping::identity());

struct FilterReport {
  std::size_t input = 0;
  std::size_t passenger = 0;
  std::size_t professional = 0;
  std::size_t spans_midnight = 0;
  std::size_t overlapping = 0;
  std::size_t retained = 0;
};

// Removes passenger trips, professional trips, trips spanning midnight and
// every trip of a person-day that contains overlapping trips. Each removed
// trip is counted under the first rule (in that order) that applies.
std::vector<TripRecord> filter_trips(const std::vector<TripRecord>& trips, FilterReport* report = nullptr);

// One sequence per person-day, in order of first appearance. A block is
// on_move if any trip intersects its five-minute interval.
std::vector<DaySequence> build_sequences(const std::vector<TripRecord>& trips);

void write_trips(const std::vector<TripRecord>& trips, std::ostream& out);
void write_sequences(const std::vector<DaySequence>& seqs, std::ostream& out);
std::vector<DaySequence> read_sequences(std::istream& in);
void write_rejections(const std::vector<Rejection>& rejected, std::ostream& out);
void write_filter_report(const FilterReport& report, std::ostream& out);

// ---- synthetic diaries ----

struct LegSpec {
  Destination destination = Destination::home;
  int depart_earliest = 0;  // minutes
  int depart_latest = 0;
  int min_duration = 5;
  int max_duration = 30;
  double min_speed_kmh = 20.0;
  double max_speed_kmh = 50.0;
};

struct Archetype {
  std::string name;
  double weight = 1.0;
  std::map<LocationType, double> location_weight;  // multiplies weight; missing = 1
  std::vector<DayType> day_types;                  // empty = all
  std::vector<LegSpec> legs;
};

struct GeneratorConfig {
  std::map<LocationType, std::size_t> person_days;
  std::map<DayType, double> day_type_share{{DayType::weekday, 5.0 / 7.0},
                                           {DayType::saturday, 1.0 / 7.0},
                                           {DayType::sunday, 1.0 / 7.0}};
  std::vector<Archetype> archetypes;

  static GeneratorConfig from_json(const std::string& text);
  static GeneratorConfig load(const std::filesystem::path& path);
  // Archetypes used when the configuration lists none.
  static std::vector<Archetype> default_archetypes();
  void validate() const;
};

// Deterministic for a fixed seed. Every generated trip is a non-professional
// driver trip inside one day, with the trips of a person-day disjoint, so the
// output passes filter_trips unchanged.
std::vector<TripRecord> generate_synthetic_diaries(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace carshare::diary
