#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "carshare/diary.hpp"
#include "carshare/types.hpp"

namespace carshare::mobility {

// Conditioning wildcard for total trips / trip rank.
inline constexpr int any = 0;
// Cluster id of location-level (weekend) cells.
inline constexpr int location_level = 0;

struct CellKey {
  LocationType location = LocationType::metropolis;
  int cluster = location_level;
  DayType day_type = DayType::weekday;
  Ownership ownership = Ownership::private_car;

  auto operator<=>(const CellKey&) const = default;
  std::string file_stem() const;
};

// Duration bins: 5 min up to 2 h, then 15 min. Distance bins: 1 km up to
// 20 km, 5 km up to 100 km, then 50 km.
int duration_bin(double minutes);
int distance_bin(double km);

struct DepartureSlice {
  double count = 0.0;                      // trips behind the slice
  std::array<double, slots_per_day> p{};   // mass per 5-minute departure slot
};

struct DurDistBin {
  int duration_bin = 0;
  int distance_bin = 0;
  double p = 0.0;
  double mean_duration_min = 0.0;  // representative values used when sampling
  double mean_distance_km = 0.0;
};

struct DurDistSlice {
  double count = 0.0;
  std::vector<DurDistBin> bins;  // sorted by (duration_bin, distance_bin)
};

struct DestinationSlice {
  double count = 0.0;
  std::array<double, 4> p{};  // indexed by Destination
};

// Keys: departure (destination, total, rank), duration/distance
// (destination, total), destination (total, rank). `any` marks the coarser
// fallback levels. Private sets hold every level; shared sets only the
// unconditioned (any) level.
struct DistributionSet {
  CellKey cell;
  int n_max = 48;
  double person_days = 0.0;            // cars behind the cell (one per sequence)
  std::vector<double> p_ntrips;        // size n_max + 1
  std::map<std::tuple<Destination, int, int>, DepartureSlice> p_departure;
  std::map<std::pair<Destination, int>, DurDistSlice> p_dur_dist;
  std::map<std::pair<int, int>, DestinationSlice> p_destination;

  bool empty() const { return person_days <= 0.0; }
  double mean_trips() const;

  // Lookups with fallback (drop rank, then total). nullptr if even the
  // coarsest level is empty.
  const DepartureSlice* departure(Destination d, int total, int rank) const;
  const DurDistSlice* dur_dist(Destination d, int total) const;
  const DestinationSlice* destination(int total, int rank) const;

  // Throws UserError if a stored slice does not sum to 1 within 1e-9.
  void validate() const;

  std::string to_json() const;
  static DistributionSet from_json(const std::string& text);
};

struct EstimateOptions {
  int n_max = 48;
};

// Empirical private distributions for one cell from its person-days. Trips
// are grouped by person_day_id and ranked by departure.
DistributionSet estimate_distributions(const CellKey& cell, const std::vector<diary::TripRecord>& trips,
                                       const EstimateOptions& options = {});

struct SubstitutionSpec {
  double substitution_rate = 5.0;
  double private_cars = 0.0;

  // round(private_cars / rate), at least 1 for a nonempty cell.
  double shared_cars() const;
};

// Mean daily trips per shared car: private_mean * private_cars / shared_cars.
double shared_mean_trips(const SubstitutionSpec& spec, const DistributionSet& private_set);

// Trip-count pmf scaled by f with each mass split between the two nearest
// integers (mean-preserving), truncated at n_max.
std::vector<double> transport_ntrips(const std::vector<double>& p, double f, int n_max);

// Transport with f found by bisection so that the mean hits the target.
// Throws UserError if the target exceeds what n_max permits.
std::vector<double> recenter_ntrips(const std::vector<double>& p, double target_mean, int n_max);

// Shared set: recentred trip counts; departure, duration/distance and
// destination slices marginalized (trip-weighted) over the dropped
// conditioning variables.
DistributionSet derive_shared_distributions(const DistributionSet& private_set,
                                            const SubstitutionSpec& spec);

// All cells of a study area, keyed by CellKey.
using DistributionCatalog = std::map<CellKey, DistributionSet>;

void save_catalog(const DistributionCatalog& catalog, const std::filesystem::path& dir);
DistributionCatalog load_catalog(const std::filesystem::path& dir);

}  // namespace carshare::mobility
