#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "carshare/cluster.hpp"
#include "carshare/mobility.hpp"
#include "carshare/types.hpp"

namespace carshare::ev {

// Defaults approximate a compact BEV; placeholders, all
// configurable.
struct VehicleParams {
  double battery_kwh = 58.0;
  double mass_kg = 1875.0;  // curb weight plus driver
  double drag_coefficient = 0.267;
  double frontal_area_m2 = 2.36;
  double rolling_resistance = 0.011;
  double drivetrain_efficiency = 0.85;
  // auxiliary_kw(T) = base + heat * max(0, heat_below - T) + cool * max(0, T - cool_above)
  double aux_base_kw = 0.35;
  double aux_heat_kw_per_k = 0.1;
  double aux_heat_below_c = 18.0;
  double aux_cool_kw_per_k = 0.07;
  double aux_cool_above_c = 24.0;
  double charge_efficiency = 0.9;
  double discharge_efficiency = 0.9;

  double auxiliary_kw(double temperature_c) const;
  void validate() const;
};

struct Trip {
  std::size_t start_slot = 0;  // horizon slot, inclusive
  std::size_t end_slot = 0;    // exclusive
  double duration_min = 0.0;
  double distance_km = 0.0;
  Destination origin = Destination::home;
  Destination destination = Destination::home;
  bool appended = false;  // home-return trip added after sampling
};

struct MobilitySchedule {
  std::size_t slots = 0;
  Destination initial_location = Destination::home;
  std::vector<Trip> trips;  // sorted, non-overlapping

  // Location while parked in each slot.
  std::vector<int> location_by_slot() const;  // -1 while driving
};

// Distribution sets used for each day type of one profile.
struct DaySources {
  const mobility::DistributionSet* weekday = nullptr;
  const mobility::DistributionSet* saturday = nullptr;
  const mobility::DistributionSet* sunday = nullptr;

  const mobility::DistributionSet& for_day(DayType d) const;
};

// Day d of the horizon (0-based) with the horizon starting on weekday
// `start_dow` (0 = Monday).
DayType day_type_of(std::size_t day, int start_dow);

struct SamplingOptions {
  int rejection_budget = 1000;  // draws per day before it is regenerated
  int max_day_failures = 100;
  int start_dow = 0;
  // Private vehicles return home at the end of each day; shared vehicles
  // carry their location over.
  bool return_home = true;
};

MobilitySchedule sample_mobility(const DaySources& sources, std::size_t horizon_days, std::uint64_t seed,
                                 const SamplingOptions& options = {});
MobilitySchedule sample_mobility(const mobility::DistributionSet& dist, std::size_t horizon_days,
                                 std::uint64_t seed, const SamplingOptions& options = {});

// Energy of one trip (kWh) from the road-load formula; speeds above
// 150 km/h are clamped (the clamp is reported through *clamped).
double trip_energy_kwh(double distance_km, double duration_min, double temperature_c,
                       const VehicleParams& vp, bool* clamped = nullptr);

// Per-slot driving consumption (kWh); trip energy is spread uniformly over
// the trip's slots. `temperature_c` is hourly and must cover the horizon.
std::vector<double> driving_consumption(const MobilitySchedule& sched, const VehicleParams& vp,
                                        const std::vector<double>& temperature_c,
                                        std::vector<std::string>* warnings = nullptr);

struct ChargingOption {
  double plug_probability = 0.0;
  std::vector<std::pair<double, double>> ratings;  // (kW, probability)
};

struct AvailabilityConfig {
  std::map<Destination, ChargingOption> private_options;
  double shared_rating_kw = 75.0;

  static AvailabilityConfig defaults();
  void validate() const;
};

struct AvailabilitySeries {
  std::vector<char> plugged;
  std::vector<double> rating_kw;
};

// At each arrival (and at the start of the horizon) the plug state and
// rating are drawn once and held until the next departure. Shared vehicles
// are always plugged at shared_rating_kw while parked.
AvailabilitySeries grid_availability(const MobilitySchedule& sched, const AvailabilityConfig& config,
                                     Ownership ownership, std::uint64_t seed);

enum class ChargingRule { immediate, balanced };

struct DemandSeries {
  std::vector<double> grid_kwh;  // per slot
  std::vector<double> soc_kwh;   // state of charge at the end of each slot
  double initial_soc_kwh = 0.0;
  std::vector<std::size_t> shortfall_intervals;  // plug-in slots of capped intervals
  bool feasible = true;
  std::string infeasibility;  // names the first trip that drains the battery
};

// Fixed-rule charging. immediate: full rating while plugged and not full.
// balanced: over each plugged interval the smallest constant power that
// reaches a full battery by the interval end, capped at the rating.
// Charging accounts for charge_efficiency (grid draw * eta = stored energy).
DemandSeries grid_demand(const std::vector<double>& consumption_kwh, const AvailabilitySeries& avail,
                         const VehicleParams& vp, ChargingRule rule, double initial_soc_kwh);

// Same, with the initial state of charge iterated to the fixed point where
// the series ends where it started (cyclic horizon).
DemandSeries grid_demand_cyclic(const std::vector<double>& consumption_kwh, const AvailabilitySeries& avail,
                                const VehicleParams& vp, ChargingRule rule);

// Sum per hour (energy) or mean per hour (ratings). Throws if the length is
// not a multiple of 12 slots.
std::vector<double> resample_hourly_sum(const std::vector<double>& per_slot);
std::vector<double> resample_hourly_mean(const std::vector<double>& per_slot);

// Hourly temperature: annual sinusoid (winter mean -2 C, summer mean 19 C)
// with a +-3 C daily cycle, starting at hour_of_year.
std::vector<double> default_temperature(std::size_t hours, std::size_t hour_of_year = 0);
std::vector<double> read_hourly_series(const std::filesystem::path& path, const std::string& column);

struct ProfileSpec {
  std::string id;
  LocationType location = LocationType::metropolis;
  int cluster = 1;
  Ownership ownership = Ownership::private_car;
  VehicleParams vehicle;
  double weight = 0.0;  // cars represented (default allocation, no carsharing)
};

struct VehicleProfile {
  ProfileSpec spec;
  MobilitySchedule schedule;
  std::vector<double> consumption_kwh;  // 5-minute
  AvailabilitySeries availability;      // 5-minute
  DemandSeries balanced;                // 5-minute, cyclic
  DemandSeries immediate;               // 5-minute, cyclic
  int resamples = 0;
  std::vector<std::string> warnings;

  // Hourly model inputs.
  std::vector<double> hourly_consumption_kwh;
  std::vector<double> hourly_rating_kw;
  std::vector<double> hourly_balanced_kwh;
  std::vector<double> hourly_immediate_kwh;
};

struct SynthConfig {
  std::size_t horizon_hours = 168;
  SamplingOptions sampling;
  AvailabilityConfig availability = AvailabilityConfig::defaults();
  std::vector<double> temperature_c;  // hourly; empty = default_temperature
  std::size_t start_hour_of_year = 0;
  int max_resamples = 20;
};

// One profile. Each profile owns a random stream derived from the master
// seed and its id, so results do not depend on scheduling. A profile whose
// schedule drains the battery even under immediate charging is resampled.
VehicleProfile synthesize_profile(const ProfileSpec& spec, const DaySources& sources,
                                  const SynthConfig& config, std::uint64_t master_seed);

// Generates all profiles; the parallel and serial paths give identical
// results.
std::vector<VehicleProfile> synthesize_profiles(const std::vector<ProfileSpec>& specs,
                                                const std::vector<DaySources>& sources,
                                                const SynthConfig& config, std::uint64_t master_seed,
                                                cluster::Exec exec = cluster::Exec::parallel);

void write_profile_series(const VehicleProfile& p, std::ostream& out);
void write_manifest(const std::vector<VehicleProfile>& profiles, std::ostream& out);

}  // namespace carshare::ev
