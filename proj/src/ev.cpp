#include "carshare/ev.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>

#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "carshare/rng.hpp"

namespace carshare::ev {

namespace {

constexpr double air_density = 1.225;
constexpr double gravity = 9.81;
constexpr double max_speed_kmh = 150.0;
constexpr double slot_hours = slot_minutes / 60.0;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct DayTrip {
  int start = 0;
  int slots = 0;
  double duration = 0.0;
  double distance = 0.0;
  Destination destination = Destination::home;
  bool appended = false;
};

const mobility::DurDistBin* draw_bin(const mobility::DurDistSlice& s, Rng& rng) {
  std::vector<double> w(s.bins.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = s.bins[i].p;
  std::size_t k = rng.discrete(w);
  return k < s.bins.size() ? &s.bins[k] : nullptr;
}

int slots_for(double duration_min) {
  return std::max(1, static_cast<int>(std::ceil(duration_min / slot_minutes - 1e-9)));
}

// One candidate trip: destination, departure, duration/distance. Returns
// false if a slice is missing or the trip would run past midnight.
bool draw_trip(const mobility::DistributionSet& set, int total, int rank, Rng& rng, DayTrip& out) {
  const auto* ds = set.destination(total, rank);
  if (ds == nullptr) return false;
  std::size_t di = rng.discrete(ds->p);
  if (di >= ds->p.size()) return false;
  auto d = static_cast<Destination>(di);
  const auto* dep = set.departure(d, total, rank);
  const auto* dd = set.dur_dist(d, total);
  if (dep == nullptr || dd == nullptr) return false;
  std::size_t slot = rng.discrete(dep->p);
  const auto* bin = draw_bin(*dd, rng);
  if (slot >= dep->p.size() || bin == nullptr) return false;
  out.start = static_cast<int>(slot);
  out.duration = std::max(1.0, bin->mean_duration_min);
  out.distance = bin->mean_distance_km;
  out.slots = slots_for(out.duration);
  out.destination = d;
  out.appended = false;
  return out.start + out.slots <= slots_per_day;
}

// Private days: ranks in order, each departure after the previous arrival.
bool sample_ranked_day(const mobility::DistributionSet& set, int n, int budget, bool return_home, Rng& rng,
                       std::vector<DayTrip>& trips) {
  int draws = 0;
  int free_slot = 0;
  for (int r = 1; r <= n; ++r) {
    bool placed = false;
    while (draws < budget) {
      ++draws;
      DayTrip t;
      if (!draw_trip(set, n, r, rng, t) || t.start < free_slot) continue;
      trips.push_back(t);
      free_slot = t.start + t.slots;
      placed = true;
      break;
    }
    if (!placed) return false;
  }
  if (!return_home || trips.empty() || trips.back().destination == Destination::home) return true;

  const auto* dep = set.departure(Destination::home, mobility::any, mobility::any);
  const auto* dd = set.dur_dist(Destination::home, mobility::any);
  if (dd == nullptr) return false;
  while (draws < budget) {
    ++draws;
    int slot = free_slot;
    if (dep != nullptr) {
      slot = static_cast<int>(rng.discrete(dep->p));
      if (slot < free_slot) continue;
    }
    const auto* bin = draw_bin(*dd, rng);
    if (bin == nullptr) return false;
    DayTrip t;
    t.start = slot;
    t.duration = std::max(1.0, bin->mean_duration_min);
    t.distance = bin->mean_distance_km;
    t.slots = slots_for(t.duration);
    t.destination = Destination::home;
    t.appended = true;
    if (t.start + t.slots > slots_per_day) continue;
    trips.push_back(t);
    return true;
  }
  return false;
}

// Shared days carry no rank conditioning. Destinations and duration/distance
// bins are drawn first and never rejected, so crowded days keep the trip-length
// distribution; longest trips are then placed at departures drawn from the
// destination slice restricted to the free slots (uniform over free slots if
// the slice has no mass there).
bool sample_unranked_day(const mobility::DistributionSet& set, int n, Rng& rng, std::vector<DayTrip>& trips) {
  std::vector<const mobility::DepartureSlice*> deps;
  for (int k = 0; k < n; ++k) {
    const auto* ds = set.destination(n, k + 1);
    if (ds == nullptr) return false;
    std::size_t di = rng.discrete(ds->p);
    if (di >= ds->p.size()) return false;
    auto d = static_cast<Destination>(di);
    const auto* dd = set.dur_dist(d, n);
    if (dd == nullptr) return false;
    const auto* bin = draw_bin(*dd, rng);
    if (bin == nullptr) return false;
    DayTrip t;
    t.duration = std::max(1.0, bin->mean_duration_min);
    t.distance = bin->mean_distance_km;
    t.slots = slots_for(t.duration);
    t.destination = d;
    if (t.slots > slots_per_day) return false;
    trips.push_back(t);
    deps.push_back(set.departure(d, n, k + 1));
  }
  std::vector<std::size_t> order(trips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return trips[a].slots > trips[b].slots; });

  std::vector<char> busy(slots_per_day, 0);
  std::vector<double> w(slots_per_day);
  for (auto i : order) {
    auto& t = trips[i];
    // Free run length starting at each slot, computed backwards.
    int run = 0;
    bool any_free = false;
    double mass = 0.0;
    for (int s = slots_per_day - 1; s >= 0; --s) {
      run = busy[static_cast<std::size_t>(s)] ? 0 : run + 1;
      const bool fits = run >= t.slots;
      any_free = any_free || fits;
      const auto us = static_cast<std::size_t>(s);
      w[us] = fits && deps[i] != nullptr && us < deps[i]->p.size() ? deps[i]->p[us] : 0.0;
      mass += w[us];
    }
    if (!any_free) return false;
    if (!(mass > 0.0)) {
      run = 0;
      for (int s = slots_per_day - 1; s >= 0; --s) {
        run = busy[static_cast<std::size_t>(s)] ? 0 : run + 1;
        w[static_cast<std::size_t>(s)] = run >= t.slots ? 1.0 : 0.0;
      }
    }
    t.start = static_cast<int>(rng.discrete(w));
    for (int s = t.start; s < t.start + t.slots; ++s) busy[static_cast<std::size_t>(s)] = 1;
  }
  std::sort(trips.begin(), trips.end(), [](const DayTrip& a, const DayTrip& b) { return a.start < b.start; });
  return true;
}

}  // namespace

double VehicleParams::auxiliary_kw(double t) const {
  return aux_base_kw + aux_heat_kw_per_k * std::max(0.0, aux_heat_below_c - t) +
         aux_cool_kw_per_k * std::max(0.0, t - aux_cool_above_c);
}

void VehicleParams::validate() const {
  auto in_unit = [](double e) { return e > 0.0 && e <= 1.0; };
  if (!(battery_kwh > 0.0)) throw UserError("vehicle: battery_kwh must be positive");
  if (!in_unit(drivetrain_efficiency) || !in_unit(charge_efficiency) || !in_unit(discharge_efficiency))
    throw UserError("vehicle: efficiencies must lie in (0, 1]");
  if (mass_kg <= 0.0 || drag_coefficient < 0.0 || frontal_area_m2 < 0.0 || rolling_resistance < 0.0)
    throw UserError("vehicle: physical parameters must be non-negative");
}

std::vector<int> MobilitySchedule::location_by_slot() const {
  std::vector<int> loc(slots, static_cast<int>(initial_location));
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const auto& t = trips[i];
    std::size_t next = i + 1 < trips.size() ? trips[i + 1].start_slot : slots;
    for (std::size_t s = t.start_slot; s < std::min(t.end_slot, slots); ++s) loc[s] = -1;
    for (std::size_t s = t.end_slot; s < std::min(next, slots); ++s) loc[s] = static_cast<int>(t.destination);
  }
  return loc;
}

const mobility::DistributionSet& DaySources::for_day(DayType d) const {
  const mobility::DistributionSet* s = d == DayType::weekday ? weekday : d == DayType::saturday ? saturday : sunday;
  if (s == nullptr) throw UserError("no distribution set for " + std::string(to_string(d)));
  return *s;
}

DayType day_type_of(std::size_t day, int start_dow) {
  auto dow = (day + static_cast<std::size_t>(start_dow)) % 7;
  return dow < 5 ? DayType::weekday : dow == 5 ? DayType::saturday : DayType::sunday;
}

MobilitySchedule sample_mobility(const DaySources& sources, std::size_t horizon_days, std::uint64_t seed,
                                 const SamplingOptions& options) {
  Rng rng(seed);
  MobilitySchedule sched;
  sched.slots = horizon_days * slots_per_day;
  Destination here = Destination::home;
  for (std::size_t day = 0; day < horizon_days; ++day) {
    const auto& set = sources.for_day(day_type_of(day, options.start_dow));
    if (set.p_ntrips.empty()) throw UserError("cell " + set.cell.file_stem() + ": empty trip-count table");
    const bool ranked = set.cell.ownership == Ownership::private_car;
    std::vector<DayTrip> trips;
    bool ok = false;
    for (int attempt = 0; attempt < options.max_day_failures && !ok; ++attempt) {
      trips.clear();
      int n = static_cast<int>(rng.discrete(set.p_ntrips));
      ok = ranked ? sample_ranked_day(set, n, options.rejection_budget, options.return_home, rng, trips)
                  : sample_unranked_day(set, n, rng, trips);
    }
    if (!ok)
      throw UserError("cell " + set.cell.file_stem() + ": no feasible day after " +
                      std::to_string(options.max_day_failures) + " attempts");
    std::size_t base = day * slots_per_day;
    for (const auto& t : trips) {
      Trip out;
      out.start_slot = base + static_cast<std::size_t>(t.start);
      out.end_slot = out.start_slot + static_cast<std::size_t>(t.slots);
      out.duration_min = t.duration;
      out.distance_km = t.distance;
      out.origin = here;
      out.destination = t.destination;
      out.appended = t.appended;
      sched.trips.push_back(out);
      here = t.destination;
    }
  }
  return sched;
}

MobilitySchedule sample_mobility(const mobility::DistributionSet& dist, std::size_t horizon_days,
                                 std::uint64_t seed, const SamplingOptions& options) {
  return sample_mobility(DaySources{&dist, &dist, &dist}, horizon_days, seed, options);
}

double trip_energy_kwh(double distance_km, double duration_min, double temperature_c, const VehicleParams& vp,
                       bool* clamped) {
  if (clamped != nullptr) *clamped = false;
  if (distance_km <= 0.0) return 0.0;
  double hours = duration_min / 60.0;
  double v_kmh = hours > 0.0 ? distance_km / hours : std::numeric_limits<double>::infinity();
  if (v_kmh > max_speed_kmh) {
    v_kmh = max_speed_kmh;
    hours = distance_km / v_kmh;
    if (clamped != nullptr) *clamped = true;
  }
  double v = v_kmh / 3.6;
  double traction_w = 0.5 * air_density * vp.drag_coefficient * vp.frontal_area_m2 * v * v * v +
                      vp.mass_kg * gravity * vp.rolling_resistance * v;
  double power_kw = traction_w / vp.drivetrain_efficiency / 1000.0 + vp.auxiliary_kw(temperature_c);
  return power_kw * hours;
}

std::vector<double> driving_consumption(const MobilitySchedule& sched, const VehicleParams& vp,
                                        const std::vector<double>& temperature_c,
                                        std::vector<std::string>* warnings) {
  std::vector<double> out(sched.slots, 0.0);
  std::size_t hours = (sched.slots + slots_per_hour - 1) / slots_per_hour;
  if (temperature_c.size() < hours)
    throw UserError("temperature series covers " + std::to_string(temperature_c.size()) + " h, horizon needs " +
                    std::to_string(hours));
  for (const auto& t : sched.trips) {
    if (t.end_slot > sched.slots || t.end_slot <= t.start_slot)
      throw UserError("trip at slot " + std::to_string(t.start_slot) + " lies outside the horizon");
    bool clamped = false;
    double e = trip_energy_kwh(t.distance_km, t.duration_min, temperature_c[t.start_slot / slots_per_hour], vp,
                               &clamped);
    if (clamped && warnings != nullptr)
      warnings->push_back("trip at slot " + std::to_string(t.start_slot) + ": " + io::format_double(t.distance_km) +
                          " km in " + io::format_double(t.duration_min) + " min exceeds 150 km/h; clamped");
    double per = e / static_cast<double>(t.end_slot - t.start_slot);
    for (std::size_t s = t.start_slot; s < t.end_slot; ++s) out[s] = per;
  }
  return out;
}

AvailabilityConfig AvailabilityConfig::defaults() {
  AvailabilityConfig c;
  c.private_options[Destination::home] = {0.9, {{11.0, 1.0}}};
  c.private_options[Destination::work_school] = {0.5, {{11.0, 1.0}}};
  c.private_options[Destination::leisure] = {0.2, {{22.0, 1.0}}};
  c.private_options[Destination::errands] = {0.2, {{22.0, 1.0}}};
  return c;
}

void AvailabilityConfig::validate() const {
  for (auto d : all_destinations) {
    auto it = private_options.find(d);
    if (it == private_options.end())
      throw UserError("availability config has no entry for destination " + std::string(to_string(d)));
    const auto& o = it->second;
    if (o.plug_probability < 0.0 || o.plug_probability > 1.0)
      throw UserError("availability: plug probability for " + std::string(to_string(d)) + " outside [0, 1]");
    if (o.plug_probability > 0.0 && o.ratings.empty())
      throw UserError("availability: no power rating for " + std::string(to_string(d)));
    for (auto [kw, p] : o.ratings)
      if (kw < 0.0 || p < 0.0) throw UserError("availability: negative rating or probability");
  }
  if (shared_rating_kw < 0.0) throw UserError("availability: negative shared rating");
}

AvailabilitySeries grid_availability(const MobilitySchedule& sched, const AvailabilityConfig& config,
                                     Ownership ownership, std::uint64_t seed) {
  AvailabilitySeries out;
  out.plugged.assign(sched.slots, 0);
  out.rating_kw.assign(sched.slots, 0.0);
  if (ownership == Ownership::private_car) config.validate();
  Rng rng(seed);

  auto fill = [&](std::size_t from, std::size_t to, Destination where) {
    to = std::min(to, sched.slots);
    bool plug = true;
    double kw = config.shared_rating_kw;
    if (ownership == Ownership::private_car) {
      const auto& o = config.private_options.at(where);
      plug = rng.bernoulli(o.plug_probability);
      std::vector<double> w;
      for (auto [r, p] : o.ratings) w.push_back(p);
      std::size_t k = rng.discrete(w);
      kw = k < o.ratings.size() ? o.ratings[k].first : 0.0;
    }
    if (!plug || kw <= 0.0) return;
    for (std::size_t s = from; s < to; ++s) {
      out.plugged[s] = 1;
      out.rating_kw[s] = kw;
    }
  };

  std::size_t first = sched.trips.empty() ? sched.slots : sched.trips.front().start_slot;
  fill(0, first, sched.initial_location);
  for (std::size_t i = 0; i < sched.trips.size(); ++i) {
    std::size_t next = i + 1 < sched.trips.size() ? sched.trips[i + 1].start_slot : sched.slots;
    fill(sched.trips[i].end_slot, next, sched.trips[i].destination);
  }
  return out;
}

DemandSeries grid_demand(const std::vector<double>& cons, const AvailabilitySeries& avail, const VehicleParams& vp,
                         ChargingRule rule, double initial_soc_kwh) {
  const std::size_t n = cons.size();
  if (avail.plugged.size() != n || avail.rating_kw.size() != n)
    throw UserError("consumption and availability series differ in length");
  const double cap = vp.battery_kwh;
  const double eta = vp.charge_efficiency;

  DemandSeries out;
  out.grid_kwh.assign(n, 0.0);
  out.soc_kwh.assign(n, 0.0);
  out.initial_soc_kwh = initial_soc_kwh;
  double soc = initial_soc_kwh;
  double balanced_kw = 0.0;
  std::size_t trip_start = 0;

  for (std::size_t t = 0; t < n; ++t) {
    const bool plugged = avail.plugged[t] != 0 && avail.rating_kw[t] > 0.0;
    if (plugged) {
      const double rating = avail.rating_kw[t];
      const bool interval_start = t == 0 || avail.plugged[t - 1] == 0 || avail.rating_kw[t - 1] != rating;
      if (rule == ChargingRule::balanced && interval_start) {
        std::size_t e = t;
        while (e < n && avail.plugged[e] != 0 && avail.rating_kw[e] == rating) ++e;
        double hours = static_cast<double>(e - t) * slot_hours;
        balanced_kw = std::max(0.0, cap - soc) / eta / hours;
        if (balanced_kw > rating) {
          balanced_kw = rating;
          // Energy needed until the vehicle is plugged again.
          double need = 0.0;
          for (std::size_t s = e; s < n && !(avail.plugged[s] != 0 && avail.rating_kw[s] > 0.0); ++s) need += cons[s];
          if (soc + rating * hours * eta < need) out.shortfall_intervals.push_back(t);
        }
      }
      double kw = rule == ChargingRule::immediate ? rating : balanced_kw;
      double g = std::min(kw * slot_hours, std::max(0.0, cap - soc) / eta);
      out.grid_kwh[t] = g;
      soc = std::min(cap, soc + g * eta);
    }
    if (cons[t] > 0.0 && (t == 0 || cons[t - 1] <= 0.0)) trip_start = t;
    soc -= cons[t];
    if (soc < -1e-9 && out.feasible) {
      out.feasible = false;
      out.infeasibility = "trip departing at slot " + std::to_string(trip_start) +
                          " drains the battery (state of charge " + io::format_fixed(soc, 3) + " kWh)";
    }
    out.soc_kwh[t] = soc;
  }
  return out;
}

DemandSeries grid_demand_cyclic(const std::vector<double>& cons, const AvailabilitySeries& avail,
                                const VehicleParams& vp, ChargingRule rule) {
  double soc0 = vp.battery_kwh;
  DemandSeries r;
  for (int it = 0; it < 200; ++it) {
    r = grid_demand(cons, avail, vp, rule, soc0);
    if (!r.feasible) return r;
    double end = r.soc_kwh.empty() ? soc0 : r.soc_kwh.back();
    if (std::abs(end - soc0) <= 1e-9) return r;
    soc0 = std::clamp(end, 0.0, vp.battery_kwh);
  }
  r.feasible = false;
  r.infeasibility = "no cyclic state of charge: the schedule consumes more than it can recharge";
  return r;
}

namespace {
std::vector<double> hourly(const std::vector<double>& v, bool mean) {
  if (v.size() % slots_per_hour != 0)
    throw UserError("series of " + std::to_string(v.size()) + " slots is not a whole number of hours");
  std::vector<double> out(v.size() / slots_per_hour, 0.0);
  for (std::size_t h = 0; h < out.size(); ++h) {
    double s = 0.0;
    for (int k = 0; k < slots_per_hour; ++k) s += v[h * slots_per_hour + static_cast<std::size_t>(k)];
    out[h] = mean ? s / slots_per_hour : s;
  }
  return out;
}
}  // namespace

std::vector<double> resample_hourly_sum(const std::vector<double>& per_slot) { return hourly(per_slot, false); }
std::vector<double> resample_hourly_mean(const std::vector<double>& per_slot) { return hourly(per_slot, true); }

std::vector<double> default_temperature(std::size_t hours, std::size_t hour_of_year) {
  constexpr double winter = -2.0, summer = 19.0;
  std::vector<double> out(hours);
  for (std::size_t i = 0; i < hours; ++i) {
    double h = static_cast<double>((hour_of_year + i) % 8760);
    double day = h / 24.0;
    double seasonal = 0.5 * (winter + summer) - 0.5 * (summer - winter) * std::cos(2.0 * std::numbers::pi * (day - 15.0) / 365.0);
    double daily = -3.0 * std::cos(2.0 * std::numbers::pi * (std::fmod(h, 24.0) - 4.0) / 24.0);
    out[i] = seasonal + daily;
  }
  return out;
}

std::vector<double> read_hourly_series(const std::filesystem::path& path, const std::string& column) {
  auto table = io::read_table_file(path);
  std::size_t c = table.require_column(column);
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto v = io::parse_double(table.rows[i][c]);
    if (!v)
      throw UserError(path.string() + ":" + std::to_string(table.line_numbers[i]) + ": bad value in column " +
                      column);
    out.push_back(*v);
  }
  return out;
}

VehicleProfile synthesize_profile(const ProfileSpec& spec, const DaySources& sources, const SynthConfig& config,
                                  std::uint64_t master_seed) {
  spec.vehicle.validate();
  if (config.horizon_hours == 0 || config.horizon_hours % 24 != 0)
    throw UserError("horizon must be a positive multiple of 24 h");
  const std::size_t days = config.horizon_hours / 24;
  std::vector<double> temperature =
      config.temperature_c.empty() ? default_temperature(config.horizon_hours, config.start_hour_of_year)
                                   : config.temperature_c;

  SamplingOptions sampling = config.sampling;
  sampling.return_home = spec.ownership == Ownership::private_car;
  const std::uint64_t stream = mix_seed(master_seed, fnv1a(spec.id));

  VehicleProfile p;
  p.spec = spec;
  for (int attempt = 0; attempt <= config.max_resamples; ++attempt) {
    std::uint64_t seed = mix_seed(stream, static_cast<std::uint64_t>(attempt));
    p.warnings.clear();
    p.schedule = sample_mobility(sources, days, mix_seed(seed, 1), sampling);
    p.consumption_kwh = driving_consumption(p.schedule, spec.vehicle, temperature, &p.warnings);
    p.availability = grid_availability(p.schedule, config.availability, spec.ownership, mix_seed(seed, 2));
    p.immediate = grid_demand_cyclic(p.consumption_kwh, p.availability, spec.vehicle, ChargingRule::immediate);
    if (p.immediate.feasible)
      p.balanced = grid_demand_cyclic(p.consumption_kwh, p.availability, spec.vehicle, ChargingRule::balanced);
    if (!p.immediate.feasible || !p.balanced.feasible) {
      p.resamples = attempt + 1;
      continue;
    }
    p.hourly_consumption_kwh = resample_hourly_sum(p.consumption_kwh);
    p.hourly_rating_kw = resample_hourly_mean(p.availability.rating_kw);
    p.hourly_balanced_kwh = resample_hourly_sum(p.balanced.grid_kwh);
    p.hourly_immediate_kwh = resample_hourly_sum(p.immediate.grid_kwh);
    return p;
  }
  throw UserError("profile " + spec.id + ": every sampled schedule is infeasible for a " +
                  io::format_double(spec.vehicle.battery_kwh) + " kWh battery (" + p.immediate.infeasibility + ")");
}

std::vector<VehicleProfile> synthesize_profiles(const std::vector<ProfileSpec>& specs,
                                                const std::vector<DaySources>& sources, const SynthConfig& config,
                                                std::uint64_t master_seed, cluster::Exec exec) {
  if (specs.size() != sources.size()) throw UserError("profile specs and sources differ in count");
  const auto n = static_cast<std::ptrdiff_t>(specs.size());
  std::vector<VehicleProfile> out(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  auto one = [&](std::ptrdiff_t i) {
    auto k = static_cast<std::size_t>(i);
    try {
      out[k] = synthesize_profile(specs[k], sources[k], config, master_seed);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (exec == cluster::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_profile_series(const VehicleProfile& p, std::ostream& out) {
  io::TableWriter w(out, {"timestamp_min", "consumption_kwh", "plugged", "rating_kw", "demand_kwh",
                          "demand_immediate_kwh"});
  for (std::size_t s = 0; s < p.consumption_kwh.size(); ++s) {
    w.cell(s * static_cast<std::size_t>(slot_minutes))
        .cell(p.consumption_kwh[s])
        .cell(static_cast<int>(p.availability.plugged[s]))
        .cell(p.availability.rating_kw[s])
        .cell(p.balanced.grid_kwh[s])
        .cell(p.immediate.grid_kwh[s]);
    w.end_row();
  }
}

void write_manifest(const std::vector<VehicleProfile>& profiles, std::ostream& out) {
  io::TableWriter w(out, {"profile_id", "location", "cluster", "ownership", "battery_kwh", "weight", "trips",
                          "resamples"});
  for (const auto& p : profiles) {
    w.cell(p.spec.id)
        .cell(to_string(p.spec.location))
        .cell(p.spec.cluster)
        .cell(to_string(p.spec.ownership))
        .cell(p.spec.vehicle.battery_kwh)
        .cell(p.spec.weight)
        .cell(p.schedule.trips.size())
        .cell(p.resamples);
    w.end_row();
  }
}

}  // namespace carshare::ev
