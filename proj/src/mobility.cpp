#include "carshare/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "json.hpp"

namespace carshare::mobility {

using json = nlohmann::json;

std::string CellKey::file_stem() const {
  std::string c = cluster == location_level ? "all" : "c" + std::to_string(cluster);
  return std::string(to_string(location)) + "_" + c + "_" + std::string(to_string(day_type)) + "_" +
         std::string(to_string(ownership));
}

int duration_bin(double minutes) {
  if (minutes < 120.0) return static_cast<int>(std::floor(std::max(minutes, 0.0) / 5.0));
  return 24 + static_cast<int>(std::floor((minutes - 120.0) / 15.0));
}

int distance_bin(double km) {
  if (km < 20.0) return static_cast<int>(std::floor(std::max(km, 0.0)));
  if (km < 100.0) return 20 + static_cast<int>(std::floor((km - 20.0) / 5.0));
  return 36 + static_cast<int>(std::floor((km - 100.0) / 50.0));
}

double DistributionSet::mean_trips() const {
  double m = 0.0;
  for (std::size_t k = 0; k < p_ntrips.size(); ++k) m += static_cast<double>(k) * p_ntrips[k];
  return m;
}

const DepartureSlice* DistributionSet::departure(Destination d, int total, int rank) const {
  for (auto key : {std::tuple{d, total, rank}, std::tuple{d, total, any}, std::tuple{d, any, any}}) {
    auto it = p_departure.find(key);
    if (it != p_departure.end() && it->second.count > 0.0) return &it->second;
  }
  return nullptr;
}

const DurDistSlice* DistributionSet::dur_dist(Destination d, int total) const {
  for (auto key : {std::pair{d, total}, std::pair{d, any}}) {
    auto it = p_dur_dist.find(key);
    if (it != p_dur_dist.end() && it->second.count > 0.0) return &it->second;
  }
  return nullptr;
}

const DestinationSlice* DistributionSet::destination(int total, int rank) const {
  for (auto key : {std::pair{total, rank}, std::pair{total, any}, std::pair{any, any}}) {
    auto it = p_destination.find(key);
    if (it != p_destination.end() && it->second.count > 0.0) return &it->second;
  }
  return nullptr;
}

void DistributionSet::validate() const {
  const std::string where = "distribution set " + cell.file_stem();
  auto check = [&](double sum, const std::string& what) {
    if (std::abs(sum - 1.0) > 1e-9)
      throw UserError(where + ": " + what + " sums to " + io::format_double(sum));
  };
  if (p_ntrips.size() != static_cast<std::size_t>(n_max) + 1)
    throw UserError(where + ": trip-count table has wrong length");
  if (!empty()) check(std::accumulate(p_ntrips.begin(), p_ntrips.end(), 0.0), "p_ntrips");
  for (const auto& [k, s] : p_departure)
    if (s.count > 0.0) check(std::accumulate(s.p.begin(), s.p.end(), 0.0), "a departure slice");
  for (const auto& [k, s] : p_dur_dist) {
    if (s.count <= 0.0) continue;
    double sum = 0.0;
    for (const auto& b : s.bins) sum += b.p;
    check(sum, "a duration/distance slice");
  }
  for (const auto& [k, s] : p_destination)
    if (s.count > 0.0) check(std::accumulate(s.p.begin(), s.p.end(), 0.0), "a destination slice");
}

namespace {

struct BinAcc {
  double n = 0.0, minutes = 0.0, km = 0.0;
};

struct DurDistAcc {
  double count = 0.0;
  std::map<std::pair<int, int>, BinAcc> bins;

  void add(double weight, int db, int kb, double minutes_sum, double km_sum) {
    count += weight;
    auto& b = bins[{db, kb}];
    b.n += weight;
    b.minutes += minutes_sum;
    b.km += km_sum;
  }

  DurDistSlice finish() const {
    DurDistSlice s;
    s.count = count;
    for (const auto& [key, b] : bins) {
      if (b.n <= 0.0) continue;
      s.bins.push_back({key.first, key.second, b.n / count, b.minutes / b.n, b.km / b.n});
    }
    return s;
  }
};

template <std::size_t N>
void normalize(std::array<double, N>& p, double count) {
  for (auto& v : p) v /= count;
}

}  // namespace

DistributionSet estimate_distributions(const CellKey& cell, const std::vector<diary::TripRecord>& trips,
                                       const EstimateOptions& options) {
  DistributionSet set;
  set.cell = cell;
  set.cell.ownership = Ownership::private_car;
  set.n_max = options.n_max;
  set.p_ntrips.assign(static_cast<std::size_t>(options.n_max) + 1, 0.0);

  std::vector<std::vector<const diary::TripRecord*>> days;
  std::unordered_map<std::string, std::size_t> pos;
  for (const auto& t : trips) {
    auto [it, fresh] = pos.try_emplace(t.person_day_id, days.size());
    if (fresh) days.emplace_back();
    days[it->second].push_back(&t);
  }

  std::map<std::tuple<Destination, int, int>, DepartureSlice> dep;
  std::map<std::pair<Destination, int>, DurDistAcc> dd;
  std::map<std::pair<int, int>, DestinationSlice> dest;
  for (auto& day : days) {
    std::stable_sort(day.begin(), day.end(),
                     [](const auto* a, const auto* b) { return a->departure < b->departure; });
    const int n = static_cast<int>(day.size());
    if (n > options.n_max)
      throw UserError("person-day " + day.front()->person_day_id + " has " + std::to_string(n) +
                      " trips, more than n_max = " + std::to_string(options.n_max));
    set.p_ntrips[static_cast<std::size_t>(n)] += 1.0;
    for (int r = 1; r <= n; ++r) {
      const auto& t = *day[static_cast<std::size_t>(r - 1)];
      const auto d = t.destination;
      const auto slot = static_cast<std::size_t>(t.departure / slot_minutes);
      for (auto key : {std::tuple{d, n, r}, std::tuple{d, n, any}, std::tuple{d, any, any}}) {
        auto& s = dep[key];
        s.count += 1.0;
        s.p[slot] += 1.0;
      }
      const int db = duration_bin(t.duration_min), kb = distance_bin(t.distance_km);
      for (auto key : {std::pair{d, n}, std::pair{d, any}})
        dd[key].add(1.0, db, kb, t.duration_min, t.distance_km);
      for (auto key : {std::pair{n, r}, std::pair{n, any}, std::pair{any, any}}) {
        auto& s = dest[key];
        s.count += 1.0;
        s.p[static_cast<std::size_t>(d)] += 1.0;
      }
    }
  }
  set.person_days = static_cast<double>(days.size());
  if (set.person_days > 0.0)
    for (auto& v : set.p_ntrips) v /= set.person_days;
  for (auto& [k, s] : dep) normalize(s.p, s.count);
  for (auto& [k, s] : dest) normalize(s.p, s.count);
  set.p_departure = std::move(dep);
  set.p_destination = std::move(dest);
  for (const auto& [k, acc] : dd) set.p_dur_dist[k] = acc.finish();
  return set;
}

double SubstitutionSpec::shared_cars() const {
  if (!(substitution_rate > 0.0)) throw UserError("substitution rate must be positive");
  if (private_cars <= 0.0) return 0.0;
  return std::max(1.0, std::round(private_cars / substitution_rate));
}

double shared_mean_trips(const SubstitutionSpec& spec, const DistributionSet& private_set) {
  const double shared = spec.shared_cars();
  if (shared <= 0.0) throw UserError("cell " + private_set.cell.file_stem() + " has no shared cars");
  return private_set.mean_trips() * spec.private_cars / shared;
}

std::vector<double> transport_ntrips(const std::vector<double>& p, double f, int n_max) {
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    const double x = f * static_cast<double>(k);
    if (x >= n_max) {
      out.back() += p[k];
      continue;
    }
    const double lo = std::floor(x);
    const auto i = static_cast<std::size_t>(lo);
    out[i] += p[k] * (lo + 1.0 - x);
    out[i + 1] += p[k] * (x - lo);
  }
  return out;
}

std::vector<double> recenter_ntrips(const std::vector<double>& p, double target_mean, int n_max) {
  auto mean = [](const std::vector<double>& q) {
    double m = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) m += static_cast<double>(k) * q[k];
    return m;
  };
  const double base = mean(p);
  if (!(base > 0.0)) throw UserError("cannot recentre a trip-count distribution with zero mean");
  if (!(target_mean >= 0.0)) throw UserError("negative target mean");
  const double ceiling = static_cast<double>(n_max) * (1.0 - (p.empty() ? 0.0 : p[0]));
  if (target_mean > ceiling + 1e-12)
    throw UserError("shared trip mean " + io::format_double(target_mean) + " exceeds what n_max = " +
                    std::to_string(n_max) + " allows (" + io::format_double(ceiling) +
                    "); raise n_max");
  double lo = target_mean / base;
  auto q = transport_ntrips(p, lo, n_max);
  if (mean(q) >= target_mean - 1e-12) return q;
  // Truncation lost mass above n_max; the mean is monotone in f.
  double hi = lo;
  while (mean(transport_ntrips(p, hi, n_max)) < target_mean) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean(transport_ntrips(p, mid, n_max)) < target_mean) lo = mid;
    else hi = mid;
  }
  return transport_ntrips(p, hi, n_max);
}

DistributionSet derive_shared_distributions(const DistributionSet& private_set,
                                            const SubstitutionSpec& spec) {
  if (private_set.empty())
    throw UserError("cannot derive shared distributions from empty cell " + private_set.cell.file_stem());
  DistributionSet s;
  s.cell = private_set.cell;
  s.cell.ownership = Ownership::shared;
  s.n_max = private_set.n_max;
  s.person_days = spec.shared_cars();
  s.p_ntrips = recenter_ntrips(private_set.p_ntrips, shared_mean_trips(spec, private_set), s.n_max);

  for (const auto& [key, slice] : private_set.p_departure) {
    const auto& [d, total, rank] = key;
    if (total == any || rank == any) continue;
    auto& out = s.p_departure[{d, any, any}];
    for (std::size_t b = 0; b < slice.p.size(); ++b) out.p[b] += slice.count * slice.p[b];
    out.count += slice.count;
  }
  for (auto& [k, slice] : s.p_departure) normalize(slice.p, slice.count);

  std::map<Destination, DurDistAcc> dd;
  for (const auto& [key, slice] : private_set.p_dur_dist) {
    if (key.second == any) continue;
    for (const auto& b : slice.bins) {
      const double w = slice.count * b.p;
      dd[key.first].add(w, b.duration_bin, b.distance_bin, w * b.mean_duration_min, w * b.mean_distance_km);
    }
  }
  for (const auto& [d, acc] : dd) s.p_dur_dist[{d, any}] = acc.finish();

  for (const auto& [key, slice] : private_set.p_destination) {
    if (key.first == any || key.second == any) continue;
    auto& out = s.p_destination[{any, any}];
    for (std::size_t i = 0; i < slice.p.size(); ++i) out.p[i] += slice.count * slice.p[i];
    out.count += slice.count;
  }
  for (auto& [k, slice] : s.p_destination) normalize(slice.p, slice.count);
  return s;
}

// ---- serialization ----

std::string DistributionSet::to_json() const {
  json j;
  j["schema"] = "carshare.distribution_set/1";
  j["cell"] = {{"location", to_string(cell.location)},
               {"cluster", cell.cluster},
               {"day_type", to_string(cell.day_type)},
               {"ownership", to_string(cell.ownership)}};
  j["n_max"] = n_max;
  j["person_days"] = person_days;
  j["p_ntrips"] = p_ntrips;
  json dep = json::array();
  for (const auto& [key, s] : p_departure) {
    json slots = json::array();
    for (std::size_t b = 0; b < s.p.size(); ++b)
      if (s.p[b] != 0.0) slots.push_back({b, s.p[b]});
    dep.push_back({{"destination", to_string(std::get<0>(key))},
                   {"total", std::get<1>(key)},
                   {"rank", std::get<2>(key)},
                   {"count", s.count},
                   {"slots", slots}});
  }
  j["p_departure"] = dep;
  json dd = json::array();
  for (const auto& [key, s] : p_dur_dist) {
    json bins = json::array();
    for (const auto& b : s.bins)
      bins.push_back({b.duration_bin, b.distance_bin, b.p, b.mean_duration_min, b.mean_distance_km});
    dd.push_back({{"destination", to_string(key.first)},
                  {"total", key.second},
                  {"count", s.count},
                  {"bins", bins}});
  }
  j["p_dur_dist"] = dd;
  json dest = json::array();
  for (const auto& [key, s] : p_destination)
    dest.push_back({{"total", key.first}, {"rank", key.second}, {"count", s.count}, {"p", s.p}});
  j["p_destination"] = dest;
  return j.dump(1) + "\n";
}

DistributionSet DistributionSet::from_json(const std::string& text) {
  DistributionSet s;
  try {
    json j = json::parse(text);
    if (j.at("schema") != "carshare.distribution_set/1")
      throw UserError("unsupported distribution set schema " + j.at("schema").dump());
    const auto& c = j.at("cell");
    s.cell.location = location_from(c.at("location").get<std::string>());
    s.cell.cluster = c.at("cluster").get<int>();
    s.cell.day_type = day_type_from(c.at("day_type").get<std::string>());
    s.cell.ownership = ownership_from(c.at("ownership").get<std::string>());
    s.n_max = j.at("n_max").get<int>();
    s.person_days = j.at("person_days").get<double>();
    s.p_ntrips = j.at("p_ntrips").get<std::vector<double>>();
    for (const auto& e : j.at("p_departure")) {
      DepartureSlice sl;
      sl.count = e.at("count").get<double>();
      for (const auto& v : e.at("slots")) {
        const auto b = v.at(0).get<std::size_t>();
        if (b >= sl.p.size()) throw UserError("departure slot out of range");
        sl.p[b] = v.at(1).get<double>();
      }
      s.p_departure[{destination_from(e.at("destination").get<std::string>()), e.at("total").get<int>(),
                     e.at("rank").get<int>()}] = sl;
    }
    for (const auto& e : j.at("p_dur_dist")) {
      DurDistSlice sl;
      sl.count = e.at("count").get<double>();
      for (const auto& v : e.at("bins"))
        sl.bins.push_back({v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<double>(),
                           v.at(3).get<double>(), v.at(4).get<double>()});
      s.p_dur_dist[{destination_from(e.at("destination").get<std::string>()), e.at("total").get<int>()}] = sl;
    }
    for (const auto& e : j.at("p_destination")) {
      DestinationSlice sl;
      sl.count = e.at("count").get<double>();
      sl.p = e.at("p").get<std::array<double, 4>>();
      s.p_destination[{e.at("total").get<int>(), e.at("rank").get<int>()}] = sl;
    }
  } catch (const json::exception& e) {
    throw UserError(std::string("distribution set: ") + e.what());
  }
  s.validate();
  return s;
}

void save_catalog(const DistributionCatalog& catalog, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [key, set] : catalog) io::write_file(dir / (key.file_stem() + ".json"), set.to_json());
}

DistributionCatalog load_catalog(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw UserError("no distribution directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  DistributionCatalog catalog;
  for (const auto& f : files) {
    auto set = DistributionSet::from_json(io::read_file(f));
    catalog[set.cell] = std::move(set);
  }
  return catalog;
}

}  // namespace carshare::mobility
