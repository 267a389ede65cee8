#include "carshare/diary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "carshare/rng.hpp"
#include "json.hpp"

namespace carshare::diary {

using json = nlohmann::json;

std::size_t DaySequence::on_move_count() const {
  return static_cast<std::size_t>(
      std::count(blocks.begin(), blocks.end(), BlockState::on_move));
}

const std::vector<std::string>& required_fields() {
  static const std::vector<std::string> f{
      "person_day_id", "departure",     "arrival",  "distance_km",     "destination",
      "location_type", "day_type",      "is_driver", "is_professional"};
  return f;
}

const std::vector<std::string>& optional_fields() {
  static const std::vector<std::string> f{"duration_min", "next_day"};
  return f;
}

ColumnMapping ColumnMapping::identity() {
  ColumnMapping m;
  for (const auto& f : required_fields()) m.columns[f] = f;
  for (const auto& f : optional_fields()) m.columns[f] = f;
  return m;
}

ColumnMapping ColumnMapping::from_json(const std::string& text) {
  ColumnMapping m = identity();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UserError(std::string("column mapping: ") + e.what());
  }
  if (j.contains("columns")) {
    for (const auto& [field, source] : j["columns"].items()) {
      const auto& req = required_fields();
      const auto& opt = optional_fields();
      if (std::find(req.begin(), req.end(), field) == req.end() &&
          std::find(opt.begin(), opt.end(), field) == opt.end())
        throw UserError("column mapping: unknown field '" + field + "'");
      m.columns[field] = source.get<std::string>();
    }
  }
  if (j.contains("values")) {
    for (const auto& [field, table] : j["values"].items())
      for (const auto& [code, value] : table.items())
        m.values[field][code] = value.get<std::string>();
  }
  m.allow_extra_columns = j.value("allow_extra_columns", false);
  return m;
}

ColumnMapping ColumnMapping::load(const std::filesystem::path& path) {
  return from_json(io::read_file(path));
}

namespace {

enum class TimeFormat { clock, minutes };

std::optional<int> parse_time(std::string_view s, TimeFormat fmt) {
  s = io::trim(s);
  if (fmt == TimeFormat::minutes) {
    auto v = io::parse_int(s);
    if (!v || *v < 0 || *v > 3 * minutes_per_day) return std::nullopt;
    return static_cast<int>(*v);
  }
  auto colon = s.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto h = io::parse_int(s.substr(0, colon));
  auto m = io::parse_int(s.substr(colon + 1));
  if (!h || !m || *h < 0 || *h > 47 || *m < 0 || *m > 59) return std::nullopt;
  return static_cast<int>(*h * 60 + *m);
}

struct FieldReader {
  const ColumnMapping& mapping;
  const std::vector<std::string>& row;
  const std::unordered_map<std::string, std::size_t>& index;

  std::optional<std::string> get(const std::string& field) const {
    auto it = index.find(field);
    if (it == index.end()) return std::nullopt;
    std::string raw(io::trim(row[it->second]));
    auto vt = mapping.values.find(field);
    if (vt != mapping.values.end()) {
      auto code = vt->second.find(raw);
      if (code != vt->second.end()) return code->second;
    }
    return raw;
  }
};

}  // namespace

ParseResult parse_diaries(std::istream& in, const ColumnMapping& mapping) {
  io::Table table = io::read_table(in);

  std::unordered_map<std::string, std::size_t> field_col;
  std::vector<bool> used(table.header.size(), false);
  for (const auto& [field, source] : mapping.columns) {
    auto col = table.column(source);
    if (!col) {
      const auto& req = required_fields();
      if (std::find(req.begin(), req.end(), field) != req.end())
        throw UserError("diary schema: missing column '" + source + "' (field " + field + ")");
      continue;
    }
    field_col[field] = *col;
    used[*col] = true;
  }
  if (!mapping.allow_extra_columns) {
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (!used[c]) throw UserError("diary schema: unexpected column '" + table.header[c] + "'");
  }

  auto detect = [&](const std::string& field) {
    const std::size_t col = field_col.at(field);
    for (const auto& row : table.rows) {
      if (col < row.size() && !io::trim(row[col]).empty())
        return row[col].find(':') != std::string::npos ? TimeFormat::clock : TimeFormat::minutes;
    }
    return TimeFormat::minutes;
  };
  const TimeFormat dep_fmt = detect("departure");
  const TimeFormat arr_fmt = detect("arrival");

  ParseResult result;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    auto reject = [&](std::string why) { result.rejected.push_back({line, std::move(why)}); };
    if (row.size() != table.header.size()) {
      reject("expected " + std::to_string(table.header.size()) + " fields, found " +
             std::to_string(row.size()));
      continue;
    }
    FieldReader f{mapping, row, field_col};
    TripRecord t;
    t.person_day_id = *f.get("person_day_id");
    if (t.person_day_id.empty()) {
      reject("missing person_day_id");
      continue;
    }
    auto dep = parse_time(*f.get("departure"), dep_fmt);
    auto arr = parse_time(*f.get("arrival"), arr_fmt);
    if (!dep) {
      reject("unparseable departure time");
      continue;
    }
    if (!arr) {
      reject("unparseable arrival time");
      continue;
    }
    if (*dep >= minutes_per_day) {
      reject("departure out of range");
      continue;
    }
    t.departure = *dep;
    t.arrival = *arr;
    if (auto nd = f.get("next_day"); nd && !nd->empty()) {
      auto b = io::parse_bool(*nd);
      if (!b) {
        reject("bad next_day flag");
        continue;
      }
      if (*b) t.arrival += minutes_per_day;
    }
    if (t.arrival < t.departure) {
      reject("negative duration");
      continue;
    }
    if (t.arrival == t.departure) {
      reject("zero duration");
      continue;
    }
    t.duration_min = t.arrival - t.departure;
    if (auto d = f.get("duration_min"); d && !d->empty()) {
      auto v = io::parse_int(*d);
      if (!v || *v != t.duration_min) {
        reject("duration mismatch");
        continue;
      }
    }
    auto dist = io::parse_double(*f.get("distance_km"));
    if (!dist || !(*dist > 0.0)) {
      reject("non-positive or unparseable distance");
      continue;
    }
    t.distance_km = *dist;
    auto dest = parse_destination(*f.get("destination"));
    auto loc = parse_location(*f.get("location_type"));
    auto day = parse_day_type(*f.get("day_type"));
    auto drv = io::parse_bool(*f.get("is_driver"));
    auto pro = io::parse_bool(*f.get("is_professional"));
    if (!dest) {
      reject("unknown destination '" + *f.get("destination") + "'");
      continue;
    }
    if (!loc) {
      reject("unknown location type '" + *f.get("location_type") + "'");
      continue;
    }
    if (!day) {
      reject("unknown day type '" + *f.get("day_type") + "'");
      continue;
    }
    if (!drv || !pro) {
      reject("bad driver/professional flag");
      continue;
    }
    t.destination = *dest;
    t.location_type = *loc;
    t.day_type = *day;
    t.is_driver = *drv;
    t.is_professional = *pro;
    result.trips.push_back(std::move(t));
  }
  return result;
}

ParseResult parse_diaries_file(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open diary file " + path.string());
  return parse_diaries(in, mapping);
}

std::vector<TripRecord> filter_trips(const std::vector<TripRecord>& trips, FilterReport* report) {
  enum Reason : std::uint8_t { keep, passenger, professional, midnight, overlap };
  std::vector<Reason> reason(trips.size(), keep);
  std::unordered_map<std::string, std::vector<std::size_t>> by_day;
  std::vector<const std::string*> order;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const auto& t = trips[i];
    if (!t.is_driver) reason[i] = passenger;
    else if (t.is_professional) reason[i] = professional;
    else if (t.arrival > minutes_per_day) reason[i] = midnight;
    auto [it, fresh] = by_day.try_emplace(t.person_day_id);
    if (fresh) order.push_back(&it->first);
    it->second.push_back(i);
  }
  for (const auto* id : order) {
    auto idx = by_day[*id];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return trips[a].departure < trips[b].departure;
    });
    bool overlapping = false;
    int reach = -1;
    for (auto i : idx) {
      if (trips[i].departure < reach) overlapping = true;
      reach = std::max(reach, trips[i].arrival);
    }
    if (!overlapping) continue;
    for (auto i : idx)
      if (reason[i] == keep) reason[i] = overlap;
  }

  FilterReport rep;
  rep.input = trips.size();
  std::vector<TripRecord> out;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    switch (reason[i]) {
      case keep: out.push_back(trips[i]); break;
      case passenger: ++rep.passenger; break;
      case professional: ++rep.professional; break;
      case midnight: ++rep.spans_midnight; break;
      case overlap: ++rep.overlapping; break;
    }
  }
  rep.retained = out.size();
  if (report) *report = rep;
  return out;
}

std::vector<DaySequence> build_sequences(const std::vector<TripRecord>& trips) {
  std::vector<DaySequence> seqs;
  std::unordered_map<std::string, std::size_t> pos;
  for (const auto& t : trips) {
    auto [it, fresh] = pos.try_emplace(t.person_day_id, seqs.size());
    if (fresh) {
      DaySequence s;
      s.person_day_id = t.person_day_id;
      s.location_type = t.location_type;
      s.day_type = t.day_type;
      s.blocks.fill(BlockState::idle);
      seqs.push_back(s);
    }
    auto& s = seqs[it->second];
    const int end = std::min(t.arrival, minutes_per_day);
    if (end <= t.departure) continue;
    for (int b = t.departure / slot_minutes; b <= (end - 1) / slot_minutes; ++b)
      s.blocks[static_cast<std::size_t>(b)] = BlockState::on_move;
  }
  return seqs;
}

void write_trips(const std::vector<TripRecord>& trips, std::ostream& out) {
  std::vector<std::string> header = required_fields();
  header.insert(header.begin() + 3, "duration_min");
  io::TableWriter w(out, header);
  for (const auto& t : trips) {
    w.cell(t.person_day_id).cell(t.departure).cell(t.arrival).cell(t.duration_min);
    w.cell(t.distance_km).cell(to_string(t.destination)).cell(to_string(t.location_type));
    w.cell(to_string(t.day_type)).cell(t.is_driver ? "1" : "0").cell(t.is_professional ? "1" : "0");
    w.end_row();
  }
}

void write_sequences(const std::vector<DaySequence>& seqs, std::ostream& out) {
  io::TableWriter w(out, {"person_day_id", "location_type", "day_type", "blocks"});
  for (const auto& s : seqs) {
    std::string bits(slots_per_day, '0');
    for (std::size_t b = 0; b < s.blocks.size(); ++b)
      if (s.blocks[b] == BlockState::on_move) bits[b] = '1';
    w.cell(s.person_day_id).cell(to_string(s.location_type)).cell(to_string(s.day_type)).cell(bits);
    w.end_row();
  }
}

std::vector<DaySequence> read_sequences(std::istream& in) {
  io::Table t = io::read_table(in);
  const auto c_id = t.require_column("person_day_id");
  const auto c_loc = t.require_column("location_type");
  const auto c_day = t.require_column("day_type");
  const auto c_bits = t.require_column("blocks");
  std::vector<DaySequence> seqs;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = "sequence line " + std::to_string(t.line_numbers[r]);
    if (row.size() != t.header.size()) throw UserError(where + ": wrong field count");
    DaySequence s;
    s.person_day_id = row[c_id];
    s.location_type = location_from(row[c_loc]);
    s.day_type = day_type_from(row[c_day]);
    const auto& bits = row[c_bits];
    if (bits.size() != static_cast<std::size_t>(slots_per_day))
      throw UserError(where + ": expected 288 blocks");
    for (std::size_t b = 0; b < bits.size(); ++b) {
      if (bits[b] != '0' && bits[b] != '1') throw UserError(where + ": block must be 0 or 1");
      s.blocks[b] = bits[b] == '1' ? BlockState::on_move : BlockState::idle;
    }
    seqs.push_back(std::move(s));
  }
  return seqs;
}

void write_rejections(const std::vector<Rejection>& rejected, std::ostream& out) {
  io::TableWriter w(out, {"line", "reason"});
  for (const auto& r : rejected) {
    w.cell(r.line).cell(r.reason);
    w.end_row();
  }
}

void write_filter_report(const FilterReport& rep, std::ostream& out) {
  io::TableWriter w(out, {"rule", "count"});
  auto row = [&](const char* k, std::size_t v) {
    w.cell(k).cell(v);
    w.end_row();
  };
  row("input", rep.input);
  row("passenger", rep.passenger);
  row("professional", rep.professional);
  row("spans_midnight", rep.spans_midnight);
  row("overlapping", rep.overlapping);
  row("retained", rep.retained);
}

// ---- synthetic diaries ----

namespace {

int config_time(const json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    if (auto t = parse_time(v.get<std::string>(), TimeFormat::clock)) return *t;
  }
  throw UserError("generator config: bad time value " + v.dump());
}

template <typename T>
std::pair<T, T> config_range(const json& leg, const char* key) {
  const auto& r = leg.at(key);
  if (!r.is_array() || r.size() != 2)
    throw UserError(std::string("generator config: '") + key + "' must be a [min, max] pair");
  return {r[0].get<T>(), r[1].get<T>()};
}

LegSpec leg(Destination d, const char* from, const char* to, int dmin, int dmax, double vmin,
            double vmax) {
  return LegSpec{d, *parse_time(from, TimeFormat::clock), *parse_time(to, TimeFormat::clock),
                 dmin, dmax, vmin, vmax};
}

}  // namespace

std::vector<Archetype> GeneratorConfig::default_archetypes() {
  using D = Destination;
  using L = LocationType;
  std::vector<Archetype> a;
  a.push_back({"commuter", 4.0, {{L::rural, 1.2}}, {DayType::weekday},
               {leg(D::work_school, "06:30", "08:30", 15, 40, 25, 55),
                leg(D::home, "16:00", "18:30", 15, 45, 25, 55)}});
  a.push_back({"long_commuter", 1.0, {{L::rural, 2.0}, {L::metropolis, 0.6}}, {DayType::weekday},
               {leg(D::work_school, "05:30", "07:30", 40, 80, 60, 100),
                leg(D::home, "15:30", "18:00", 40, 90, 60, 100)}});
  a.push_back({"errands", 3.0, {{L::rural, 0.8}}, {},
               {leg(D::errands, "09:00", "11:30", 5, 20, 15, 35),
                leg(D::home, "10:00", "13:00", 5, 20, 15, 35)}});
  a.push_back({"leisure_outing", 1.5, {}, {},
               {leg(D::leisure, "10:00", "15:00", 20, 90, 40, 90),
                leg(D::home, "16:00", "20:00", 20, 90, 40, 90)}});
  a.push_back({"multi_stop", 2.0, {}, {},
               {leg(D::errands, "08:00", "09:00", 5, 15, 15, 35),
                leg(D::leisure, "11:00", "13:00", 10, 25, 20, 45),
                leg(D::errands, "15:00", "16:30", 5, 15, 15, 35),
                leg(D::home, "17:00", "19:00", 5, 20, 15, 35)}});
  a.push_back({"evening_leisure", 1.5, {}, {},
               {leg(D::leisure, "18:00", "19:30", 10, 25, 20, 45),
                leg(D::home, "20:30", "22:30", 10, 25, 20, 45)}});
  return a;
}

void GeneratorConfig::validate() const {
  double share = 0.0;
  for (const auto& [d, s] : day_type_share) {
    if (!(s >= 0.0)) throw UserError("generator config: negative day-type share");
    share += s;
  }
  if (!(share > 0.0)) throw UserError("generator config: day-type shares sum to zero");
  for (const auto& a : archetypes) {
    if (!(a.weight >= 0.0)) throw UserError("generator config: negative weight on archetype " + a.name);
    for (const auto& [l, w] : a.location_weight)
      if (!(w >= 0.0)) throw UserError("generator config: negative location weight on " + a.name);
    for (const auto& l : a.legs) {
      if (l.depart_earliest < 0 || l.depart_latest < l.depart_earliest ||
          l.depart_latest >= minutes_per_day)
        throw UserError("generator config: bad departure window in archetype " + a.name);
      if (l.min_duration <= 0 || l.max_duration < l.min_duration)
        throw UserError("generator config: bad duration range in archetype " + a.name);
      if (!(l.min_speed_kmh > 0.0) || l.max_speed_kmh < l.min_speed_kmh)
        throw UserError("generator config: bad speed range in archetype " + a.name);
    }
  }
  for (const auto& [loc, n] : person_days) {
    if (n == 0) continue;
    for (const auto& [day, s] : day_type_share) {
      if (s <= 0.0) continue;
      bool any = false;
      for (const auto& a : archetypes) {
        auto lw = a.location_weight.find(loc);
        double w = a.weight * (lw == a.location_weight.end() ? 1.0 : lw->second);
        bool day_ok = a.day_types.empty() ||
                      std::find(a.day_types.begin(), a.day_types.end(), day) != a.day_types.end();
        any = any || (w > 0.0 && day_ok);
      }
      if (!any)
        throw UserError(std::string("generator config: no archetype for ") +
                        std::string(to_string(loc)) + "/" + std::string(to_string(day)));
    }
  }
}

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
  GeneratorConfig cfg;
  try {
    json j = json::parse(text);
    for (const auto& [loc, n] : j.at("person_days").items()) {
      const auto count = n.get<long long>();
      if (count < 0) throw UserError("generator config: negative person-day count for " + loc);
      cfg.person_days[location_from(loc)] = static_cast<std::size_t>(count);
    }
    if (j.contains("day_type_share")) {
      cfg.day_type_share.clear();
      for (const auto& [d, s] : j["day_type_share"].items())
        cfg.day_type_share[day_type_from(d)] = s.get<double>();
    }
    if (j.contains("archetypes")) {
      for (const auto& ja : j["archetypes"]) {
        Archetype a;
        a.name = ja.at("name").get<std::string>();
        a.weight = ja.value("weight", 1.0);
        if (ja.contains("location_weight"))
          for (const auto& [l, w] : ja["location_weight"].items())
            a.location_weight[location_from(l)] = w.get<double>();
        if (ja.contains("day_types"))
          for (const auto& d : ja["day_types"]) a.day_types.push_back(day_type_from(d.get<std::string>()));
        for (const auto& jl : ja.at("legs")) {
          LegSpec l;
          l.destination = destination_from(jl.at("destination").get<std::string>());
          const auto& dep = jl.at("depart");
          if (!dep.is_array() || dep.size() != 2)
            throw UserError("generator config: 'depart' must be a [earliest, latest] pair");
          l.depart_earliest = config_time(dep[0]);
          l.depart_latest = config_time(dep[1]);
          std::tie(l.min_duration, l.max_duration) = config_range<int>(jl, "duration");
          std::tie(l.min_speed_kmh, l.max_speed_kmh) = config_range<double>(jl, "speed_kmh");
          a.legs.push_back(l);
        }
        cfg.archetypes.push_back(std::move(a));
      }
    }
  } catch (const json::exception& e) {
    throw UserError(std::string("generator config: ") + e.what());
  }
  if (cfg.archetypes.empty()) cfg.archetypes = default_archetypes();
  cfg.validate();
  return cfg;
}

GeneratorConfig GeneratorConfig::load(const std::filesystem::path& path) {
  return from_json(io::read_file(path));
}

std::vector<TripRecord> generate_synthetic_diaries(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<TripRecord> out;
  std::vector<double> day_w;
  for (auto d : all_day_types) {
    auto it = config.day_type_share.find(d);
    day_w.push_back(it == config.day_type_share.end() ? 0.0 : it->second);
  }
  for (std::size_t li = 0; li < all_locations.size(); ++li) {
    const LocationType loc = all_locations[li];
    auto pd = config.person_days.find(loc);
    if (pd == config.person_days.end()) continue;
    for (std::size_t i = 0; i < pd->second; ++i) {
      Rng rng(mix_seed(seed, (static_cast<std::uint64_t>(li) << 32) | i));
      const DayType day = all_day_types[rng.discrete(day_w)];
      std::vector<double> arch_w;
      for (const auto& a : config.archetypes) {
        auto lw = a.location_weight.find(loc);
        double w = a.weight * (lw == a.location_weight.end() ? 1.0 : lw->second);
        bool day_ok = a.day_types.empty() ||
                      std::find(a.day_types.begin(), a.day_types.end(), day) != a.day_types.end();
        arch_w.push_back(day_ok ? w : 0.0);
      }
      const auto& arch = config.archetypes[rng.discrete(arch_w)];

      char id[64];
      std::snprintf(id, sizeof id, "%s-%06zu", std::string(to_string(loc)).c_str(), i + 1);
      int free_from = 0;
      for (const auto& l : arch.legs) {
        int dep = static_cast<int>(rng.integer(l.depart_earliest, l.depart_latest));
        dep = std::max(dep, free_from);
        const int dur = static_cast<int>(rng.integer(l.min_duration, l.max_duration));
        const double speed = rng.uniform(l.min_speed_kmh, l.max_speed_kmh);
        if (dep >= minutes_per_day || dep + dur > minutes_per_day) break;
        TripRecord t;
        t.person_day_id = id;
        t.departure = dep;
        t.arrival = dep + dur;
        t.duration_min = dur;
        t.distance_km = std::max(0.1, std::round(speed * dur / 60.0 * 10.0) / 10.0);
        t.destination = l.destination;
        t.location_type = loc;
        t.day_type = day;
        free_from = t.arrival + 10;
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

}  // namespace carshare::diary
