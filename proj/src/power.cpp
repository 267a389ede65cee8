#include "carshare/power.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "carshare/rng.hpp"
#include "json.hpp"

namespace carshare::power {

using json = nlohmann::json;

namespace {

const std::set<std::string> tech_names{"lignite", "hard_coal", "OCGT", "CCGT", "pv",
                                       "wind_onshore", "wind_offshore", "biomass", "run_of_river"};
const std::set<std::string> storage_names{"li_ion", "pumped_hydro", "h2_longduration"};
const std::set<std::string> variable_renewables{"pv", "wind_onshore", "wind_offshore"};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw UserError(where + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw UserError(where + ": unknown key '" + k + "'");
}

double number_or_inf(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return lp::inf;
  return obj[key].get<double>();
}

std::string hour_tag(std::size_t t) {
  std::string s = std::to_string(t);
  return "t" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

}  // namespace

double TechnologyParams::variable_cost(double co2_price) const {
  return (fuel_eur_per_mwh_th + emissions_t_per_mwh_th * co2_price) / efficiency + other_variable_eur_per_mwh;
}

PowerParams PowerParams::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UserError(std::string("parameter file: ") + e.what());
  }
  check_keys(j, {"co2_price_eur_per_t", "renewable_floor", "v2g_cost_eur_per_mwh", "technologies", "storages",
                 "hydrogen", "share_includes_electrolysis", "share_includes_storage_losses",
                 "capacity_cost_scale", "comment"},
             "parameters");
  PowerParams p;
  try {
    p.co2_price_eur_per_t = j.value("co2_price_eur_per_t", p.co2_price_eur_per_t);
    p.renewable_floor = j.value("renewable_floor", p.renewable_floor);
    p.v2g_cost_eur_per_mwh = j.value("v2g_cost_eur_per_mwh", p.v2g_cost_eur_per_mwh);
    p.share_includes_electrolysis = j.value("share_includes_electrolysis", true);
    p.share_includes_storage_losses = j.value("share_includes_storage_losses", true);
    p.capacity_cost_scale = j.value("capacity_cost_scale", -1.0);
    for (const auto& t : j.value("technologies", json::array())) {
      check_keys(t, {"name", "renewable", "investment_eur_per_mw", "fixed_om_eur_per_mw", "fuel_eur_per_mwh_th",
                     "efficiency", "emissions_t_per_mwh_th", "other_variable_eur_per_mwh", "max_capacity_mw",
                     "availability", "availability_series", "comment"},
                 "technology");
      TechnologyParams tp;
      tp.name = t.at("name").get<std::string>();
      tp.renewable = t.value("renewable", false);
      tp.investment_eur_per_mw = t.value("investment_eur_per_mw", 0.0);
      tp.fixed_om_eur_per_mw = t.value("fixed_om_eur_per_mw", 0.0);
      tp.fuel_eur_per_mwh_th = t.value("fuel_eur_per_mwh_th", 0.0);
      tp.efficiency = t.value("efficiency", 1.0);
      tp.emissions_t_per_mwh_th = t.value("emissions_t_per_mwh_th", 0.0);
      tp.other_variable_eur_per_mwh = t.value("other_variable_eur_per_mwh", 0.0);
      tp.max_capacity_mw = number_or_inf(t, "max_capacity_mw");
      tp.availability = t.value("availability", 1.0);
      tp.availability_series = t.value("availability_series", std::string{});
      p.technologies.push_back(tp);
    }
    for (const auto& s : j.value("storages", json::array())) {
      check_keys(s, {"name", "charge_power_eur_per_mw", "discharge_power_eur_per_mw", "energy_eur_per_mwh",
                     "charge_efficiency", "discharge_efficiency", "max_energy_mwh", "comment"},
                 "storage");
      StorageParams sp;
      sp.name = s.at("name").get<std::string>();
      sp.charge_power_eur_per_mw = s.value("charge_power_eur_per_mw", 0.0);
      sp.discharge_power_eur_per_mw = s.value("discharge_power_eur_per_mw", 0.0);
      sp.energy_eur_per_mwh = s.value("energy_eur_per_mwh", 0.0);
      sp.charge_efficiency = s.value("charge_efficiency", 1.0);
      sp.discharge_efficiency = s.value("discharge_efficiency", 1.0);
      sp.max_energy_mwh = number_or_inf(s, "max_energy_mwh");
      p.storages.push_back(sp);
    }
    if (j.contains("hydrogen")) {
      const auto& h = j["hydrogen"];
      check_keys(h, {"enabled", "demand_twh_per_year", "electrolysis_efficiency", "electrolysis_eur_per_mw",
                     "store_eur_per_mwh", "comment"},
                 "hydrogen");
      p.hydrogen.enabled = h.value("enabled", false);
      p.hydrogen.demand_twh_per_year = h.value("demand_twh_per_year", p.hydrogen.demand_twh_per_year);
      p.hydrogen.electrolysis_efficiency = h.value("electrolysis_efficiency", p.hydrogen.electrolysis_efficiency);
      p.hydrogen.electrolysis_eur_per_mw = h.value("electrolysis_eur_per_mw", 0.0);
      p.hydrogen.store_eur_per_mwh = h.value("store_eur_per_mwh", 0.0);
    }
  } catch (const json::exception& e) {
    throw UserError(std::string("parameter file: ") + e.what());
  }
  p.validate();
  return p;
}

PowerParams PowerParams::load(const std::filesystem::path& path) {
  try {
    return from_json(io::read_file(path));
  } catch (const UserError& e) {
    throw UserError(path.string() + ": " + e.what());
  }
}

void PowerParams::validate() const {
  std::set<std::string> seen;
  for (const auto& t : technologies) {
    if (!tech_names.count(t.name)) throw UserError("unknown technology '" + t.name + "'");
    if (!seen.insert(t.name).second) throw UserError("technology '" + t.name + "' listed twice");
    if (t.investment_eur_per_mw < 0 || t.fixed_om_eur_per_mw < 0 || t.fuel_eur_per_mwh_th < 0 ||
        t.emissions_t_per_mwh_th < 0 || t.other_variable_eur_per_mwh < 0)
      throw UserError("technology '" + t.name + "': costs must be non-negative");
    if (!(t.efficiency > 0.0 && t.efficiency <= 1.0))
      throw UserError("technology '" + t.name + "': efficiency must lie in (0, 1]");
    if (t.availability < 0.0 || t.availability > 1.0)
      throw UserError("technology '" + t.name + "': availability must lie in [0, 1]");
    if (t.max_capacity_mw < 0.0) throw UserError("technology '" + t.name + "': negative capacity limit");
  }
  for (const auto& s : storages) {
    if (!storage_names.count(s.name)) throw UserError("unknown storage '" + s.name + "'");
    if (!seen.insert(s.name).second) throw UserError("storage '" + s.name + "' listed twice");
    if (s.charge_power_eur_per_mw < 0 || s.discharge_power_eur_per_mw < 0 || s.energy_eur_per_mwh < 0)
      throw UserError("storage '" + s.name + "': costs must be non-negative");
    auto unit = [](double e) { return e > 0.0 && e <= 1.0; };
    if (!unit(s.charge_efficiency) || !unit(s.discharge_efficiency))
      throw UserError("storage '" + s.name + "': efficiencies must lie in (0, 1]");
  }
  if (renewable_floor < 0.0 || renewable_floor > 1.0) throw UserError("renewable_floor must lie in [0, 1]");
  if (co2_price_eur_per_t < 0.0 || v2g_cost_eur_per_mwh < 0.0) throw UserError("prices must be non-negative");
  if (hydrogen.enabled) {
    if (!(hydrogen.electrolysis_efficiency > 0.0 && hydrogen.electrolysis_efficiency <= 1.0))
      throw UserError("hydrogen: electrolysis_efficiency must lie in (0, 1]");
    if (hydrogen.demand_twh_per_year < 0.0 || hydrogen.electrolysis_eur_per_mw < 0.0 ||
        hydrogen.store_eur_per_mwh < 0.0)
      throw UserError("hydrogen: values must be non-negative");
  }
}

void SystemSeries::validate(const PowerParams& params) const {
  const std::size_t n = hours();
  if (n == 0) throw UserError("system series are empty");
  if (heat_pump_mw.size() != n) throw UserError("heat-pump series length differs from the base load");
  for (const auto& [name, v] : availability) {
    if (v.size() != n) throw UserError("availability series '" + name + "' length differs from the base load");
    for (double a : v)
      if (!(a >= 0.0 && a <= 1.0)) throw UserError("availability series '" + name + "' leaves [0, 1]");
  }
  for (const auto& t : params.technologies)
    if (!t.availability_series.empty() && !availability.count(t.availability_series))
      throw UserError("technology '" + t.name + "' needs availability series '" + t.availability_series + "'");
}

SystemSeries synthetic_system_series(std::size_t hours, std::size_t start_hour, std::uint64_t seed) {
  constexpr std::size_t year = 8760;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const auto temp = ev::default_temperature(year, 0);
  Rng rng(seed);

  std::vector<double> base(year), hp(year), pv(year), won(year), woff(year), ror(year);
  double cloud = 0.7, wind = 0.0;
  for (std::size_t h = 0; h < year; ++h) {
    double day = static_cast<double>(h) / 24.0;
    double hod = static_cast<double>(h % 24);
    bool weekend = (h / 24) % 7 >= 5;
    double season = std::cos(two_pi * (day - 15.0) / 365.0);  // +1 mid-January

    double daily = 1.0 + 0.12 * std::sin(two_pi * (hod - 7.0) / 24.0) + 0.04 * std::sin(two_pi * (hod - 16.0) / 12.0);
    base[h] = (1.0 + 0.07 * season) * (weekend ? 0.88 : 1.03) * daily;
    hp[h] = std::max(0.0, 15.0 - temp[h]) + 1.5;

    if (h % 24 == 0) cloud = std::clamp(0.6 * cloud + 0.4 * rng.uniform(0.15, 1.0), 0.1, 1.0);
    double daylength = 12.0 - 4.0 * season;
    double sunrise = 12.5 - daylength / 2.0;
    double x = (hod + 0.5 - sunrise) / daylength;
    double elevation = x > 0.0 && x < 1.0 ? std::sin(std::numbers::pi * x) : 0.0;
    pv[h] = std::clamp((0.55 - 0.2 * season) * elevation * cloud / 0.6, 0.0, 1.0);

    wind = 0.97 * wind + 0.25 * (rng.uniform() - 0.5) * 2.0;
    double mean_on = 0.24 + 0.09 * season;
    won[h] = std::clamp(mean_on * std::exp(0.9 * wind - 0.2), 0.0, 0.95);
    woff[h] = std::clamp((mean_on + 0.16) * std::exp(0.7 * wind - 0.12), 0.0, 0.97);
    ror[h] = 0.55 + 0.1 * std::sin(two_pi * (day - 80.0) / 365.0);
  }
  const double base_scale = 470e6 / std::accumulate(base.begin(), base.end(), 0.0);
  const double hp_scale = 52e6 / std::accumulate(hp.begin(), hp.end(), 0.0);

  SystemSeries s;
  auto pick = [&](const std::vector<double>& v, double scale) {
    std::vector<double> out(hours);
    for (std::size_t i = 0; i < hours; ++i) out[i] = v[(start_hour + i) % year] * scale;
    return out;
  };
  s.base_load_mw = pick(base, base_scale);
  s.heat_pump_mw = pick(hp, hp_scale);
  s.availability["pv"] = pick(pv, 1.0);
  s.availability["wind_onshore"] = pick(won, 1.0);
  s.availability["wind_offshore"] = pick(woff, 1.0);
  s.availability["run_of_river"] = pick(ror, 1.0);
  return s;
}

SystemSeries read_system_series(const std::filesystem::path& path) {
  auto table = io::read_table_file(path);
  const std::size_t cb = table.require_column("base_load_mw");
  const std::size_t ch = table.require_column("heat_pump_mw");
  std::vector<std::pair<std::string, std::size_t>> cf;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c].rfind("cf_", 0) == 0) cf.emplace_back(table.header[c].substr(3), c);
  SystemSeries s;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto get = [&](std::size_t c) {
      auto v = io::parse_double(table.rows[i][c]);
      if (!v)
        throw UserError(path.string() + ":" + std::to_string(table.line_numbers[i]) + ": bad number in column " +
                        table.header[c]);
      return *v;
    };
    s.base_load_mw.push_back(get(cb));
    s.heat_pump_mw.push_back(get(ch));
    for (auto& [name, c] : cf) s.availability[name].push_back(get(c));
  }
  return s;
}

void write_system_series(const SystemSeries& s, std::ostream& out) {
  std::vector<std::string> header{"hour", "base_load_mw", "heat_pump_mw"};
  for (const auto& [name, v] : s.availability) header.push_back("cf_" + name);
  io::TableWriter w(out, header);
  for (std::size_t t = 0; t < s.hours(); ++t) {
    w.cell(t).cell(s.base_load_mw[t]).cell(s.heat_pump_mw[t]);
    for (const auto& [name, v] : s.availability) w.cell(v[t]);
    w.end_row();
  }
}

std::string_view to_string(ChargingStrategy s) {
  switch (s) {
    case ChargingStrategy::uncontrolled: return "uncontrolled";
    case ChargingStrategy::smart: return "smart";
    case ChargingStrategy::bidirectional: return "bidirectional";
  }
  return "?";
}

ChargingStrategy charging_strategy_from(std::string_view s) {
  for (auto c : {ChargingStrategy::uncontrolled, ChargingStrategy::smart, ChargingStrategy::bidirectional})
    if (to_string(c) == s) return c;
  throw UserError("unknown charging strategy '" + std::string(s) + "'");
}

std::string_view to_string(Uptake u) {
  switch (u) {
    case Uptake::none: return "none";
    case Uptake::low: return "low";
    case Uptake::high: return "high";
  }
  return "?";
}

std::string_view to_string(Framework f) {
  return f == Framework::shared_only ? "shared_only" : "shared_plus_other";
}

Uptake uptake_from(std::string_view s) {
  for (auto u : {Uptake::none, Uptake::low, Uptake::high})
    if (to_string(u) == s) return u;
  throw UserError("unknown uptake regime '" + std::string(s) + "'");
}

Framework framework_from(std::string_view s) {
  for (auto f : {Framework::shared_only, Framework::shared_plus_other})
    if (to_string(f) == s) return f;
  throw UserError("unknown framework '" + std::string(s) + "'");
}

double FleetSpec::cell_cars(const FleetCell& c) const {
  auto it = cell_shares.find(c);
  return it == cell_shares.end() ? 0.0 : it->second * total_bevs;
}

const std::set<FleetCell>& FleetSpec::switching_cells() const {
  static const std::set<FleetCell> none;
  if (uptake == Uptake::none) return none;
  auto it = uptake_cells.find(uptake);
  return it == uptake_cells.end() ? none : it->second;
}

double FleetSpec::substituted_cars() const {
  double n = 0.0;
  for (const auto& c : switching_cells()) n += cell_cars(c);
  return n;
}

void FleetSpec::validate() const {
  if (!(total_bevs >= 0.0)) throw UserError("fleet: total_bevs must be non-negative");
  if (!(substitution_rate >= 1.0)) throw UserError("fleet: substitution rate must be at least 1");
  double sum = 0.0;
  for (const auto& [c, s] : cell_shares) {
    if (s < 0.0) throw UserError("fleet: negative cell share");
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UserError("fleet: cell shares sum to " + io::format_double(sum) + ", not 1");
  for (const auto& [u, cells] : uptake_cells)
    for (const auto& c : cells) {
      if (!cell_shares.count(c))
        throw UserError("fleet: uptake cell " + std::string(to_string(c.location)) + " c" +
                        std::to_string(c.cluster) + " is not a fleet cell");
      if (c.location == LocationType::rural) throw UserError("fleet: rural cells never switch to carsharing");
    }
}

std::vector<double> fleet_allocation(const FleetSpec& spec, const std::vector<ev::ProfileSpec>& profiles,
                                     FleetRole role) {
  spec.validate();
  std::vector<double> w(profiles.size(), 0.0);
  const auto& switching = spec.switching_cells();
  for (const auto& [cell, share] : spec.cell_shares) {
    if (share <= 0.0) continue;
    const bool switches = switching.count(cell) > 0;
    if (spec.framework == Framework::shared_only && !switches) continue;
    const bool shared = role == FleetRole::scenario && switches;
    const Ownership own = shared ? Ownership::shared : Ownership::private_car;
    double cars = spec.cell_cars(cell);
    if (shared) cars = std::max(1.0, std::round(cars / spec.substitution_rate));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < profiles.size(); ++i)
      if (profiles[i].location == cell.location && profiles[i].cluster == cell.cluster &&
          profiles[i].ownership == own)
        idx.push_back(i);
    if (idx.empty())
      throw UserError("no " + std::string(to_string(own)) + " profiles for cell " +
                      std::string(to_string(cell.location)) + " c" + std::to_string(cell.cluster));
    for (auto i : idx) w[i] = cars / static_cast<double>(idx.size());
  }
  return w;
}

BevProfile BevProfile::from(const ev::VehicleProfile& p, double weight, ev::ChargingRule rule) {
  BevProfile b;
  b.id = p.spec.id;
  b.ownership = p.spec.ownership;
  b.weight = weight;
  b.battery_kwh = p.spec.vehicle.battery_kwh;
  b.charge_efficiency = p.spec.vehicle.charge_efficiency;
  b.discharge_efficiency = p.spec.vehicle.discharge_efficiency;
  b.consumption_kwh = p.hourly_consumption_kwh;
  b.rating_kw = p.hourly_rating_kw;
  const auto& d = rule == ev::ChargingRule::immediate ? p.immediate : p.balanced;
  b.uncontrolled_kwh = rule == ev::ChargingRule::immediate ? p.hourly_immediate_kwh : p.hourly_balanced_kwh;
  b.uncontrolled_initial_soc_kwh = d.initial_soc_kwh;
  return b;
}

namespace {

// The fixed-rule series must be a cyclic, rating-respecting path; otherwise
// the profile cannot cover its driving.
void check_profile(const BevProfile& b, std::size_t T) {
  if (b.consumption_kwh.size() != T || b.rating_kw.size() != T || b.uncontrolled_kwh.size() != T)
    throw UserError("profile " + b.id + ": series length differs from the " + std::to_string(T) + " h horizon");
  if (b.weight < 0.0) throw UserError("profile " + b.id + ": negative weight");
  if (!(b.battery_kwh > 0.0)) throw UserError("profile " + b.id + ": battery capacity must be positive");
  const double tol = 1e-6 * std::max(1.0, b.battery_kwh);
  double soc = b.uncontrolled_initial_soc_kwh;
  for (std::size_t t = 0; t < T; ++t) {
    if (b.uncontrolled_kwh[t] > b.rating_kw[t] + tol)
      throw UserError("profile " + b.id + ": charging exceeds the available rating in hour " + std::to_string(t));
    soc += b.charge_efficiency * b.uncontrolled_kwh[t] - b.consumption_kwh[t];
    if (soc < -tol || soc > b.battery_kwh + tol)
      throw UserError("profile " + b.id + " cannot cover its driving with the available charging (hour " +
                      std::to_string(t) + ")");
  }
  if (std::abs(soc - b.uncontrolled_initial_soc_kwh) > tol)
    throw UserError("profile " + b.id + ": charging series is not cyclic over the horizon");
}

}  // namespace

Model build_model(const ModelInput& in) {
  const auto& P = in.params;
  P.validate();
  in.system.validate(P);
  const std::size_t T = in.system.hours();
  for (const auto& b : in.bevs) check_profile(b, T);
  const double cap_scale = P.capacity_cost_scale < 0.0 ? static_cast<double>(T) / hours_per_year
                                                       : P.capacity_cost_scale;
  const bool bidirectional = in.strategy == ChargingStrategy::bidirectional;
  const bool controlled = in.strategy != ChargingStrategy::uncontrolled;

  Model m;
  m.hours = T;
  auto& lp = m.lp;
  lp.name = "POWER";
  auto prev = [T](std::size_t t) { return t == 0 ? T - 1 : t - 1; };

  // Exogenous load and the balance rows.
  m.exogenous_load_mw.assign(T, 0.0);
  m.uncontrolled_bev_mw.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    m.exogenous_load_mw[t] = in.system.base_load_mw[t] + in.system.heat_pump_mw[t];
    if (!controlled)
      for (const auto& b : in.bevs) m.uncontrolled_bev_mw[t] += b.weight * b.uncontrolled_kwh[t] / 1000.0;
    m.exogenous_load_mw[t] += m.uncontrolled_bev_mw[t];
    m.balance_rows.push_back(lp.add_row("balance_" + hour_tag(t), lp::RowSense::eq, m.exogenous_load_mw[t]));
  }
  double exogenous_total = std::accumulate(m.exogenous_load_mw.begin(), m.exogenous_load_mw.end(), 0.0);
  const double f = P.renewable_floor;
  m.renewable_row = lp.add_row("renewable_share", lp::RowSense::ge, f * exogenous_total);

  for (const auto& tech : P.technologies) {
    const double var = tech.variable_cost(P.co2_price_eur_per_t);
    std::size_t cap = lp.add_column("cap_" + tech.name, (tech.investment_eur_per_mw + tech.fixed_om_eur_per_mw) * cap_scale,
                                    0.0, tech.max_capacity_mw);
    m.tech_cap.push_back(cap);
    std::vector<std::size_t> gen(T);
    const std::vector<double>* series =
        tech.availability_series.empty() ? nullptr : &in.system.availability.at(tech.availability_series);
    for (std::size_t t = 0; t < T; ++t) {
      gen[t] = lp.add_column("gen_" + tech.name + "_" + hour_tag(t), var);
      double a = series ? (*series)[t] : tech.availability;
      std::size_t r = lp.add_row("cap_" + tech.name + "_" + hour_tag(t), lp::RowSense::le, 0.0);
      lp.add_entry(r, gen[t], 1.0);
      if (a != 0.0) lp.add_entry(r, cap, -a);
      lp.add_entry(m.balance_rows[t], gen[t], 1.0);
      if (tech.renewable) lp.add_entry(m.renewable_row, gen[t], 1.0);
    }
    m.tech_gen.push_back(std::move(gen));
  }

  for (const auto& s : P.storages) {
    Model::StorageCols c;
    c.cap_charge = lp.add_column("capch_" + s.name, s.charge_power_eur_per_mw * cap_scale);
    c.cap_discharge = lp.add_column("capdis_" + s.name, s.discharge_power_eur_per_mw * cap_scale);
    c.cap_energy = lp.add_column("cape_" + s.name, s.energy_eur_per_mwh * cap_scale, 0.0, s.max_energy_mwh);
    for (std::size_t t = 0; t < T; ++t) {
      c.charge.push_back(lp.add_column("stoch_" + s.name + "_" + hour_tag(t), 0.0));
      c.discharge.push_back(lp.add_column("stodis_" + s.name + "_" + hour_tag(t), 0.0));
      c.level.push_back(lp.add_column("stolvl_" + s.name + "_" + hour_tag(t), 0.0));
    }
    for (std::size_t t = 0; t < T; ++t) {
      auto tag = s.name + "_" + hour_tag(t);
      std::size_t r = lp.add_row("stochcap_" + tag, lp::RowSense::le, 0.0);
      lp.add_entry(r, c.charge[t], 1.0);
      lp.add_entry(r, c.cap_charge, -1.0);
      r = lp.add_row("stodiscap_" + tag, lp::RowSense::le, 0.0);
      lp.add_entry(r, c.discharge[t], 1.0);
      lp.add_entry(r, c.cap_discharge, -1.0);
      r = lp.add_row("stoecap_" + tag, lp::RowSense::le, 0.0);
      lp.add_entry(r, c.level[t], 1.0);
      lp.add_entry(r, c.cap_energy, -1.0);
      r = lp.add_row("stodyn_" + tag, lp::RowSense::eq, 0.0);
      if (T > 1) {
        lp.add_entry(r, c.level[t], 1.0);
        lp.add_entry(r, c.level[prev(t)], -1.0);
      }
      lp.add_entry(r, c.charge[t], -s.charge_efficiency);
      lp.add_entry(r, c.discharge[t], 1.0 / s.discharge_efficiency);

      lp.add_entry(m.balance_rows[t], c.charge[t], -1.0);
      lp.add_entry(m.balance_rows[t], c.discharge[t], 1.0);
      if (P.share_includes_storage_losses) {
        lp.add_entry(m.renewable_row, c.charge[t], -f);
        lp.add_entry(m.renewable_row, c.discharge[t], f);
      }
    }
    m.storage.push_back(std::move(c));
  }

  m.bev.resize(in.bevs.size());
  if (controlled) {
    for (std::size_t p = 0; p < in.bevs.size(); ++p) {
      const auto& b = in.bevs[p];
      auto& c = m.bev[p];
      c.charge.assign(T, npos);
      c.discharge.assign(T, npos);
      c.soc.assign(T, npos);
      if (b.weight <= 0.0) continue;
      const double s = b.weight / 1000.0;  // kWh per car -> MWh for the profile's cars
      for (std::size_t t = 0; t < T; ++t) {
        auto tag = b.id + "_" + hour_tag(t);
        if (b.rating_kw[t] > 0.0) {
          c.charge[t] = lp.add_column("bevch_" + tag, 0.0, 0.0, s * b.rating_kw[t]);
          if (bidirectional)
            c.discharge[t] = lp.add_column("bevdis_" + tag, P.v2g_cost_eur_per_mwh, 0.0, s * b.rating_kw[t]);
        }
        c.soc[t] = lp.add_column("bevsoc_" + tag, 0.0, 0.0, s * b.battery_kwh);
      }
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t r = lp.add_row("bevdyn_" + b.id + "_" + hour_tag(t), lp::RowSense::eq, -s * b.consumption_kwh[t]);
        if (T > 1) {
          lp.add_entry(r, c.soc[t], 1.0);
          lp.add_entry(r, c.soc[prev(t)], -1.0);
        }
        if (c.charge[t] != npos) {
          lp.add_entry(r, c.charge[t], -b.charge_efficiency);
          lp.add_entry(m.balance_rows[t], c.charge[t], -1.0);
          lp.add_entry(m.renewable_row, c.charge[t], -f);
        }
        if (c.discharge[t] != npos) {
          lp.add_entry(r, c.discharge[t], 1.0 / b.discharge_efficiency);
          lp.add_entry(m.balance_rows[t], c.discharge[t], 1.0);
          lp.add_entry(m.renewable_row, c.discharge[t], f);
        }
      }
    }
  }

  if (P.hydrogen.enabled) {
    const auto& h = P.hydrogen;
    m.hydrogen_demand_mwh_per_h = h.demand_twh_per_year * 1e6 / hours_per_year;
    m.electrolysis_cap = lp.add_column("cap_electrolysis", h.electrolysis_eur_per_mw * cap_scale);
    m.h2_store_cap = lp.add_column("cap_h2store", h.store_eur_per_mwh * cap_scale);
    for (std::size_t t = 0; t < T; ++t) {
      m.electrolysis.push_back(lp.add_column("elec_" + hour_tag(t), 0.0));
      m.h2_level.push_back(lp.add_column("h2lvl_" + hour_tag(t), 0.0));
    }
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t r = lp.add_row("eleccap_" + hour_tag(t), lp::RowSense::le, 0.0);
      lp.add_entry(r, m.electrolysis[t], 1.0);
      lp.add_entry(r, m.electrolysis_cap, -1.0);
      r = lp.add_row("h2cap_" + hour_tag(t), lp::RowSense::le, 0.0);
      lp.add_entry(r, m.h2_level[t], 1.0);
      lp.add_entry(r, m.h2_store_cap, -1.0);
      r = lp.add_row("h2dyn_" + hour_tag(t), lp::RowSense::eq, -m.hydrogen_demand_mwh_per_h);
      if (T > 1) {
        lp.add_entry(r, m.h2_level[t], 1.0);
        lp.add_entry(r, m.h2_level[prev(t)], -1.0);
      }
      lp.add_entry(r, m.electrolysis[t], -h.electrolysis_efficiency);
      lp.add_entry(m.balance_rows[t], m.electrolysis[t], -1.0);
      if (P.share_includes_electrolysis) lp.add_entry(m.renewable_row, m.electrolysis[t], -f);
    }
  }
  return m;
}

SolutionReport solve(const Model& m, const ModelInput& in, const lp::SimplexOptions& options) {
  const auto& P = in.params;
  const std::size_t T = m.hours;
  auto sol = lp::simplex_solve(m.lp, options);
  SolutionReport r;
  r.status = sol.status;
  r.hours = T;
  r.iterations = sol.iterations;
  r.log = sol.log;
  if (sol.status != lp::Status::optimal) return r;

  const auto& x = sol.x;
  auto val = [&](std::size_t c) { return c == npos ? 0.0 : x[c]; };
  r.total_cost = sol.objective;
  r.annual_cost = sol.objective * hours_per_year / static_cast<double>(T);

  std::vector<double> variable_ren(T, 0.0);
  double renewable = 0.0;
  for (std::size_t k = 0; k < P.technologies.size(); ++k) {
    const auto& tech = P.technologies[k];
    const double cap = x[m.tech_cap[k]];
    r.capacity_mw[tech.name] = cap;
    double gen = 0.0, curtailed = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      gen += x[m.tech_gen[k][t]];
      double a = tech.availability_series.empty() ? tech.availability
                                                  : in.system.availability.at(tech.availability_series)[t];
      if (tech.renewable) curtailed += std::max(0.0, a * cap - x[m.tech_gen[k][t]]);
      if (variable_renewables.count(tech.name)) variable_ren[t] += a * cap;
    }
    r.generation_mwh[tech.name] = gen;
    if (tech.renewable) {
      r.curtailment_mwh[tech.name] = curtailed;
      renewable += gen;
    }
  }

  double storage_net = 0.0;
  std::vector<double> storage_net_t(T, 0.0);
  for (std::size_t k = 0; k < P.storages.size(); ++k) {
    const auto& c = m.storage[k];
    const auto& name = P.storages[k].name;
    r.storage_charge_mw[name] = x[c.cap_charge];
    r.storage_discharge_mw[name] = x[c.cap_discharge];
    r.storage_energy_mwh[name] = x[c.cap_energy];
    for (std::size_t t = 0; t < T; ++t) storage_net_t[t] += x[c.charge[t]] - x[c.discharge[t]];
  }
  for (double v : storage_net_t) storage_net += v;

  double electrolysis = 0.0;
  std::vector<double> elec_t(T, 0.0);
  if (P.hydrogen.enabled) {
    r.electrolysis_mw = x[m.electrolysis_cap];
    r.h2_store_mwh = x[m.h2_store_cap];
    for (std::size_t t = 0; t < T; ++t) {
      elec_t[t] = x[m.electrolysis[t]];
      electrolysis += elec_t[t];
    }
  }

  r.bev_charge_private_mw.assign(T, 0.0);
  r.bev_charge_shared_mw.assign(T, 0.0);
  r.bev_discharge_private_mw.assign(T, 0.0);
  r.bev_discharge_shared_mw.assign(T, 0.0);
  r.bev_soc_mwh.assign(T, 0.0);
  const bool controlled = in.strategy != ChargingStrategy::uncontrolled;
  for (std::size_t p = 0; p < in.bevs.size(); ++p) {
    const auto& b = in.bevs[p];
    const bool shared = b.ownership == Ownership::shared;
    auto& charge = shared ? r.bev_charge_shared_mw : r.bev_charge_private_mw;
    auto& discharge = shared ? r.bev_discharge_shared_mw : r.bev_discharge_private_mw;
    if (!controlled) {
      // Reconstruct the fixed-rule state of charge for reporting.
      double soc = b.uncontrolled_initial_soc_kwh;
      for (std::size_t t = 0; t < T; ++t) {
        charge[t] += b.weight * b.uncontrolled_kwh[t] / 1000.0;
        soc += b.charge_efficiency * b.uncontrolled_kwh[t] - b.consumption_kwh[t];
        r.bev_soc_mwh[t] += b.weight * soc / 1000.0;
      }
      continue;
    }
    const auto& c = m.bev[p];
    for (std::size_t t = 0; t < T; ++t) {
      charge[t] += val(c.charge[t]);
      discharge[t] += val(c.discharge[t]);
      r.bev_soc_mwh[t] += val(c.soc[t]);
    }
  }

  double bev_net = 0.0;
  r.price.assign(T, 0.0);
  r.residual_load_mw.assign(T, 0.0);
  double base_total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double base = in.system.base_load_mw[t] + in.system.heat_pump_mw[t];
    base_total += base;
    const double bev = r.bev_charge_private_mw[t] + r.bev_charge_shared_mw[t] - r.bev_discharge_private_mw[t] -
                       r.bev_discharge_shared_mw[t];
    bev_net += bev;
    double supply = 0.0;
    for (std::size_t k = 0; k < P.technologies.size(); ++k) supply += x[m.tech_gen[k][t]];
    double demand = base + bev + storage_net_t[t] + elec_t[t];
    r.max_balance_residual = std::max(r.max_balance_residual, std::abs(supply - demand));
    r.price[t] = sol.row_duals[m.balance_rows[t]];
    r.residual_load_mw[t] = base - variable_ren[t];
  }
  r.consumption_mwh = base_total + bev_net + (P.share_includes_storage_losses ? storage_net : 0.0) +
                      (P.share_includes_electrolysis ? electrolysis : 0.0);
  r.renewable_share = r.consumption_mwh > 0.0 ? renewable / r.consumption_mwh : 0.0;
  return r;
}

namespace {
json map_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}
std::map<std::string, double> json_map(const json& j) {
  std::map<std::string, double> m;
  for (const auto& [k, v] : j.items()) m[k] = v.get<double>();
  return m;
}
}  // namespace

std::string SolutionReport::to_json() const {
  json j;
  j["schema"] = "carshare.solution_report/1";
  j["status"] = lp::to_string(status);
  j["hours"] = hours;
  j["total_cost"] = total_cost;
  j["annual_cost"] = annual_cost;
  j["capacity_mw"] = map_json(capacity_mw);
  j["generation_mwh"] = map_json(generation_mwh);
  j["curtailment_mwh"] = map_json(curtailment_mwh);
  j["storage_charge_mw"] = map_json(storage_charge_mw);
  j["storage_discharge_mw"] = map_json(storage_discharge_mw);
  j["storage_energy_mwh"] = map_json(storage_energy_mwh);
  j["electrolysis_mw"] = electrolysis_mw;
  j["h2_store_mwh"] = h2_store_mwh;
  j["renewable_share"] = renewable_share;
  j["consumption_mwh"] = consumption_mwh;
  j["max_balance_residual"] = max_balance_residual;
  j["iterations"] = iterations;
  j["price"] = price;
  j["residual_load_mw"] = residual_load_mw;
  j["bev_charge_private_mw"] = bev_charge_private_mw;
  j["bev_charge_shared_mw"] = bev_charge_shared_mw;
  j["bev_discharge_private_mw"] = bev_discharge_private_mw;
  j["bev_discharge_shared_mw"] = bev_discharge_shared_mw;
  j["bev_soc_mwh"] = bev_soc_mwh;
  return j.dump(1);
}

SolutionReport SolutionReport::from_json(const std::string& text) {
  SolutionReport r;
  try {
    json j = json::parse(text);
    if (j.value("schema", "") != "carshare.solution_report/1") throw UserError("not a solution report");
    auto st = j.at("status").get<std::string>();
    r.status = st == "optimal" ? lp::Status::optimal : st == "unbounded" ? lp::Status::unbounded : lp::Status::infeasible;
    r.hours = j.at("hours").get<std::size_t>();
    r.total_cost = j.at("total_cost").get<double>();
    r.annual_cost = j.at("annual_cost").get<double>();
    r.capacity_mw = json_map(j.at("capacity_mw"));
    r.generation_mwh = json_map(j.at("generation_mwh"));
    r.curtailment_mwh = json_map(j.at("curtailment_mwh"));
    r.storage_charge_mw = json_map(j.at("storage_charge_mw"));
    r.storage_discharge_mw = json_map(j.at("storage_discharge_mw"));
    r.storage_energy_mwh = json_map(j.at("storage_energy_mwh"));
    r.electrolysis_mw = j.at("electrolysis_mw").get<double>();
    r.h2_store_mwh = j.at("h2_store_mwh").get<double>();
    r.renewable_share = j.at("renewable_share").get<double>();
    r.consumption_mwh = j.at("consumption_mwh").get<double>();
    r.max_balance_residual = j.at("max_balance_residual").get<double>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.price = j.at("price").get<std::vector<double>>();
    r.residual_load_mw = j.at("residual_load_mw").get<std::vector<double>>();
    r.bev_charge_private_mw = j.at("bev_charge_private_mw").get<std::vector<double>>();
    r.bev_charge_shared_mw = j.at("bev_charge_shared_mw").get<std::vector<double>>();
    r.bev_discharge_private_mw = j.at("bev_discharge_private_mw").get<std::vector<double>>();
    r.bev_discharge_shared_mw = j.at("bev_discharge_shared_mw").get<std::vector<double>>();
    r.bev_soc_mwh = j.at("bev_soc_mwh").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw UserError(std::string("solution report: ") + e.what());
  }
  return r;
}

DeltaReport compute_kpis(const SolutionReport& scenario, const SolutionReport& reference, double substituted_cars) {
  if (scenario.hours != reference.hours)
    throw UserError("scenario covers " + std::to_string(scenario.hours) + " h, reference " +
                    std::to_string(reference.hours) + " h");
  if (scenario.status != lp::Status::optimal || reference.status != lp::Status::optimal)
    throw UserError("both runs must be solved to optimality before comparing");
  DeltaReport d;
  d.reference_cost = reference.annual_cost;
  d.scenario_cost = scenario.annual_cost;
  d.delta_cost = scenario.annual_cost - reference.annual_cost;
  d.substituted_cars = substituted_cars;
  d.per_car_defined = substituted_cars > 0.0;
  d.delta_per_car = d.per_car_defined ? d.delta_cost / substituted_cars : 0.0;
  d.reference_share = reference.renewable_share;
  d.scenario_share = scenario.renewable_share;
  auto diff = [](const auto& a, const auto& b) {
    std::map<std::string, double> out;
    for (const auto& [k, v] : a) out[k] += v;
    for (const auto& [k, v] : b) out[k] -= v;
    return out;
  };
  d.capacity_delta_mw = diff(scenario.capacity_mw, reference.capacity_mw);
  d.generation_delta_mwh = diff(scenario.generation_mwh, reference.generation_mwh);
  return d;
}

std::string DeltaReport::to_json() const {
  json j;
  j["schema"] = "carshare.delta_report/1";
  j["reference_cost_eur_per_year"] = reference_cost;
  j["scenario_cost_eur_per_year"] = scenario_cost;
  j["delta_cost_eur_per_year"] = delta_cost;
  j["substituted_cars"] = substituted_cars;
  if (per_car_defined)
    j["delta_eur_per_substituted_car_year"] = delta_per_car;
  else
    j["delta_eur_per_substituted_car_year"] = nullptr;
  j["reference_renewable_share"] = reference_share;
  j["scenario_renewable_share"] = scenario_share;
  j["capacity_delta_mw"] = map_json(capacity_delta_mw);
  j["generation_delta_mwh"] = map_json(generation_delta_mwh);
  return j.dump(1);
}

void write_capacity_table(const SolutionReport& r, std::ostream& out) {
  io::TableWriter w(out, {"category", "name", "value"});
  auto rows = [&](std::string_view cat, const std::map<std::string, double>& m) {
    for (const auto& [k, v] : m) {
      w.cell(cat).cell(k).cell(v);
      w.end_row();
    }
  };
  rows("capacity_mw", r.capacity_mw);
  rows("generation_mwh", r.generation_mwh);
  rows("curtailment_mwh", r.curtailment_mwh);
  rows("storage_charge_mw", r.storage_charge_mw);
  rows("storage_discharge_mw", r.storage_discharge_mw);
  rows("storage_energy_mwh", r.storage_energy_mwh);
  rows("hydrogen", {{"electrolysis_mw", r.electrolysis_mw}, {"store_mwh", r.h2_store_mwh}});
}

void write_hourly_table(const SolutionReport& r, std::ostream& out) {
  io::TableWriter w(out, {"hour", "price_eur_per_mwh", "residual_load_mw", "bev_charge_private_mw",
                          "bev_charge_shared_mw", "bev_discharge_private_mw", "bev_discharge_shared_mw",
                          "bev_soc_mwh"});
  for (std::size_t t = 0; t < r.price.size(); ++t) {
    w.cell(t)
        .cell(r.price[t])
        .cell(r.residual_load_mw[t])
        .cell(r.bev_charge_private_mw[t])
        .cell(r.bev_charge_shared_mw[t])
        .cell(r.bev_discharge_private_mw[t])
        .cell(r.bev_discharge_shared_mw[t])
        .cell(r.bev_soc_mwh[t]);
    w.end_row();
  }
}

}  // namespace carshare::power
