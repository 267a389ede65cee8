#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carshare/error.hpp"
#include "carshare/lp.hpp"
#include "carshare/mps.hpp"
#include "carshare/power.hpp"

using namespace carshare;
using namespace carshare::power;

namespace {

// Annual cost figures that become `per_hour` EUR per MW and modelled hour.
double annual(double per_hour) { return per_hour * hours_per_year; }

TechnologyParams gas(double inv_per_hour, double var) {
  TechnologyParams t;
  t.name = "CCGT";
  t.investment_eur_per_mw = annual(inv_per_hour);
  t.other_variable_eur_per_mwh = var;
  return t;
}

TechnologyParams pv(double inv_per_hour) {
  TechnologyParams t;
  t.name = "pv";
  t.renewable = true;
  t.investment_eur_per_mw = annual(inv_per_hour);
  t.availability_series = "pv";
  return t;
}

PowerParams bare(std::vector<TechnologyParams> techs, double floor = 0.0) {
  PowerParams p;
  p.technologies = std::move(techs);
  p.renewable_floor = floor;
  return p;
}

SystemSeries series(std::vector<double> load, std::vector<double> pv_cf = {}) {
  SystemSeries s;
  s.heat_pump_mw.assign(load.size(), 0.0);
  s.base_load_mw = std::move(load);
  if (!pv_cf.empty()) s.availability["pv"] = std::move(pv_cf);
  return s;
}

SolutionReport run(const ModelInput& in) {
  auto m = build_model(in);
  return solve(m, in);
}

BevProfile bev(std::string id, double weight, double battery, std::vector<double> consumption,
               std::vector<double> rating, std::vector<double> uncontrolled, double initial_soc) {
  BevProfile b;
  b.id = std::move(id);
  b.weight = weight;
  b.battery_kwh = battery;
  b.consumption_kwh = std::move(consumption);
  b.rating_kw = std::move(rating);
  b.uncontrolled_kwh = std::move(uncontrolled);
  b.uncontrolled_initial_soc_kwh = initial_soc;
  return b;
}

void expect_rel(double got, double want, double rel = 1e-9) {
  EXPECT_NEAR(got, want, rel * std::max(1.0, std::abs(want)));
}

}  // namespace

// One hour, one technology: capacity = load = 100 MW. Capacity cost per hour
// 1 EUR/MW, energy 50 EUR/MWh: 100 + 5000.
TEST(PowerModel, OneHourOneTechnology) {
  ModelInput in;
  in.params = bare({gas(1.0, 50.0)});
  in.system = series({100.0});
  auto r = run(in);
  ASSERT_EQ(r.status, lp::Status::optimal);
  expect_rel(r.total_cost, 5100.0);
  expect_rel(r.annual_cost, 5100.0 * 8760.0);
  expect_rel(r.capacity_mw.at("CCGT"), 100.0);
  expect_rel(r.generation_mwh.at("CCGT"), 100.0);
}

// Fuel, efficiency and CO2 enter the variable cost:
// (20 + 0.2 * 100) / 0.5 + 2 = 82 EUR/MWh.
TEST(PowerModel, VariableCostFromFuelAndCarbon) {
  auto t = gas(1.0, 2.0);
  t.fuel_eur_per_mwh_th = 20.0;
  t.efficiency = 0.5;
  t.emissions_t_per_mwh_th = 0.2;
  EXPECT_DOUBLE_EQ(t.variable_cost(100.0), 82.0);
  ModelInput in;
  in.params = bare({t});
  in.params.co2_price_eur_per_t = 100.0;
  in.system = series({10.0});
  expect_rel(run(in).total_cost, 10.0 * 1.0 + 10.0 * 82.0);
}

// 24 hours, load 50 + 2t: peak 96 MW, 1752 MWh.
// Capacity 240 EUR/MW over the day, energy 30 EUR/MWh: 96*240 + 1752*30.
TEST(PowerModel, DayOneTechnology) {
  std::vector<double> load(24);
  for (int t = 0; t < 24; ++t) load[static_cast<std::size_t>(t)] = 50.0 + 2.0 * t;
  ModelInput in;
  in.params = bare({gas(10.0, 30.0)});
  in.system = series(load);
  auto r = run(in);
  ASSERT_EQ(r.status, lp::Status::optimal);
  expect_rel(r.total_cost, 96.0 * 240.0 + 1752.0 * 30.0);
  expect_rel(r.total_cost, 75600.0);
  expect_rel(r.capacity_mw.at("CCGT"), 96.0);
}

// Screening curve: base 240 EUR/MW + 10 EUR/MWh, peak 48 EUR/MW + 50 EUR/MWh
// over 24 h. Break-even at (240 - 48) / (50 - 10) = 4.8 h, so base covers the
// 5th highest load (88 MW) and peak the remaining 8 MW.
TEST(PowerModel, ScreeningCurveTwoTechnologies) {
  std::vector<double> load(24);
  for (int t = 0; t < 24; ++t) load[static_cast<std::size_t>(t)] = 50.0 + 2.0 * t;
  auto base = gas(10.0, 10.0);
  base.name = "lignite";
  auto peak = gas(2.0, 50.0);
  peak.name = "OCGT";
  ModelInput in;
  in.params = bare({base, peak});
  in.system = series(load);
  auto r = run(in);
  ASSERT_EQ(r.status, lp::Status::optimal);

  // Oracle: the cost is convex piecewise linear in the base capacity K with
  // breakpoints at the load levels.
  const double peak_load = *std::max_element(load.begin(), load.end());
  double best = std::numeric_limits<double>::infinity();
  for (double k : load) {
    double c = k * 240.0 + (peak_load - k) * 48.0;
    for (double l : load) c += std::min(l, k) * 10.0 + std::max(l - k, 0.0) * 50.0;
    best = std::min(best, c);
  }
  expect_rel(r.total_cost, best);
  expect_rel(r.total_cost, 88.0 * 240.0 + 8.0 * 48.0 + 1732.0 * 10.0 + 20.0 * 50.0);
  expect_rel(r.capacity_mw.at("lignite"), 88.0);
  expect_rel(r.capacity_mw.at("OCGT"), 8.0);
}

// pv 100 EUR/MW, gas 1 EUR/MW + 50 EUR/MWh, floor 0.5 of 100 MWh:
// 50 MW pv and 50 MW gas, 5000 + 50 + 2500.
TEST(PowerModel, RenewableFloorBinds) {
  ModelInput in;
  in.params = bare({gas(1.0, 50.0), pv(100.0)}, 0.5);
  in.system = series({100.0}, {1.0});
  auto r = run(in);
  ASSERT_EQ(r.status, lp::Status::optimal);
  expect_rel(r.total_cost, 7550.0);
  expect_rel(r.renewable_share, 0.5);
}

TEST(PowerModel, FullRenewableFloorWithoutRenewablesIsInfeasible) {
  ModelInput in;
  in.params = bare({gas(1.0, 50.0)}, 1.0);
  in.system = series({100.0, 80.0});
  EXPECT_EQ(run(in).status, lp::Status::infeasible);
}

// pv at 5 EUR/MW per hour (10 over 2 h) shines in hour 0 only; gas costs
// 40 EUR/MW + 100 EUR/MWh. Free storage with round trip 0.8 * 0.8 moves
// 50 MWh into hour 1: pv 50 + 50 / 0.64 = 128.125 MW.
TEST(PowerModel, StorageArbitrage) {
  ModelInput in;
  in.params = bare({gas(20.0, 100.0), pv(5.0)});
  in.system = series({50.0, 50.0}, {1.0, 0.0});
  auto without = run(in);
  ASSERT_EQ(without.status, lp::Status::optimal);
  expect_rel(without.total_cost, 50.0 * 10.0 + 50.0 * 40.0 + 50.0 * 100.0);

  StorageParams s;
  s.name = "li_ion";
  s.charge_efficiency = 0.8;
  s.discharge_efficiency = 0.8;
  in.params.storages.push_back(s);
  auto with = run(in);
  ASSERT_EQ(with.status, lp::Status::optimal);
  expect_rel(with.total_cost, 128.125 * 10.0);
  expect_rel(with.storage_discharge_mw.at("li_ion"), 50.0);
  EXPECT_LT(with.max_balance_residual, 1e-6);
}

// 1000 cars drive 5 kWh in each of two hours and may charge 20 kW in both.
// Smart charging takes all 10 MWh from pv in hour 0 (10 MW * 10 EUR).
// Uncontrolled draws 5 MWh per hour: pv 5 MW plus 5 MW gas.
TEST(PowerModel, SmartChargingShiftsToCheapHours) {
  ModelInput in;
  in.params = bare({gas(20.0, 100.0), pv(5.0)});
  in.system = series({0.0, 0.0}, {1.0, 0.0});
  in.bevs = {bev("car", 1000.0, 20.0, {5.0, 5.0}, {20.0, 20.0}, {5.0, 5.0}, 10.0)};

  in.strategy = ChargingStrategy::smart;
  auto smart = run(in);
  ASSERT_EQ(smart.status, lp::Status::optimal);
  expect_rel(smart.total_cost, 100.0);
  expect_rel(smart.bev_charge_private_mw[0], 10.0);
  EXPECT_NEAR(smart.bev_charge_private_mw[1], 0.0, 1e-9);
  for (double d : smart.bev_discharge_private_mw) EXPECT_EQ(d, 0.0);

  in.strategy = ChargingStrategy::uncontrolled;
  auto unc = run(in);
  ASSERT_EQ(unc.status, lp::Status::optimal);
  expect_rel(unc.total_cost, 5.0 * 10.0 + 5.0 * 40.0 + 5.0 * 100.0);
}

// Load of 10 MW in hour 1 only. Without feed-back gas must cover it
// (400 + 1000). With V2G the fleet charges 10 MWh from pv in hour 0 and
// returns it: pv 10 MW (100) plus 10 MWh at 15 EUR/MWh.
TEST(PowerModel, BidirectionalChargingFeedsBack) {
  ModelInput in;
  in.params = bare({gas(20.0, 100.0), pv(5.0)});
  in.system = series({0.0, 10.0}, {1.0, 0.0});
  in.bevs = {bev("car", 1000.0, 20.0, {0.0, 0.0}, {20.0, 20.0}, {0.0, 0.0}, 0.0)};

  in.strategy = ChargingStrategy::smart;
  auto smart = run(in);
  ASSERT_EQ(smart.status, lp::Status::optimal);
  expect_rel(smart.total_cost, 1400.0);

  in.strategy = ChargingStrategy::bidirectional;
  auto bi = run(in);
  ASSERT_EQ(bi.status, lp::Status::optimal);
  expect_rel(bi.total_cost, 100.0 + 150.0);
  expect_rel(bi.bev_discharge_private_mw[1], 10.0);
}

TEST(PowerModel, ProfileThatCannotCoverItsDrivingIsNamed) {
  ModelInput in;
  in.params = bare({gas(1.0, 10.0)});
  in.system = series({1.0, 1.0});
  in.bevs = {bev("thirsty", 10.0, 20.0, {15.0, 15.0}, {0.0, 10.0}, {0.0, 10.0}, 20.0)};
  in.strategy = ChargingStrategy::uncontrolled;
  try {
    build_model(in);
    FAIL();
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("thirsty"), std::string::npos);
  }
}

TEST(PowerModel, HydrogenDemandIsServedByElectrolysis) {
  ModelInput in;
  in.params = bare({gas(1.0, 10.0)});
  in.params.hydrogen.enabled = true;
  in.params.hydrogen.demand_twh_per_year = 8.76;  // 1000 MWh per hour
  in.params.hydrogen.electrolysis_efficiency = 0.5;
  in.system = series({100.0, 100.0, 100.0});
  auto m = build_model(in);
  auto sol = lp::simplex_solve(m.lp);
  ASSERT_EQ(sol.status, lp::Status::optimal);
  double elec = 0.0;
  for (auto c : m.electrolysis) elec += sol.x[c];
  EXPECT_NEAR(elec, 3.0 * 1000.0 / 0.5, 1e-6);
}

// ---- fleet allocation ----

namespace {

FleetSpec two_cells() {
  FleetSpec f;
  f.total_bevs = 1000.0;
  f.cell_shares[{LocationType::metropolis, 3}] = 0.6;
  f.cell_shares[{LocationType::rural, 4}] = 0.4;
  f.uptake_cells[Uptake::low] = {{LocationType::metropolis, 3}};
  f.substitution_rate = 5.0;
  return f;
}

std::vector<ev::ProfileSpec> fleet_profiles() {
  std::vector<ev::ProfileSpec> v(5);
  v[0] = {"m_p1", LocationType::metropolis, 3, Ownership::private_car, {}, 0.0};
  v[1] = {"m_p2", LocationType::metropolis, 3, Ownership::private_car, {}, 0.0};
  v[2] = {"m_s1", LocationType::metropolis, 3, Ownership::shared, {}, 0.0};
  v[3] = {"m_s2", LocationType::metropolis, 3, Ownership::shared, {}, 0.0};
  v[4] = {"r_p1", LocationType::rural, 4, Ownership::private_car, {}, 0.0};
  return v;
}

}  // namespace

TEST(FleetAllocation, ReferenceUsesPrivateProfiles) {
  auto f = two_cells();
  f.uptake = Uptake::low;
  auto w = fleet_allocation(f, fleet_profiles(), FleetRole::reference);
  EXPECT_EQ(w, (std::vector<double>{300.0, 300.0, 0.0, 0.0, 400.0}));
}

// 600 cars at rate 5 -> 120 shared cars over two shared profiles.
TEST(FleetAllocation, ScenarioSubstitutesSwitchingCells) {
  auto f = two_cells();
  f.uptake = Uptake::low;
  auto w = fleet_allocation(f, fleet_profiles(), FleetRole::scenario);
  EXPECT_EQ(w, (std::vector<double>{0.0, 0.0, 60.0, 60.0, 400.0}));
  EXPECT_DOUBLE_EQ(f.substituted_cars(), 600.0);
}

TEST(FleetAllocation, SharedOnlyDropsOtherCells) {
  auto f = two_cells();
  f.uptake = Uptake::low;
  f.framework = Framework::shared_only;
  EXPECT_EQ(fleet_allocation(f, fleet_profiles(), FleetRole::reference),
            (std::vector<double>{300.0, 300.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(fleet_allocation(f, fleet_profiles(), FleetRole::scenario),
            (std::vector<double>{0.0, 0.0, 60.0, 60.0, 0.0}));
}

TEST(FleetAllocation, NoUptakeLeavesTheReferenceUnchanged) {
  auto f = two_cells();
  f.uptake = Uptake::none;
  EXPECT_EQ(fleet_allocation(f, fleet_profiles(), FleetRole::scenario),
            fleet_allocation(f, fleet_profiles(), FleetRole::reference));
  EXPECT_DOUBLE_EQ(f.substituted_cars(), 0.0);
}

TEST(FleetAllocation, RuralCellsNeverSwitch) {
  auto f = two_cells();
  f.uptake_cells[Uptake::high] = {{LocationType::rural, 4}};
  EXPECT_THROW(f.validate(), UserError);
}

TEST(FleetAllocation, AtLeastOneSharedCar) {
  auto f = two_cells();
  f.total_bevs = 2.0;
  f.uptake = Uptake::low;
  auto w = fleet_allocation(f, fleet_profiles(), FleetRole::scenario);
  EXPECT_DOUBLE_EQ(w[2] + w[3], 1.0);
}

// ---- synthetic desk fixture ----

namespace {

// 48 h of the synthetic system at reduced scale plus three hand-made
// profiles: a commuter, an evening driver and a shared car.
ModelInput desk_fixture(ChargingStrategy strategy) {
  ModelInput in;
  in.params = PowerParams::from_json(R"({
    "renewable_floor": 0.8,
    "technologies": [
      {"name": "CCGT", "investment_eur_per_mw": 85000, "fuel_eur_per_mwh_th": 30, "efficiency": 0.6,
       "emissions_t_per_mwh_th": 0.2, "availability": 0.95},
      {"name": "pv", "renewable": true, "investment_eur_per_mw": 42000, "availability_series": "pv"},
      {"name": "wind_onshore", "renewable": true, "investment_eur_per_mw": 95000,
       "availability_series": "wind_onshore"}
    ],
    "storages": [
      {"name": "li_ion", "charge_power_eur_per_mw": 5000, "discharge_power_eur_per_mw": 5000,
       "energy_eur_per_mwh": 18000, "charge_efficiency": 0.95, "discharge_efficiency": 0.95}
    ]
  })");
  auto full = synthetic_system_series(48, 4000, 3);
  in.system.base_load_mw = full.base_load_mw;
  in.system.heat_pump_mw = full.heat_pump_mw;
  for (auto& v : in.system.base_load_mw) v /= 1000.0;
  for (auto& v : in.system.heat_pump_mw) v /= 1000.0;
  in.system.availability["pv"] = full.availability.at("pv");
  in.system.availability["wind_onshore"] = full.availability.at("wind_onshore");
  in.strategy = strategy;

  std::vector<double> cons(48, 0.0), rating(48, 11.0), unc(48, 0.0);
  for (std::size_t d = 0; d < 2; ++d) {
    cons[d * 24 + 7] = 6.0;
    cons[d * 24 + 17] = 6.0;
    for (std::size_t h = 7; h <= 17; ++h) rating[d * 24 + h] = h == 7 || h == 17 ? 0.0 : 3.7;
    unc[d * 24 + 18] = 11.0;
    unc[d * 24 + 19] = 1.0;
  }
  in.bevs.push_back(bev("commuter", 20000.0, 58.0, cons, rating, unc, 40.0));

  std::vector<double> cons2(48, 0.0), rating2(48, 22.0), unc2(48, 0.0);
  for (std::size_t d = 0; d < 2; ++d) {
    cons2[d * 24 + 20] = 9.0;
    rating2[d * 24 + 20] = 0.0;
    unc2[d * 24 + 21] = 9.0;
  }
  in.bevs.push_back(bev("evening", 15000.0, 58.0, cons2, rating2, unc2, 30.0));

  std::vector<double> cons3(48, 0.0), rating3(48, 75.0), unc3(48, 0.0);
  for (std::size_t t = 8; t < 46; t += 3) {
    cons3[t] = 12.0;
    rating3[t] = 0.0;
    unc3[t + 1] = 12.0;
  }
  auto shared = bev("shared", 4000.0, 100.0, cons3, rating3, unc3, 60.0);
  shared.ownership = Ownership::shared;
  in.bevs.push_back(shared);
  return in;
}

}  // namespace

TEST(PowerProperties, StrategyCostOrdering) {
  auto unc = run(desk_fixture(ChargingStrategy::uncontrolled));
  auto smart = run(desk_fixture(ChargingStrategy::smart));
  auto bi = run(desk_fixture(ChargingStrategy::bidirectional));
  ASSERT_EQ(unc.status, lp::Status::optimal);
  ASSERT_EQ(smart.status, lp::Status::optimal);
  ASSERT_EQ(bi.status, lp::Status::optimal);
  const double tol = 1e-7 * unc.total_cost;
  EXPECT_LE(smart.total_cost, unc.total_cost + tol);
  EXPECT_LE(bi.total_cost, smart.total_cost + tol);
}

TEST(PowerProperties, BalanceFloorAndBevBounds) {
  for (auto s : {ChargingStrategy::uncontrolled, ChargingStrategy::smart, ChargingStrategy::bidirectional}) {
    auto in = desk_fixture(s);
    auto m = build_model(in);
    auto sol = lp::simplex_solve(m.lp);
    ASSERT_EQ(sol.status, lp::Status::optimal);
    auto r = solve(m, in);
    EXPECT_LE(r.max_balance_residual, 1e-3);
    EXPECT_GE(r.renewable_share, in.params.renewable_floor - 1e-9);
    if (s == ChargingStrategy::uncontrolled) continue;
    for (std::size_t p = 0; p < in.bevs.size(); ++p) {
      const auto& b = in.bevs[p];
      const double scale = b.weight / 1000.0;
      for (std::size_t t = 0; t < 48; ++t) {
        const auto& c = m.bev[p];
        const double soc = sol.x[c.soc[t]];
        EXPECT_GE(soc, -1e-6);
        EXPECT_LE(soc, scale * b.battery_kwh + 1e-6);
        const double ch = c.charge[t] == npos ? 0.0 : sol.x[c.charge[t]];
        EXPECT_LE(ch, scale * b.rating_kw[t] + 1e-6);
        if (s != ChargingStrategy::bidirectional) EXPECT_EQ(c.discharge[t], npos);
      }
    }
    for (double d : r.bev_discharge_private_mw)
      if (s == ChargingStrategy::smart) EXPECT_EQ(d, 0.0);
  }
}

// Curtailment is free, so an extra MWh of load never lowers the cost.
TEST(PowerProperties, BalancePricesAreNonNegative) {
  auto r = run(desk_fixture(ChargingStrategy::smart));
  ASSERT_EQ(r.status, lp::Status::optimal);
  for (double p : r.price) EXPECT_GE(p, -1e-6);
}

TEST(PowerProperties, Deterministic) {
  auto a = run(desk_fixture(ChargingStrategy::bidirectional));
  auto b = run(desk_fixture(ChargingStrategy::bidirectional));
  EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(PowerProperties, MpsRoundTripKeepsTheObjective) {
  auto in = desk_fixture(ChargingStrategy::smart);
  auto m = build_model(in);
  auto direct = lp::simplex_solve(m.lp);
  std::istringstream text(lp::export_mps_string(m.lp, lp::MpsNames::indexed));
  auto back = lp::import_mps(text);
  auto again = lp::simplex_solve(back);
  ASSERT_EQ(again.status, lp::Status::optimal);
  EXPECT_NEAR(again.objective, direct.objective, 1e-5 * std::abs(direct.objective));
}

TEST(Reports, JsonRoundTrip) {
  auto r = run(desk_fixture(ChargingStrategy::smart));
  auto back = SolutionReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
}

TEST(Reports, IdenticalRunsGiveZeroDeltas) {
  auto r = run(desk_fixture(ChargingStrategy::smart));
  auto d = compute_kpis(r, r, 1000.0);
  EXPECT_EQ(d.delta_cost, 0.0);
  EXPECT_EQ(d.delta_per_car, 0.0);
  for (const auto& [k, v] : d.capacity_delta_mw) EXPECT_EQ(v, 0.0) << k;
  for (const auto& [k, v] : d.generation_delta_mwh) EXPECT_EQ(v, 0.0) << k;
}

TEST(Reports, PerCarDelta) {
  SolutionReport ref, scen;
  ref.status = scen.status = lp::Status::optimal;
  ref.hours = scen.hours = 24;
  ref.annual_cost = 1000.0;
  scen.annual_cost = 1600.0;
  auto d = compute_kpis(scen, ref, 20.0);
  EXPECT_DOUBLE_EQ(d.delta_cost, 600.0);
  EXPECT_DOUBLE_EQ(d.delta_per_car, 30.0);
  auto none = compute_kpis(scen, ref, 0.0);
  EXPECT_FALSE(none.per_car_defined);
}

TEST(Reports, MismatchedHorizonsAreRejected) {
  SolutionReport ref, scen;
  ref.status = scen.status = lp::Status::optimal;
  ref.hours = 24;
  scen.hours = 48;
  EXPECT_THROW(compute_kpis(scen, ref, 1.0), UserError);
}

TEST(Parameters, UnknownKeysAreRejected) {
  EXPECT_THROW(PowerParams::from_json(R"({"technologies": [{"name": "x", "efficency": 0.5}]})"), UserError);
  EXPECT_THROW(PowerParams::from_json(R"({"renewable_flor": 0.8})"), UserError);
}
