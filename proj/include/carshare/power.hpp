#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "carshare/ev.hpp"
#include "carshare/lp.hpp"
#include "carshare/types.hpp"

namespace carshare::power {

inline constexpr double hours_per_year = 8760.0;

struct TechnologyParams {
  std::string name;
  bool renewable = false;
  double investment_eur_per_mw = 0.0;  // annualized
  double fixed_om_eur_per_mw = 0.0;    // per year
  double fuel_eur_per_mwh_th = 0.0;
  double efficiency = 1.0;             // electric output per thermal input
  double emissions_t_per_mwh_th = 0.0;
  double other_variable_eur_per_mwh = 0.0;
  double max_capacity_mw = lp::inf;
  // Scalar availability for dispatchables; renewables name an hourly series.
  double availability = 1.0;
  std::string availability_series;

  // (fuel + emissions * co2_price) / efficiency + other variable cost.
  double variable_cost(double co2_price) const;
};

struct StorageParams {
  std::string name;
  double charge_power_eur_per_mw = 0.0;     // annualized incl. fixed O&M
  double discharge_power_eur_per_mw = 0.0;
  double energy_eur_per_mwh = 0.0;
  double charge_efficiency = 1.0;
  double discharge_efficiency = 1.0;
  double max_energy_mwh = lp::inf;
};

struct HydrogenParams {
  bool enabled = false;
  double demand_twh_per_year = 30.0;          // hydrogen, flat over the year
  double electrolysis_efficiency = 30.0 / 42.0;
  double electrolysis_eur_per_mw = 0.0;
  double store_eur_per_mwh = 0.0;
};

struct PowerParams {
  std::vector<TechnologyParams> technologies;
  std::vector<StorageParams> storages;
  HydrogenParams hydrogen;
  double co2_price_eur_per_t = 130.0;
  double renewable_floor = 0.8;
  double v2g_cost_eur_per_mwh = 15.0;
  // Consumption in the renewable-share denominator: base, heat pumps and net
  // BEV charging always; electrolysis and storage losses by flag.
  bool share_includes_electrolysis = true;
  bool share_includes_storage_losses = true;
  // Multiplier on annual capacity costs; negative means hours / 8760.
  double capacity_cost_scale = -1.0;

  static PowerParams from_json(const std::string& text);
  static PowerParams load(const std::filesystem::path& path);
  void validate() const;
};

// Hourly exogenous inputs (MW = MWh per hour).
struct SystemSeries {
  std::vector<double> base_load_mw;
  std::vector<double> heat_pump_mw;
  std::map<std::string, std::vector<double>> availability;  // renewable capacity factors

  std::size_t hours() const { return base_load_mw.size(); }
  void validate(const PowerParams& params) const;
};

// Deterministic fixture: demand around 470 TWh/a base plus 52 TWh/a heat
// pumps (temperature-driven), capacity factors for pv, wind and run of river.
SystemSeries synthetic_system_series(std::size_t hours, std::size_t start_hour, std::uint64_t seed);
SystemSeries read_system_series(const std::filesystem::path& path);
void write_system_series(const SystemSeries& s, std::ostream& out);

enum class ChargingStrategy { uncontrolled, smart, bidirectional };
std::string_view to_string(ChargingStrategy s);
ChargingStrategy charging_strategy_from(std::string_view s);

enum class Uptake { none, low, high };
enum class Framework { shared_only, shared_plus_other };
enum class FleetRole { reference, scenario };
std::string_view to_string(Uptake u);
std::string_view to_string(Framework f);
Uptake uptake_from(std::string_view s);
Framework framework_from(std::string_view s);

struct FleetCell {
  LocationType location = LocationType::metropolis;
  int cluster = 3;
  auto operator<=>(const FleetCell&) const = default;
};

struct FleetSpec {
  double total_bevs = 15e6;
  std::map<FleetCell, double> cell_shares;  // sum to 1
  std::map<Uptake, std::set<FleetCell>> uptake_cells;
  Uptake uptake = Uptake::none;
  Framework framework = Framework::shared_plus_other;
  double substitution_rate = 5.0;

  double cell_cars(const FleetCell& c) const;
  const std::set<FleetCell>& switching_cells() const;
  double substituted_cars() const;
  void validate() const;
};

// Cars represented by each profile (index-aligned with `profiles`).
// Reference: private profiles carry cell_cars / profiles_in_cell. Scenario:
// switching cells use shared profiles at round(cell_cars / rate) /
// profiles_in_cell. Under shared_only both roles contain switching cells only.
std::vector<double> fleet_allocation(const FleetSpec& spec, const std::vector<ev::ProfileSpec>& profiles,
                                     FleetRole role);

// One representative vehicle in the model, hourly, per car.
struct BevProfile {
  std::string id;
  Ownership ownership = Ownership::private_car;
  double weight = 0.0;
  double battery_kwh = 0.0;
  double charge_efficiency = 1.0;
  double discharge_efficiency = 1.0;
  std::vector<double> consumption_kwh;
  std::vector<double> rating_kw;
  std::vector<double> uncontrolled_kwh;  // fixed-rule grid draw
  double uncontrolled_initial_soc_kwh = 0.0;

  static BevProfile from(const ev::VehicleProfile& p, double weight, ev::ChargingRule uncontrolled_rule);
};

struct ModelInput {
  PowerParams params;
  SystemSeries system;
  std::vector<BevProfile> bevs;
  ChargingStrategy strategy = ChargingStrategy::smart;
};

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

// Column and row indices of the built LP.
struct Model {
  lp::StandardFormLp lp;
  std::size_t hours = 0;
  std::vector<std::size_t> tech_cap;
  std::vector<std::vector<std::size_t>> tech_gen;  // [tech][t]
  struct StorageCols {
    std::size_t cap_charge = npos, cap_discharge = npos, cap_energy = npos;
    std::vector<std::size_t> charge, discharge, level;
  };
  std::vector<StorageCols> storage;
  struct BevCols {
    std::vector<std::size_t> charge, discharge, soc;  // npos where absent
  };
  std::vector<BevCols> bev;
  std::size_t electrolysis_cap = npos, h2_store_cap = npos;
  std::vector<std::size_t> electrolysis, h2_level;
  std::vector<std::size_t> balance_rows;
  std::size_t renewable_row = npos;
  std::vector<double> exogenous_load_mw;  // base + heat pumps + uncontrolled BEVs
  std::vector<double> uncontrolled_bev_mw;
  double hydrogen_demand_mwh_per_h = 0.0;
};

// Throws UserError on inconsistent horizons or a profile that cannot cover
// its driving with the available charging (named).
Model build_model(const ModelInput& in);

struct SolutionReport {
  lp::Status status = lp::Status::infeasible;
  std::size_t hours = 0;
  double total_cost = 0.0;  // objective, horizon cost
  double annual_cost = 0.0; // scaled by 8760 / hours
  std::map<std::string, double> capacity_mw;
  std::map<std::string, double> generation_mwh;
  std::map<std::string, double> curtailment_mwh;
  std::map<std::string, double> storage_charge_mw, storage_discharge_mw, storage_energy_mwh;
  double electrolysis_mw = 0.0, h2_store_mwh = 0.0;
  double renewable_share = 0.0;
  double consumption_mwh = 0.0;  // renewable-share denominator
  double max_balance_residual = 0.0;
  std::vector<double> price;              // dual of the hourly balance, EUR/MWh
  std::vector<double> residual_load_mw;   // load minus variable renewables
  std::vector<double> bev_charge_private_mw, bev_charge_shared_mw;
  std::vector<double> bev_discharge_private_mw, bev_discharge_shared_mw;
  std::vector<double> bev_soc_mwh;
  std::size_t iterations = 0;
  std::vector<std::string> log;

  std::string to_json() const;
  static SolutionReport from_json(const std::string& text);
};

SolutionReport solve(const Model& model, const ModelInput& in, const lp::SimplexOptions& options = {});

struct DeltaReport {
  double reference_cost = 0.0, scenario_cost = 0.0;  // annualized EUR/a
  double delta_cost = 0.0;
  double substituted_cars = 0.0;
  bool per_car_defined = false;
  double delta_per_car = 0.0;  // EUR per substituted car and year
  double reference_share = 0.0, scenario_share = 0.0;
  std::map<std::string, double> capacity_delta_mw, generation_delta_mwh;

  std::string to_json() const;
};

// Throws UserError if the horizons differ.
DeltaReport compute_kpis(const SolutionReport& scenario, const SolutionReport& reference, double substituted_cars);

void write_capacity_table(const SolutionReport& r, std::ostream& out);
void write_hourly_table(const SolutionReport& r, std::ostream& out);

}  // namespace carshare::power
