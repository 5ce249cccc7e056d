#pragma once

// Scenario definitions: the builtin tariff catalog, the reference power
// system, and a flat `key = value` config format with parse, serialize and
// solver-free validation.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prosumeq/costs.hpp"
#include "prosumeq/csv.hpp"
#include "prosumeq/dispatch.hpp"
#include "prosumeq/equilibrium.hpp"
#include "prosumeq/household.hpp"

namespace prosumeq {

struct ResCapacity {
  std::string name;
  double capacity_mw = 0.0;
};

struct ScenarioConfig {
  std::string name;
  Tariff tariff;

  bool synthetic = true;
  std::string data_dir;  // CSV directory when not synthetic
  int subsample = 1;

  EquilibriumConfig equilibrium;

  // household block; annuities include the annual fixed costs (PV 64.75+17,
  // battery 21.94 and 14.98 each plus half of the 10 EUR/kW fixed part)
  double pv_max_kw = 10.0;
  double pv_annuity = 81.75;              // EUR/kW/a
  double storage_energy_annuity = 26.94;  // EUR/kWh/a
  double storage_power_annuity = 19.98;   // EUR/kW/a
  double storage_efficiency = 0.92;

  // dispatch block
  std::vector<ThermalTech> thermal;
  std::vector<ResCapacity> res;
  PumpedStorage psp{9000.0, 60000.0, 0.8};
  double voll = 3000.0;
};

// thermal fleet with marginal costs derived from fuel, carbon and efficiency
inline std::vector<ThermalTech> reference_thermal() {
  const double co2 = 29.4;  // EUR/t
  auto mc = [&](double fuel, double emission_factor, double eff) {
    ThermalTechInputs in;
    in.fuel_price = fuel;
    in.emission_factor = emission_factor;
    in.efficiency = eff;
    return marginal_cost(in, co2);
  };
  return {
      {"bio", 6000.0, mc(10.0, 0.0, 0.487)},
      {"lignite", 9000.0, mc(5.6, 0.311, 0.38)},
      {"hardcoal", 8000.0, mc(8.4, 0.26, 0.43)},
      {"ccgt", 24000.0, mc(26.4, 0.155, 0.542)},
      {"ocgt", 12000.0, mc(26.4, 0.155, 0.4)},
      {"oil", 1500.0, mc(48.3, 0.216, 0.35)},
  };
}

inline std::vector<ResCapacity> reference_res() {
  return {{"onshore", 82000.0}, {"offshore", 17000.0}, {"solar", 91000.0}, {"ror", 5000.0}};
}

inline ScenarioConfig base_scenario() {
  ScenarioConfig c;
  c.thermal = reference_thermal();
  c.res = reference_res();
  return c;
}

// the sixteen tariff designs: volumetric family, fixed-part family, and
// real-time pricing variants
inline std::vector<ScenarioConfig> builtin_catalog() {
  std::vector<ScenarioConfig> out;
  auto add = [&](const std::string& name, double t_other, double t_fix, FeedInMode mode,
                 double fit, double cap, EnergyChargeMode ener_mode) {
    ScenarioConfig c = base_scenario();
    c.name = name;
    c.tariff.energy_mode = ener_mode;
    c.tariff.energy_charge = 0.05;
    c.tariff.other_charge = t_other;
    c.tariff.fixed_charge = t_fix;
    c.tariff.feed_in_mode = mode;
    c.tariff.feed_in_rate = mode == FeedInMode::fixed_rate ? fit : 0.0;
    c.tariff.feed_in_premium = mode == FeedInMode::wholesale_premium ? fit : 0.0;
    c.tariff.feed_in_cap_fraction = cap;
    out.push_back(std::move(c));
  };
  using FM = FeedInMode;
  using EM = EnergyChargeMode;
  add("Retail_30_FIT_8", 0.25, 0.0, FM::fixed_rate, 0.08, 0.0, EM::fixed_rate);
  add("Retail_30_FIT_6", 0.25, 0.0, FM::fixed_rate, 0.06, 0.0, EM::fixed_rate);
  add("Retail_30_FIT_4", 0.25, 0.0, FM::fixed_rate, 0.04, 0.0, EM::fixed_rate);
  add("Retail_30_FIT_2", 0.25, 0.0, FM::fixed_rate, 0.02, 0.0, EM::fixed_rate);
  add("Retail_30_FIT_0", 0.25, 0.0, FM::prohibited, 0.0, 0.0, EM::fixed_rate);
  add("Retail_30_FIT_8_Cap", 0.25, 0.0, FM::fixed_rate, 0.08, 0.5, EM::fixed_rate);
  add("Retail_25_FIT_8", 0.20, 250.0, FM::fixed_rate, 0.08, 0.0, EM::fixed_rate);
  add("Retail_20_FIT_8", 0.15, 500.0, FM::fixed_rate, 0.08, 0.0, EM::fixed_rate);
  add("Retail_15_FIT_8", 0.10, 750.0, FM::fixed_rate, 0.08, 0.0, EM::fixed_rate);
  add("Retail_25_FIT_0", 0.20, 250.0, FM::prohibited, 0.0, 0.0, EM::fixed_rate);
  add("Retail_20_FIT_0", 0.15, 500.0, FM::prohibited, 0.0, 0.0, EM::fixed_rate);
  add("Retail_15_FIT_0", 0.10, 750.0, FM::prohibited, 0.0, 0.0, EM::fixed_rate);
  add("Retail_30_FIT_RTP", 0.25, 0.0, FM::wholesale, 0.0, 0.0, EM::fixed_rate);
  add("Retail_RTP_FIT_5", 0.25, 0.0, FM::fixed_rate, 0.05, 0.0, EM::wholesale);
  add("Retail_RTP_FIT_RTP", 0.25, 0.0, FM::wholesale, 0.0, 0.0, EM::wholesale);
  add("Retail_RTP_FIT_RTP+3", 0.25, 0.0, FM::wholesale_premium, 0.03, 0.0, EM::wholesale);
  return out;
}

// ---------------------------------------------------------------------------
// Flat config text: `key = value`, one per line, `#` comments. Unknown keys
// are errors so typos do not silently fall back to defaults.

namespace cfg_detail {

inline std::string mode_name(EnergyChargeMode m) {
  return m == EnergyChargeMode::wholesale ? "wholesale" : "fixed";
}
inline std::string mode_name(FeedInMode m) {
  switch (m) {
    case FeedInMode::fixed_rate: return "fixed";
    case FeedInMode::prohibited: return "prohibited";
    case FeedInMode::wholesale: return "wholesale";
    case FeedInMode::wholesale_premium: return "wholesale_premium";
  }
  return "fixed";
}

inline EnergyChargeMode parse_energy_mode(const std::string& s) {
  if (s == "fixed") return EnergyChargeMode::fixed_rate;
  if (s == "wholesale") return EnergyChargeMode::wholesale;
  throw std::invalid_argument("unknown energy mode '" + s + "'");
}
inline FeedInMode parse_feed_mode(const std::string& s) {
  if (s == "fixed") return FeedInMode::fixed_rate;
  if (s == "prohibited") return FeedInMode::prohibited;
  if (s == "wholesale") return FeedInMode::wholesale;
  if (s == "wholesale_premium") return FeedInMode::wholesale_premium;
  throw std::invalid_argument("unknown feed-in mode '" + s + "'");
}

struct KeyValue {
  std::string key, value;
  int line = 0;
};

inline std::vector<KeyValue> split_pairs(const std::string& text) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(no) + ": expected key = value");
    KeyValue kv{trim(t.substr(0, eq)), trim(t.substr(eq + 1)), no};
    if (kv.key.empty()) throw std::invalid_argument("line " + std::to_string(no) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

}  // namespace cfg_detail

inline std::string serialize_scenario_config(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "name = " << c.name << "\n";
  out << "tariff.energy_mode = " << cfg_detail::mode_name(c.tariff.energy_mode) << "\n";
  out << "tariff.energy_charge = " << format_double(c.tariff.energy_charge) << "\n";
  out << "tariff.other_charge = " << format_double(c.tariff.other_charge) << "\n";
  out << "tariff.fixed_charge = " << format_double(c.tariff.fixed_charge) << "\n";
  out << "tariff.feed_in_mode = " << cfg_detail::mode_name(c.tariff.feed_in_mode) << "\n";
  out << "tariff.feed_in_rate = " << format_double(c.tariff.feed_in_rate) << "\n";
  out << "tariff.feed_in_premium = " << format_double(c.tariff.feed_in_premium) << "\n";
  out << "tariff.feed_in_cap_fraction = " << format_double(c.tariff.feed_in_cap_fraction) << "\n";
  out << "data.source = " << (c.synthetic ? "synthetic" : "dir") << "\n";
  if (!c.data_dir.empty()) out << "data.dir = " << c.data_dir << "\n";
  out << "resolution.subsample = " << c.subsample << "\n";
  out << "equilibrium.damping = " << format_double(c.equilibrium.damping) << "\n";
  out << "equilibrium.max_iterations = " << c.equilibrium.max_iterations << "\n";
  out << "equilibrium.price_tolerance = " << format_double(c.equilibrium.price_tolerance) << "\n";
  out << "equilibrium.kkt_tolerance = " << format_double(c.equilibrium.kkt_tolerance) << "\n";
  out << "equilibrium.n_households = " << format_double(c.equilibrium.n_households) << "\n";
  out << "household.pv_max_kw = " << format_double(c.pv_max_kw) << "\n";
  out << "household.pv_annuity = " << format_double(c.pv_annuity) << "\n";
  out << "household.storage_energy_annuity = " << format_double(c.storage_energy_annuity) << "\n";
  out << "household.storage_power_annuity = " << format_double(c.storage_power_annuity) << "\n";
  out << "household.storage_efficiency = " << format_double(c.storage_efficiency) << "\n";
  out << "dispatch.voll = " << format_double(c.voll) << "\n";
  out << "dispatch.psp.power_mw = " << format_double(c.psp.power_mw) << "\n";
  out << "dispatch.psp.energy_mwh = " << format_double(c.psp.energy_mwh) << "\n";
  out << "dispatch.psp.efficiency = " << format_double(c.psp.efficiency) << "\n";
  for (const auto& t : c.thermal) {
    out << "dispatch.thermal." << t.name << ".capacity_mw = " << format_double(t.capacity_mw) << "\n";
    out << "dispatch.thermal." << t.name << ".marginal_cost = " << format_double(t.marginal_cost) << "\n";
  }
  for (const auto& r : c.res)
    out << "dispatch.res." << r.name << ".capacity_mw = " << format_double(r.capacity_mw) << "\n";
  return out.str();
}

inline ScenarioConfig parse_scenario_config(const std::string& text) {
  ScenarioConfig c;  // techs come only from the file
  c.psp = PumpedStorage{0.0, 0.0, 0.8};
  auto number = [](const cfg_detail::KeyValue& kv) {
    try {
      return parse_double(kv.value, "config", static_cast<std::size_t>(kv.line));
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(kv.line) + ": bad number '" + kv.value +
                                  "' for " + kv.key);
    }
  };
  auto integer = [&](const cfg_detail::KeyValue& kv) {
    const double v = number(kv);
    if (v != std::floor(v)) throw std::invalid_argument("line " + std::to_string(kv.line) + ": " +
                                                        kv.key + " must be an integer");
    return static_cast<int>(v);
  };

  for (const auto& kv : cfg_detail::split_pairs(text)) {
    const std::string& k = kv.key;
    if (k == "name") c.name = kv.value;
    else if (k == "tariff.energy_mode") c.tariff.energy_mode = cfg_detail::parse_energy_mode(kv.value);
    else if (k == "tariff.energy_charge") c.tariff.energy_charge = number(kv);
    else if (k == "tariff.other_charge") c.tariff.other_charge = number(kv);
    else if (k == "tariff.fixed_charge") c.tariff.fixed_charge = number(kv);
    else if (k == "tariff.feed_in_mode") c.tariff.feed_in_mode = cfg_detail::parse_feed_mode(kv.value);
    else if (k == "tariff.feed_in_rate") c.tariff.feed_in_rate = number(kv);
    else if (k == "tariff.feed_in_premium") c.tariff.feed_in_premium = number(kv);
    else if (k == "tariff.feed_in_cap_fraction") c.tariff.feed_in_cap_fraction = number(kv);
    else if (k == "data.source") {
      if (kv.value == "synthetic") c.synthetic = true;
      else if (kv.value == "dir") c.synthetic = false;
      else throw std::invalid_argument("line " + std::to_string(kv.line) +
                                       ": data.source must be synthetic or dir");
    }
    else if (k == "data.dir") c.data_dir = kv.value;
    else if (k == "resolution.subsample") c.subsample = integer(kv);
    else if (k == "equilibrium.damping") c.equilibrium.damping = number(kv);
    else if (k == "equilibrium.max_iterations") c.equilibrium.max_iterations = integer(kv);
    else if (k == "equilibrium.price_tolerance") c.equilibrium.price_tolerance = number(kv);
    else if (k == "equilibrium.kkt_tolerance") c.equilibrium.kkt_tolerance = number(kv);
    else if (k == "equilibrium.n_households") c.equilibrium.n_households = number(kv);
    else if (k == "household.pv_max_kw") c.pv_max_kw = number(kv);
    else if (k == "household.pv_annuity") c.pv_annuity = number(kv);
    else if (k == "household.storage_energy_annuity") c.storage_energy_annuity = number(kv);
    else if (k == "household.storage_power_annuity") c.storage_power_annuity = number(kv);
    else if (k == "household.storage_efficiency") c.storage_efficiency = number(kv);
    else if (k == "dispatch.voll") c.voll = number(kv);
    else if (k == "dispatch.psp.power_mw") c.psp.power_mw = number(kv);
    else if (k == "dispatch.psp.energy_mwh") c.psp.energy_mwh = number(kv);
    else if (k == "dispatch.psp.efficiency") c.psp.efficiency = number(kv);
    else if (k.rfind("dispatch.thermal.", 0) == 0 || k.rfind("dispatch.res.", 0) == 0) {
      const bool is_thermal = k.rfind("dispatch.thermal.", 0) == 0;
      const std::string rest = k.substr(is_thermal ? 17 : 13);
      const auto dot = rest.rfind('.');
      if (dot == std::string::npos || dot == 0)
        throw std::invalid_argument("line " + std::to_string(kv.line) + ": expected " +
                                    (is_thermal ? "dispatch.thermal" : "dispatch.res") +
                                    ".<name>.<field>");
      const std::string tech = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      if (is_thermal) {
        auto it = std::find_if(c.thermal.begin(), c.thermal.end(),
                               [&](const ThermalTech& t) { return t.name == tech; });
        if (it == c.thermal.end()) {
          c.thermal.push_back({tech, 0.0, 0.0});
          it = c.thermal.end() - 1;
        }
        if (field == "capacity_mw") it->capacity_mw = number(kv);
        else if (field == "marginal_cost") it->marginal_cost = number(kv);
        else throw std::invalid_argument("line " + std::to_string(kv.line) + ": unknown field '" +
                                         field + "' for thermal tech");
      } else {
        auto it = std::find_if(c.res.begin(), c.res.end(),
                               [&](const ResCapacity& r) { return r.name == tech; });
        if (it == c.res.end()) {
          c.res.push_back({tech, 0.0});
          it = c.res.end() - 1;
        }
        if (field == "capacity_mw") it->capacity_mw = number(kv);
        else throw std::invalid_argument("line " + std::to_string(kv.line) + ": unknown field '" +
                                         field + "' for res tech");
      }
    }
    else throw std::invalid_argument("line " + std::to_string(kv.line) + ": unknown key '" + k + "'");
  }
  return c;
}

// Required files in a data directory and their expected units.
struct DataFileSpec {
  const char* file;
  Unit unit;
};
inline const std::vector<DataFileSpec>& data_file_specs() {
  static const std::vector<DataFileSpec> specs = {
      {"household_demand.csv", Unit::kw}, {"pv_cf.csv", Unit::fraction},
      {"onshore_cf.csv", Unit::fraction}, {"offshore_cf.csv", Unit::fraction},
      {"ror_cf.csv", Unit::fraction},     {"national_demand.csv", Unit::mw},
  };
  return specs;
}

// Schema/sanity check of a config file without solving anything. Diagnostics
// come back as strings; an empty list means the config is runnable.
inline std::vector<std::string> validate_config(const std::string& path) {
  std::vector<std::string> diags;
  std::ifstream in(path, std::ios::binary);
  if (!in) return {"cannot open " + path};
  std::ostringstream buf;
  buf << in.rdbuf();

  ScenarioConfig c;
  try {
    c = parse_scenario_config(buf.str());
  } catch (const std::exception& e) {
    return {std::string(e.what())};
  }

  if (c.name.empty()) diags.push_back("name: missing");
  auto charge_in_range = [&](const char* field, double v) {
    if (!(v >= 0.0 && v <= 10.0))
      diags.push_back(std::string(field) + ": " + format_double(v) +
                      " outside [0, 10] EUR/kWh");
  };
  charge_in_range("tariff.energy_charge", c.tariff.energy_charge);
  charge_in_range("tariff.other_charge", c.tariff.other_charge);
  charge_in_range("tariff.feed_in_rate", c.tariff.feed_in_rate);
  charge_in_range("tariff.feed_in_premium", c.tariff.feed_in_premium);
  if (c.tariff.fixed_charge < 0.0) diags.push_back("tariff.fixed_charge: negative");
  if (c.tariff.feed_in_cap_fraction < 0.0 || c.tariff.feed_in_cap_fraction > 1.0)
    diags.push_back("tariff.feed_in_cap_fraction: outside [0, 1]");
  if (c.tariff.feed_in_cap_fraction > 0.0 && c.tariff.feed_in_mode == FeedInMode::prohibited)
    diags.push_back("tariff: feed-in cap combined with prohibited feed-in");
  if (c.subsample < 1) diags.push_back("resolution.subsample: must be >= 1");
  try {
    validate_equilibrium(c.equilibrium);
  } catch (const std::exception& e) {
    diags.push_back(e.what());
  }
  if (c.pv_max_kw <= 0.0) diags.push_back("household.pv_max_kw: must be positive");
  for (const auto& [field, v] : std::initializer_list<std::pair<const char*, double>>{
           {"household.pv_annuity", c.pv_annuity},
           {"household.storage_energy_annuity", c.storage_energy_annuity},
           {"household.storage_power_annuity", c.storage_power_annuity}})
    if (v < 0.0 || !std::isfinite(v)) diags.push_back(std::string(field) + ": must be non-negative");
  if (c.storage_efficiency <= 0.0 || c.storage_efficiency > 1.0)
    diags.push_back("household.storage_efficiency: outside (0, 1]");
  if (c.psp.efficiency <= 0.0 || c.psp.efficiency > 1.0)
    diags.push_back("dispatch.psp.efficiency: outside (0, 1]");
  if (c.psp.power_mw < 0.0 || c.psp.energy_mwh < 0.0) diags.push_back("dispatch.psp: negative size");
  for (const auto& t : c.thermal) {
    if (t.capacity_mw < 0.0) diags.push_back("dispatch.thermal." + t.name + ": negative capacity");
    if (t.marginal_cost < 0.0) diags.push_back("dispatch.thermal." + t.name + ": negative marginal cost");
  }
  for (const auto& r : c.res)
    if (r.capacity_mw < 0.0) diags.push_back("dispatch.res." + r.name + ": negative capacity");

  if (!c.synthetic) {
    if (c.data_dir.empty()) {
      diags.push_back("data.dir: required when data.source = dir");
      return diags;
    }
    std::size_t horizon = 0;
    const char* horizon_file = "";
    for (const auto& spec : data_file_specs()) {
      const auto file = std::filesystem::path(c.data_dir) / spec.file;
      if (!std::filesystem::exists(file)) {
        diags.push_back("missing data file " + file.string());
        continue;
      }
      try {
        const auto series = load_timeseries(file.string(), spec.unit);
        if (horizon == 0) {
          horizon = series.size();
          horizon_file = spec.file;
        } else if (series.size() != horizon) {
          diags.push_back(std::string("horizon mismatch: ") + spec.file + " has " +
                          std::to_string(series.size()) + " steps, " + horizon_file + " has " +
                          std::to_string(horizon));
        }
      } catch (const std::exception& e) {
        diags.push_back(std::string(spec.file) + ": " + e.what());
      }
    }
  }
  return diags;
}

}  // namespace prosumeq
