#pragma once

// Batch execution: turn scenario configs into solved results and write every
// artifact (per-scenario CSV dumps, metrics table, run manifest). Scenarios
// run in a small worker pool; all output ordering follows the config list so
// repeated runs are byte-identical.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prosumeq/equilibrium.hpp"
#include "prosumeq/metrics.hpp"
#include "prosumeq/scenario.hpp"
#include "prosumeq/synthetic.hpp"

namespace prosumeq {

struct ScenarioData {
  ProsumageParams household;
  DispatchParams dispatch;  // demand here is the non-prosumage share
};

inline ScenarioData load_scenario_data(const ScenarioConfig& c) {
  TimeSeries hh_demand, pv, onshore, offshore, ror, national;
  if (c.synthetic) {
    auto d = synthetic_profiles();
    hh_demand = std::move(d.household_demand);
    pv = std::move(d.pv_cf);
    onshore = std::move(d.onshore_cf);
    offshore = std::move(d.offshore_cf);
    ror = std::move(d.ror_cf);
    national = std::move(d.national_demand);
  } else {
    const auto dir = std::filesystem::path(c.data_dir);
    hh_demand = load_timeseries((dir / "household_demand.csv").string(), Unit::kw);
    pv = load_timeseries((dir / "pv_cf.csv").string(), Unit::fraction);
    onshore = load_timeseries((dir / "onshore_cf.csv").string(), Unit::fraction);
    offshore = load_timeseries((dir / "offshore_cf.csv").string(), Unit::fraction);
    ror = load_timeseries((dir / "ror_cf.csv").string(), Unit::fraction);
    national = load_timeseries((dir / "national_demand.csv").string(), Unit::mw);
  }
  if (c.subsample > 1) {
    for (TimeSeries* ts : {&hh_demand, &pv, &onshore, &offshore, &ror, &national})
      *ts = subsample(*ts, c.subsample);
  }

  ScenarioData out;
  out.household.demand = hh_demand;
  out.household.pv_cf = pv;
  out.household.pv_max_kw = c.pv_max_kw;
  out.household.pv_annuity = c.pv_annuity;
  out.household.storage_energy_annuity = c.storage_energy_annuity;
  out.household.storage_power_annuity = c.storage_power_annuity;
  out.household.storage_efficiency = c.storage_efficiency;

  out.dispatch.thermal = c.thermal;
  for (const auto& r : c.res) {
    const TimeSeries* cf = nullptr;
    if (r.name == "solar") cf = &pv;
    else if (r.name == "onshore") cf = &onshore;
    else if (r.name == "offshore") cf = &offshore;
    else if (r.name == "ror") cf = &ror;
    else if (!c.synthetic) {
      // custom technologies bring their own capacity-factor file
      static thread_local TimeSeries custom;
      custom = load_timeseries(
          (std::filesystem::path(c.data_dir) / (r.name + "_cf.csv")).string(), Unit::fraction);
      if (c.subsample > 1) custom = subsample(custom, c.subsample);
      cf = &custom;
    } else {
      throw std::invalid_argument("synthetic data has no capacity factors for res tech '" +
                                  r.name + "'");
    }
    out.dispatch.res.push_back({r.name, r.capacity_mw, *cf});
  }
  out.dispatch.psp = c.psp;
  out.dispatch.voll = c.voll;

  // carve the prosumage segment out of the national curve
  out.dispatch.demand = national;
  const double f = c.equilibrium.n_households / 1000.0;
  for (std::size_t h = 0; h < national.size(); ++h) {
    out.dispatch.demand.values[h] = national[h] - f * hh_demand[h];
    if (out.dispatch.demand.values[h] < 0.0)
      throw std::invalid_argument("national demand smaller than the prosumage segment at step " +
                                  std::to_string(h));
  }
  return out;
}

// Demand-weighted mean wholesale price of the no-prosumage world, EUR/kWh.
inline double calibrate_batch_energy_charge(const ScenarioConfig& c) {
  const auto data = load_scenario_data(c);
  DispatchParams world = data.dispatch;
  const double f = c.equilibrium.n_households / 1000.0;
  for (std::size_t h = 0; h < world.demand.size(); ++h)
    world.demand.values[h] += f * data.household.demand[h];
  return calibrate_energy_charge(world);
}

struct ScenarioOutcome {
  std::string name;
  bool ran = false;        // false: failed before/inside the solver
  bool converged = false;
  bool kkt_ok = false;
  int iterations = 0;
  double energy_charge = 0.0;
  std::string message;
  ScenarioResult result;
  MetricsReport metrics;
  ProsumageParams household_params;
};

namespace run_detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string join_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

}  // namespace run_detail

inline ScenarioOutcome run_scenario(const ScenarioConfig& config, double calibrated_energy_charge = -1.0) {
  ScenarioOutcome out;
  out.name = config.name;
  try {
    const auto data = load_scenario_data(config);
    Tariff tariff = config.tariff;
    if (calibrated_energy_charge >= 0.0 && tariff.energy_mode == EnergyChargeMode::fixed_rate)
      tariff.energy_charge = calibrated_energy_charge;
    out.energy_charge = tariff.energy_mode == EnergyChargeMode::fixed_rate ? tariff.energy_charge : -1.0;
    out.household_params = data.household;
    out.result = solve_scenario(config.name, tariff, data.household, data.dispatch,
                                config.equilibrium);
    out.ran = out.result.solved();
    out.converged = out.result.converged;
    out.kkt_ok = out.ran && out.result.max_kkt_residual() <= config.equilibrium.kkt_tolerance;
    out.iterations = out.result.iterations;
    out.message = out.result.message;
    if (out.ran) out.metrics = metrics_report(data.household, out.result.tariff, out.result.household);
  } catch (const std::exception& e) {
    out.message = e.what();
  }
  return out;
}

namespace run_detail {

inline void write_household_csv(const std::filesystem::path& path, const ProsumageParams& p,
                                const HouseholdSolution& s) {
  std::string text = "hour,pv_gen,g_pro2pro,g_pro2m,cu,sto_in,sto_out,sto_level,e_m2pro\n";
  for (std::size_t h = 0; h < s.grid_purchase.size(); ++h) {
    text += join_row({std::to_string(h), format_double(p.pv_cf[h] * s.n_pv),
                      format_double(s.self_consumption[h]), format_double(s.feed_in[h]),
                      format_double(s.curtailment[h]), format_double(s.charge[h]),
                      format_double(s.discharge[h]), format_double(s.level[h]),
                      format_double(s.grid_purchase[h])});
  }
  write_text(path, text);
}

inline void write_dispatch_csv(const std::filesystem::path& path, const ScenarioResult& r) {
  const auto& d = r.dispatch;
  std::string header = "hour";
  // tech order in the solution mirrors the config order
  for (std::size_t i = 0; i < d.thermal_generation.size(); ++i) header += ",g_con_" + std::to_string(i);
  for (std::size_t i = 0; i < d.res_generation.size(); ++i)
    header += ",g_res_" + std::to_string(i) + ",cu_res_" + std::to_string(i);
  header += ",sto_in,sto_out,sto_level,lost_load\n";
  std::string text = header;
  for (std::size_t h = 0; h < d.charge.size(); ++h) {
    std::vector<std::string> cells{std::to_string(h)};
    for (const auto& g : d.thermal_generation) cells.push_back(format_double(g[h]));
    for (std::size_t i = 0; i < d.res_generation.size(); ++i) {
      cells.push_back(format_double(d.res_generation[i][h]));
      cells.push_back(format_double(d.res_curtailment[i][h]));
    }
    cells.push_back(format_double(d.charge[h]));
    cells.push_back(format_double(d.discharge[h]));
    cells.push_back(format_double(d.level[h]));
    cells.push_back(format_double(d.lost_load[h]));
    text += join_row(cells);
  }
  write_text(path, text);
}

inline void write_prices_csv(const std::filesystem::path& path, const ScenarioResult& r) {
  std::string text = "hour,lambda_eur_mwh,canonical_eur_mwh,retail_eur_kwh,feed_in_eur_kwh\n";
  for (std::size_t h = 0; h < r.dispatch.price.size(); ++h) {
    const double sell = r.tariff.feed_in_mode == FeedInMode::prohibited ? 0.0 : r.tariff.sell(h);
    text += join_row({std::to_string(h), format_double(r.dispatch.price[h]),
                      format_double(r.canonical_price[h]), format_double(r.tariff.buy(h)),
                      format_double(sell)});
  }
  write_text(path, text);
}

inline void write_convergence_csv(const std::filesystem::path& path, const ScenarioResult& r) {
  std::string text = "iteration,max_price_change,z_pro,z_sys,hh_kkt_residual,disp_kkt_residual\n";
  for (const auto& l : r.log)
    text += join_row({std::to_string(l.iteration), format_double(l.max_price_change),
                      format_double(l.z_pro), format_double(l.z_sys),
                      format_double(l.hh_kkt_residual), format_double(l.disp_kkt_residual)});
  write_text(path, text);
}

inline void write_rldc_csv(const std::filesystem::path& path, const std::vector<double>& rldc) {
  std::string text = "rank,kw\n";
  for (std::size_t i = 0; i < rldc.size(); ++i)
    text += join_row({std::to_string(i), format_double(rldc[i])});
  write_text(path, text);
}

inline const char* metrics_header() {
  return "scenario,status,converged,iterations,regime,z_pro,n_pv_kw,n_sto_e_kwh,n_sto_p_kw,"
         "sc_rate,autarky_rate,peak_demand_kw,peak_feed_in_kw,zero_hours_share,"
         "bill_invest_pv,bill_invest_sto,bill_energy,bill_other,bill_fixed,bill_feed_in_revenue,"
         "bill_net_total,non_energy_contribution,grid_energy_kwh,feed_energy_kwh,"
         "energy_charge,coupling_residual,hh_kkt,disp_kkt\n";
}

inline std::string metrics_row(const ScenarioOutcome& o) {
  if (!o.ran) {
    std::vector<std::string> cells(28, "");
    cells[0] = o.name;
    cells[1] = "failed";
    cells[2] = "false";
    cells[3] = "0";
    cells[4] = "-";
    return join_row(cells);
  }
  const auto& m = o.metrics;
  const auto& r = o.result;
  std::vector<std::string> cells{
      o.name,
      "ok",
      o.converged ? "true" : "false",
      std::to_string(o.iterations),
      std::string(1, regime_letter(m.regime)),
      format_double(r.household.objective),
      format_double(m.pv_capacity),
      format_double(m.sto_energy_capacity),
      format_double(m.sto_power_capacity),
      format_double(m.sc_rate),
      format_double(m.autarky_rate),
      format_double(m.peak_demand_kw),
      format_double(m.peak_feed_in_kw),
      format_double(m.zero_hours_share),
      format_double(m.bill.investment_pv),
      format_double(m.bill.investment_sto),
      format_double(m.bill.grid_cost_energy),
      format_double(m.bill.grid_cost_other),
      format_double(m.bill.grid_cost_fixed),
      format_double(m.bill.feed_in_revenue),
      format_double(m.bill.net_total),
      format_double(m.non_energy_contribution),
      format_double(m.grid_energy_kwh),
      format_double(m.feed_energy_kwh),
      format_double(o.energy_charge),
      format_double(r.coupling_residual),
      format_double(r.household_kkt.max_residual),
      format_double(r.dispatch_kkt.max_residual),
  };
  return join_row(cells);
}

}  // namespace run_detail

struct BatchOptions {
  bool calibrate = false;  // recompute the energy charge from a no-prosumage run
  int workers = 0;         // 0: PROSUMEQ_WORKERS env var, else hardware concurrency
};

struct BatchResult {
  int exit_code = 0;  // 0 ok, 1 any scenario failed or missed verification
  double calibrated_energy_charge = -1.0;
  std::vector<ScenarioOutcome> outcomes;
  std::string manifest_json;
};

inline BatchResult run_batch(const std::vector<ScenarioConfig>& configs,
                             const std::string& output_dir, const BatchOptions& options = {}) {
  namespace fs = std::filesystem;
  BatchResult batch;
  fs::create_directories(output_dir);

  for (std::size_t i = 0; i < configs.size(); ++i)
    for (std::size_t j = i + 1; j < configs.size(); ++j)
      if (configs[i].name == configs[j].name)
        throw std::invalid_argument("duplicate scenario name '" + configs[i].name + "'");

  double calibrated = -1.0;
  if (options.calibrate && !configs.empty())
    calibrated = batch.calibrated_energy_charge = calibrate_batch_energy_charge(configs.front());

  int workers = options.workers;
  if (workers <= 0) {
    if (const char* env = std::getenv("PROSUMEQ_WORKERS")) workers = std::atoi(env);
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min(workers, static_cast<int>(std::max<std::size_t>(configs.size(), 1)));

  batch.outcomes.resize(configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      batch.outcomes[i] = run_scenario(configs[i], calibrated);
    }
  };
  if (workers <= 1 || configs.size() <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // persistence, strictly in config order
  nlohmann::ordered_json manifest;
  manifest["schema"] = "prosumeq-run-manifest-v1";
  manifest["calibrated_energy_charge"] = calibrated;
  manifest["scenarios"] = nlohmann::ordered_json::array();
  std::string metrics_text = run_detail::metrics_header();

  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& cfg = configs[i];
    const auto& o = batch.outcomes[i];
    nlohmann::ordered_json entry;
    entry["name"] = cfg.name;
    entry["config_hash"] = run_detail::hex64(run_detail::fnv1a(serialize_scenario_config(cfg)));
    entry["status"] = o.ran ? "ok" : "failed";
    entry["converged"] = o.converged;
    entry["kkt_ok"] = o.kkt_ok;
    entry["iterations"] = o.iterations;
    entry["message"] = o.message;
    entry["kkt_tolerance"] = cfg.equilibrium.kkt_tolerance;
    entry["price_tolerance"] = cfg.equilibrium.price_tolerance;
    entry["files"] = nlohmann::ordered_json::array();

    if (o.ran) {
      const auto dir = std::filesystem::path(output_dir);
      const std::string hh_file = "household_" + cfg.name + ".csv";
      const std::string disp_file = "dispatch_" + cfg.name + ".csv";
      const std::string price_file = "prices_" + cfg.name + ".csv";
      const std::string conv_file = "convergence_" + cfg.name + ".csv";
      const std::string rldc_file = "rldc_" + cfg.name + ".csv";
      run_detail::write_household_csv(dir / hh_file, o.household_params, o.result.household);
      run_detail::write_dispatch_csv(dir / disp_file, o.result);
      run_detail::write_prices_csv(dir / price_file, o.result);
      run_detail::write_convergence_csv(dir / conv_file, o.result);
      run_detail::write_rldc_csv(dir / rldc_file, o.metrics.rldc);
      for (const auto& f : {hh_file, disp_file, price_file, conv_file, rldc_file})
        entry["files"].push_back(f);
    }
    manifest["scenarios"].push_back(std::move(entry));
    metrics_text += run_detail::metrics_row(o);
    if (!o.ran || !o.kkt_ok) batch.exit_code = 1;
  }

  run_detail::write_text(std::filesystem::path(output_dir) / "metrics.csv", metrics_text);
  batch.manifest_json = manifest.dump(2) + "\n";
  run_detail::write_text(std::filesystem::path(output_dir) / "manifest.json", batch.manifest_json);
  return batch;
}

}  // namespace prosumeq
