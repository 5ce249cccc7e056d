#pragma once

// Indicators computed from a solved household: self-consumption and autarky
// rates, the bill split into its tariff components, the residual load
// duration curve, peaks, and the contribution to non-energy system costs.
// Everything is per household in kW/kWh; aggregation to MW happens upstream.

#include <algorithm>
#include <cmath>
#include <vector>

#include "prosumeq/household.hpp"
#include "prosumeq/tariff.hpp"

namespace prosumeq {

struct BillDecomposition {
  double investment_pv = 0.0;
  double investment_sto = 0.0;
  double grid_cost_energy = 0.0;  // volumetric energy charge
  double grid_cost_other = 0.0;   // volumetric non-energy charges
  double grid_cost_fixed = 0.0;   // annual fixed part
  double feed_in_revenue = 0.0;   // enters net_total with a minus
  double net_total = 0.0;
};

struct MetricsReport {
  double sc_rate = 0.0;
  double autarky_rate = 0.0;
  double autarky_rate_alt = 0.0;  // 1 - grid share; equals autarky_rate by the balance row
  bool zero_generation = false;   // no PV: sc_rate defined as 0
  bool zero_demand = false;
  BillDecomposition bill;
  std::vector<double> rldc;  // net exchange, kW, sorted descending
  double peak_demand_kw = 0.0;
  double peak_feed_in_kw = 0.0;
  double zero_hours_share = 0.0;  // |net| <= zero_threshold_kw counts as zero
  double non_energy_contribution = 0.0;
  double grid_energy_kwh = 0.0;  // annual E_m2pro
  double feed_energy_kwh = 0.0;  // annual G_pro2m
  double pv_capacity = 0.0;
  double sto_energy_capacity = 0.0;
  double sto_power_capacity = 0.0;
  Regime regime = Regime::A;
};

inline constexpr double kZeroResidualKw = 0.001;  // 1 W, so coarse steps still register zeros

inline double self_consumption_rate(const ProsumageParams& p, const HouseholdSolution& s,
                                    bool* zero_generation = nullptr) {
  double used = 0.0, available = 0.0;
  for (std::size_t h = 0; h < s.self_consumption.size(); ++h) {
    used += s.self_consumption[h] + s.charge[h];
    available += p.pv_cf[h] * s.n_pv;
  }
  if (zero_generation) *zero_generation = available <= 0.0;
  return available > 0.0 ? used / available : 0.0;
}

inline double autarky_rate(const ProsumageParams& p, const HouseholdSolution& s,
                           bool* zero_demand = nullptr) {
  double own = 0.0, demand = 0.0;
  for (std::size_t h = 0; h < s.self_consumption.size(); ++h) {
    own += s.self_consumption[h] + s.discharge[h];
    demand += p.demand[h];
  }
  if (zero_demand) *zero_demand = demand <= 0.0;
  return demand > 0.0 ? own / demand : 0.0;
}

inline BillDecomposition bill_decomposition(const ProsumageParams& p, const Tariff& t,
                                            const HouseholdSolution& s) {
  BillDecomposition b;
  b.investment_pv = p.pv_annuity * s.n_pv;
  b.investment_sto = p.storage_energy_annuity * s.n_sto_e + p.storage_power_annuity * s.n_sto_p;
  b.grid_cost_fixed = t.fixed_charge;
  const double delta = s.delta_hours;
  for (std::size_t h = 0; h < s.grid_purchase.size(); ++h) {
    const double energy_rate =
        t.energy_mode == EnergyChargeMode::wholesale ? t.wholesale[h] : t.energy_charge;
    b.grid_cost_energy += delta * s.grid_purchase[h] * energy_rate;
    b.grid_cost_other += delta * s.grid_purchase[h] * t.other_charge;
    b.feed_in_revenue += delta * s.feed_in[h] * t.sell(h);
  }
  b.net_total = b.investment_pv + b.investment_sto + b.grid_cost_energy + b.grid_cost_other +
                b.grid_cost_fixed - b.feed_in_revenue;
  return b;
}

// net grid exchange per hour (purchase minus feed-in), sorted descending
inline std::vector<double> residual_load_duration_curve(const HouseholdSolution& s) {
  std::vector<double> net(s.grid_purchase.size());
  for (std::size_t h = 0; h < net.size(); ++h) net[h] = s.grid_purchase[h] - s.feed_in[h];
  std::sort(net.begin(), net.end(), std::greater<double>());
  return net;
}

inline std::pair<double, double> peaks(const HouseholdSolution& s) {
  double peak_demand = 0.0, peak_feed = 0.0;
  for (std::size_t h = 0; h < s.grid_purchase.size(); ++h) {
    peak_demand = std::max(peak_demand, s.grid_purchase[h] - s.feed_in[h]);
    peak_feed = std::max(peak_feed, s.feed_in[h] - s.grid_purchase[h]);
  }
  return {peak_demand, peak_feed};
}

inline double non_energy_contribution(const Tariff& t, const HouseholdSolution& s) {
  double volumetric = 0.0;
  for (std::size_t h = 0; h < s.grid_purchase.size(); ++h)
    volumetric += s.delta_hours * s.grid_purchase[h] * t.other_charge;
  return volumetric + t.fixed_charge;
}

inline MetricsReport metrics_report(const ProsumageParams& p, const Tariff& t,
                                    const HouseholdSolution& s) {
  MetricsReport m;
  m.sc_rate = self_consumption_rate(p, s, &m.zero_generation);
  m.autarky_rate = autarky_rate(p, s, &m.zero_demand);
  m.bill = bill_decomposition(p, t, s);
  m.rldc = residual_load_duration_curve(s);
  std::tie(m.peak_demand_kw, m.peak_feed_in_kw) = peaks(s);
  m.non_energy_contribution = non_energy_contribution(t, s);
  m.pv_capacity = s.n_pv;
  m.sto_energy_capacity = s.n_sto_e;
  m.sto_power_capacity = s.n_sto_p;

  double demand = 0.0, grid = 0.0, zero_hours = 0.0;
  for (std::size_t h = 0; h < s.grid_purchase.size(); ++h) {
    demand += p.demand[h];
    grid += s.grid_purchase[h];
    m.grid_energy_kwh += s.delta_hours * s.grid_purchase[h];
    m.feed_energy_kwh += s.delta_hours * s.feed_in[h];
    if (std::fabs(s.grid_purchase[h] - s.feed_in[h]) <= kZeroResidualKw) zero_hours += 1.0;
  }
  m.autarky_rate_alt = demand > 0.0 ? 1.0 - grid / demand : 0.0;
  m.zero_hours_share = s.grid_purchase.empty() ? 0.0 : zero_hours / s.grid_purchase.size();

  double flh = 0.0, mean_buy = 0.0, mean_sell = 0.0;
  for (std::size_t h = 0; h < p.pv_cf.size(); ++h) {
    flh += p.pv_cf[h] * p.pv_cf.step_hours;
    mean_buy += t.buy(h);
    mean_sell += t.feed_in_mode == FeedInMode::prohibited ? 0.0 : t.sell(h);
  }
  mean_buy /= p.pv_cf.size();
  mean_sell /= p.pv_cf.size();
  m.regime = classify_regime(pv_lcoe(p.pv_annuity, flh),
                             storage_lcos(p.storage_energy_annuity, p.storage_power_annuity,
                                          p.storage_efficiency),
                             mean_buy, mean_sell);
  return m;
}

}  // namespace prosumeq
