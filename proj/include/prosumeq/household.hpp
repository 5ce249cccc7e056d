#pragma once

// Prosumage household: joint sizing (PV, battery energy/power) and dispatch
// against a retail tariff, as one LP per year. Internal units: kW, kWh,
// EUR/kWh, per representative household.
//
// Time convention: flows are average kW over each step of delta hours, so all
// volumetric money and energy terms carry a factor delta and the storage
// recursion moves delta x flow kWh per step.
//
// Dual conventions (raw LP duals of this formulation):
//   lambda_balance[h]  demand-balance equality; EUR per kW-step, i.e. divide
//                      by delta for EUR/kWh
//   lambda_pv[h]       pv-split equality (generation - uses = 0)
//   lambda_storage[h]  level recursion  lvl[h-1] + c_in*delta*in - c_out*delta*out - lvl[h] = 0
//   mu_*               capacity rows rewritten as >= 0 multipliers
// At degenerate optima these are one valid dual vertex among several.

#include <cmath>
#include <string>
#include <vector>

#include "prosumeq/kkt.hpp"
#include "prosumeq/lp.hpp"
#include "prosumeq/simplex.hpp"
#include "prosumeq/tariff.hpp"
#include "prosumeq/timeseries.hpp"

namespace prosumeq {

struct ProsumageParams {
  TimeSeries demand;  // kW per household
  TimeSeries pv_cf;   // fraction, same step and length as demand
  double pv_max_kw = 10.0;
  double pv_annuity = 0.0;              // EUR/kW/a, investment + fixed O&M
  double storage_energy_annuity = 0.0;  // EUR/kWh/a
  double storage_power_annuity = 0.0;   // EUR/kW/a
  double storage_efficiency = 0.92;     // round trip
};

inline void validate_prosumage(const ProsumageParams& p) {
  if (p.demand.size() == 0) throw std::invalid_argument("household: empty demand");
  if (p.demand.size() != p.pv_cf.size() || p.demand.step_hours != p.pv_cf.step_hours)
    throw std::invalid_argument("household: demand and pv series disagree on resolution");
  if (p.pv_max_kw < 0.0) throw std::invalid_argument("household: negative pv cap");
  if (!(p.storage_efficiency > 0.0) || p.storage_efficiency > 1.0)
    throw std::invalid_argument("household: storage efficiency outside (0,1]");
  if (p.pv_annuity < 0.0 || p.storage_energy_annuity < 0.0 || p.storage_power_annuity < 0.0)
    throw std::invalid_argument("household: negative annuity");
}

struct HouseholdSolution {
  lp::SolveStatus status = lp::SolveStatus::numerical_breakdown;
  std::string message;
  double objective = 0.0;  // annual net expenditure, EUR
  double n_pv = 0.0, n_sto_e = 0.0, n_sto_p = 0.0;
  std::vector<double> grid_purchase, self_consumption, feed_in, curtailment;  // kW
  std::vector<double> charge, discharge;                                      // kW
  std::vector<double> level;                                                  // kWh
  std::vector<double> lambda_balance, lambda_pv, lambda_storage;
  std::vector<double> mu_level_cap, mu_charge_cap, mu_discharge_cap, mu_feed_cap;
  double reduced_cost_pv = 0.0, reduced_cost_sto_e = 0.0, reduced_cost_sto_p = 0.0;
  double delta_hours = 1.0;
  int iterations = 0;

  std::size_t steps() const { return grid_purchase.size(); }
};

namespace hh_detail {

// Column layout (H = number of steps): series blocks in this order, then the
// three capacity variables. The grid-purchase block first helps the solver
// start from the pure-consumer point.
struct Layout {
  int H = 0;
  int buy = 0, cu = 0, self = 0, feed = 0, chg = 0, dis = 0, lvl = 0;
  int n_pv = 0, n_sto_e = 0, n_sto_p = 0;
  explicit Layout(int steps) : H(steps) {
    buy = 0; cu = H; self = 2 * H; feed = 3 * H; chg = 4 * H; dis = 5 * H; lvl = 6 * H;
    n_pv = 7 * H; n_sto_e = 7 * H + 1; n_sto_p = 7 * H + 2;
  }
};

}  // namespace hh_detail

inline lp::LinearProgram build_household_lp(const ProsumageParams& p, const Tariff& tariff) {
  validate_prosumage(p);
  const int H = static_cast<int>(p.demand.size());
  validate_tariff(tariff, p.demand.size());
  const double delta = p.demand.step_hours;
  const double c_in = (1.0 + p.storage_efficiency) / 2.0;   // charge factor
  const double c_out = 2.0 / (1.0 + p.storage_efficiency);  // discharge drain factor
  const bool no_feed = tariff.feed_in_mode == FeedInMode::prohibited;
  const bool feed_cap = tariff.feed_in_cap_fraction > 0.0;

  lp::LinearProgram m;
  const hh_detail::Layout ix(H);
  auto id = [](const char* base, int h) { return std::string(base) + std::to_string(h); };

  for (int h = 0; h < H; ++h) m.add_variable(id("buy", h), 0.0, lp::kInf, delta * tariff.buy(h));
  for (int h = 0; h < H; ++h) m.add_variable(id("cu", h), 0.0, lp::kInf, 0.0);
  for (int h = 0; h < H; ++h) m.add_variable(id("self", h), 0.0, lp::kInf, 0.0);
  for (int h = 0; h < H; ++h)
    m.add_variable(id("feed", h), 0.0, no_feed ? 0.0 : lp::kInf, no_feed ? 0.0 : -delta * tariff.sell(h));
  for (int h = 0; h < H; ++h) m.add_variable(id("chg", h), 0.0, lp::kInf, 0.0);
  for (int h = 0; h < H; ++h) m.add_variable(id("dis", h), 0.0, lp::kInf, 0.0);
  for (int h = 0; h < H; ++h) m.add_variable(id("lvl", h), 0.0, lp::kInf, 0.0);
  m.add_variable("n_pv", 0.0, p.pv_max_kw, p.pv_annuity);
  m.add_variable("n_sto_e", 0.0, lp::kInf, p.storage_energy_annuity);
  m.add_variable("n_sto_p", 0.0, lp::kInf, p.storage_power_annuity);
  m.objective_offset = tariff.fixed_charge;

  for (int h = 0; h < H; ++h)  // demand balance: self + discharge + purchase = demand
    m.add_constraint(id("balance", h), lp::Relation::equal, p.demand[h],
                     {ix.self + h, ix.dis + h, ix.buy + h}, {1.0, 1.0, 1.0});
  for (int h = 0; h < H; ++h)  // pv split: cf*n_pv = self + feed + curtail + charge
    m.add_constraint(id("pv_split", h), lp::Relation::equal, 0.0,
                     {ix.n_pv, ix.self + h, ix.feed + h, ix.cu + h, ix.chg + h},
                     {p.pv_cf[h], -1.0, -1.0, -1.0, -1.0});
  for (int h = 0; h < H; ++h) {  // level recursion, empty start
    if (h == 0)
      m.add_constraint(id("sto_rec", h), lp::Relation::equal, 0.0,
                       {ix.chg + h, ix.dis + h, ix.lvl + h},
                       {c_in * delta, -c_out * delta, -1.0});
    else
      m.add_constraint(id("sto_rec", h), lp::Relation::equal, 0.0,
                       {ix.lvl + h - 1, ix.chg + h, ix.dis + h, ix.lvl + h},
                       {1.0, c_in * delta, -c_out * delta, -1.0});
  }
  for (int h = 0; h < H; ++h)
    m.add_constraint(id("level_cap", h), lp::Relation::less_equal, 0.0,
                     {ix.lvl + h, ix.n_sto_e}, {1.0, -1.0});
  for (int h = 0; h < H; ++h)
    m.add_constraint(id("charge_cap", h), lp::Relation::less_equal, 0.0,
                     {ix.chg + h, ix.n_sto_p}, {1.0, -1.0});
  for (int h = 0; h < H; ++h)
    m.add_constraint(id("discharge_cap", h), lp::Relation::less_equal, 0.0,
                     {ix.dis + h, ix.n_sto_p}, {1.0, -1.0});
  if (feed_cap && !no_feed)
    for (int h = 0; h < H; ++h)
      m.add_constraint(id("feed_cap", h), lp::Relation::less_equal, 0.0,
                       {ix.feed + h, ix.n_pv}, {1.0, -tariff.feed_in_cap_fraction});
  return m;
}

inline HouseholdSolution solve_household(const ProsumageParams& p, const Tariff& tariff,
                                         const lp::SolveOptions& opts = {}) {
  const auto model = build_household_lp(p, tariff);
  const auto sol = lp::solve_lp(model, opts);
  HouseholdSolution out;
  out.status = sol.status;
  out.message = sol.message;
  out.iterations = sol.iterations;
  out.delta_hours = p.demand.step_hours;
  if (sol.status != lp::SolveStatus::optimal) return out;

  const int H = static_cast<int>(p.demand.size());
  const hh_detail::Layout ix(H);
  const bool feed_cap = tariff.feed_in_cap_fraction > 0.0 && tariff.feed_in_mode != FeedInMode::prohibited;
  out.objective = sol.objective;
  out.n_pv = sol.x[ix.n_pv];
  out.n_sto_e = sol.x[ix.n_sto_e];
  out.n_sto_p = sol.x[ix.n_sto_p];
  auto slice = [&](int base) { return std::vector<double>(sol.x.begin() + base, sol.x.begin() + base + H); };
  out.grid_purchase = slice(ix.buy);
  out.curtailment = slice(ix.cu);
  out.self_consumption = slice(ix.self);
  out.feed_in = slice(ix.feed);
  out.charge = slice(ix.chg);
  out.discharge = slice(ix.dis);
  out.level = slice(ix.lvl);
  auto rows = [&](int base, double sign) {
    return [&, base, sign](int h) { return sign * sol.y[base + h]; };
  };
  out.lambda_balance.resize(H);
  out.lambda_pv.resize(H);
  out.lambda_storage.resize(H);
  out.mu_level_cap.resize(H);
  out.mu_charge_cap.resize(H);
  out.mu_discharge_cap.resize(H);
  out.mu_feed_cap.assign(H, 0.0);
  for (int h = 0; h < H; ++h) {
    out.lambda_balance[h] = rows(0, 1.0)(h);
    out.lambda_pv[h] = rows(H, 1.0)(h);
    out.lambda_storage[h] = rows(2 * H, 1.0)(h);
    out.mu_level_cap[h] = rows(3 * H, -1.0)(h);
    out.mu_charge_cap[h] = rows(4 * H, -1.0)(h);
    out.mu_discharge_cap[h] = rows(5 * H, -1.0)(h);
    if (feed_cap) out.mu_feed_cap[h] = rows(6 * H, -1.0)(h);
  }
  out.reduced_cost_pv = sol.reduced_cost[ix.n_pv];
  out.reduced_cost_sto_e = sol.reduced_cost[ix.n_sto_e];
  out.reduced_cost_sto_p = sol.reduced_cost[ix.n_sto_p];
  return out;
}

// ---------------------------------------------------------------------------
// Optimality verification, re-derived from raw parameters and the returned
// solution only (independent of the LP object, so it also guards the builder).

inline KktReport check_household_kkt(const ProsumageParams& p, const Tariff& tariff,
                                     const HouseholdSolution& s) {
  const int H = static_cast<int>(p.demand.size());
  const double delta = p.demand.step_hours;
  const double c_in = (1.0 + p.storage_efficiency) / 2.0;
  const double c_out = 2.0 / (1.0 + p.storage_efficiency);
  const bool no_feed = tariff.feed_in_mode == FeedInMode::prohibited;
  const bool feed_cap = tariff.feed_in_cap_fraction > 0.0 && !no_feed;

  KktReport report;
  kkt_detail::Collector cc{&report.conditions};
  using C = kkt_detail::Collector;

  auto max_over_h = [&](auto&& f) {
    double worst = 0.0;
    for (int h = 0; h < H; ++h) worst = std::max(worst, f(h));
    return worst;
  };

  // stationarity + complementarity per decision series
  cc.add("stat_grid_purchase", max_over_h([&](int h) {
           const double r = delta * tariff.buy(h) - s.lambda_balance[h];
           return C::stat_res(r, std::fabs(delta * tariff.buy(h)) + std::fabs(s.lambda_balance[h]));
         }));
  cc.add("comp_grid_purchase", max_over_h([&](int h) {
           return C::comp_res(delta * tariff.buy(h) - s.lambda_balance[h], s.grid_purchase[h]);
         }));
  cc.add("stat_self_supply", max_over_h([&](int h) {
           const double r = -s.lambda_balance[h] + s.lambda_pv[h];
           return C::stat_res(r, std::fabs(s.lambda_balance[h]) + std::fabs(s.lambda_pv[h]));
         }));
  cc.add("comp_self_supply", max_over_h([&](int h) {
           return C::comp_res(-s.lambda_balance[h] + s.lambda_pv[h], s.self_consumption[h]);
         }));
  if (!no_feed) {
    cc.add("stat_feed_in", max_over_h([&](int h) {
             const double r = -delta * tariff.sell(h) + s.lambda_pv[h] + s.mu_feed_cap[h];
             return C::stat_res(r, std::fabs(delta * tariff.sell(h)) + std::fabs(s.lambda_pv[h]) +
                                       std::fabs(s.mu_feed_cap[h]));
           }));
    cc.add("comp_feed_in", max_over_h([&](int h) {
             return C::comp_res(-delta * tariff.sell(h) + s.lambda_pv[h] + s.mu_feed_cap[h], s.feed_in[h]);
           }));
  }
  cc.add("stat_curtailment", max_over_h([&](int h) {
           return C::stat_res(s.lambda_pv[h], std::fabs(s.lambda_pv[h]));
         }));
  cc.add("comp_curtailment", max_over_h([&](int h) {
           return C::comp_res(s.lambda_pv[h], s.curtailment[h]);
         }));
  cc.add("stat_charge", max_over_h([&](int h) {
           const double r = s.lambda_pv[h] - delta * c_in * s.lambda_storage[h] + s.mu_charge_cap[h];
           return C::stat_res(r, std::fabs(s.lambda_pv[h]) + std::fabs(delta * c_in * s.lambda_storage[h]) +
                                     std::fabs(s.mu_charge_cap[h]));
         }));
  cc.add("comp_charge", max_over_h([&](int h) {
           return C::comp_res(s.lambda_pv[h] - delta * c_in * s.lambda_storage[h] + s.mu_charge_cap[h],
                              s.charge[h]);
         }));
  cc.add("stat_discharge", max_over_h([&](int h) {
           const double r = -s.lambda_balance[h] + delta * c_out * s.lambda_storage[h] + s.mu_discharge_cap[h];
           return C::stat_res(r, std::fabs(s.lambda_balance[h]) +
                                     std::fabs(delta * c_out * s.lambda_storage[h]) +
                                     std::fabs(s.mu_discharge_cap[h]));
         }));
  cc.add("comp_discharge", max_over_h([&](int h) {
           return C::comp_res(
               -s.lambda_balance[h] + delta * c_out * s.lambda_storage[h] + s.mu_discharge_cap[h],
               s.discharge[h]);
         }));
  // level stationarity: carryover value ends at the horizon (no salvage term)
  cc.add("stat_level", max_over_h([&](int h) {
           const double next = h + 1 < H ? s.lambda_storage[h + 1] : 0.0;
           const double r = s.lambda_storage[h] - next + s.mu_level_cap[h];
           return C::stat_res(r, std::fabs(s.lambda_storage[h]) + std::fabs(next) +
                                     std::fabs(s.mu_level_cap[h]));
         }));
  cc.add("comp_level", max_over_h([&](int h) {
           const double next = h + 1 < H ? s.lambda_storage[h + 1] : 0.0;
           return C::comp_res(s.lambda_storage[h] - next + s.mu_level_cap[h], s.level[h]);
         }));

  // capacity sizing: reduced profitability of one more unit
  {
    double pv_value = 0.0, cap_relief = 0.0, scale = std::fabs(p.pv_annuity);
    for (int h = 0; h < H; ++h) {
      pv_value += p.pv_cf[h] * s.lambda_pv[h];
      if (feed_cap) cap_relief += tariff.feed_in_cap_fraction * s.mu_feed_cap[h];
    }
    const double r = p.pv_annuity - pv_value - cap_relief;
    scale += std::fabs(pv_value) + std::fabs(cap_relief);
    cc.add("stat_pv_sizing", s.n_pv < p.pv_max_kw ? C::stat_res(r, scale) : 0.0);
    cc.add("comp_pv_sizing_lower", C::comp_res(r, s.n_pv));
    cc.add("comp_pv_sizing_upper", C::comp_upper_res(r, p.pv_max_kw - s.n_pv));
  }
  {
    double mu_sum = 0.0;
    for (int h = 0; h < H; ++h) mu_sum += s.mu_level_cap[h];
    const double r = p.storage_energy_annuity - mu_sum;
    cc.add("stat_storage_energy_sizing", C::stat_res(r, std::fabs(p.storage_energy_annuity) + mu_sum));
    cc.add("comp_storage_energy_sizing", C::comp_res(r, s.n_sto_e));
  }
  {
    double mu_sum = 0.0;
    for (int h = 0; h < H; ++h) mu_sum += s.mu_charge_cap[h] + s.mu_discharge_cap[h];
    const double r = p.storage_power_annuity - mu_sum;
    cc.add("stat_storage_power_sizing", C::stat_res(r, std::fabs(p.storage_power_annuity) + mu_sum));
    cc.add("comp_storage_power_sizing", C::comp_res(r, s.n_sto_p));
  }

  // capacity-row complementarity and multiplier signs
  auto cap_pair = [&](const char* name, const std::vector<double>& mu, auto&& slack) {
    cc.add(std::string("comp_") + name, max_over_h([&](int h) {
             const double sl = std::max(0.0, slack(h));
             const double m = std::max(0.0, mu[h]);
             return m * sl / (1.0 + m + sl);
           }));
    cc.add(std::string("sign_") + name, max_over_h([&](int h) {
             return std::max(0.0, -mu[h]) / (1.0 + std::fabs(mu[h]));
           }));
    cc.add(std::string("feas_") + name, max_over_h([&](int h) {
             return std::max(0.0, -slack(h)) / (1.0 + std::fabs(slack(h)));
           }));
  };
  cap_pair("level_cap", s.mu_level_cap, [&](int h) { return s.n_sto_e - s.level[h]; });
  cap_pair("charge_cap", s.mu_charge_cap, [&](int h) { return s.n_sto_p - s.charge[h]; });
  cap_pair("discharge_cap", s.mu_discharge_cap, [&](int h) { return s.n_sto_p - s.discharge[h]; });
  if (feed_cap)
    cap_pair("feed_cap", s.mu_feed_cap,
             [&](int h) { return tariff.feed_in_cap_fraction * s.n_pv - s.feed_in[h]; });

  // primal equalities
  cc.add("eq_balance", max_over_h([&](int h) {
           const double lhs = s.self_consumption[h] + s.discharge[h] + s.grid_purchase[h];
           return C::eq_res(lhs, p.demand[h], std::fabs(lhs));
         }));
  cc.add("eq_pv_split", max_over_h([&](int h) {
           const double gen = p.pv_cf[h] * s.n_pv;
           const double use = s.self_consumption[h] + s.feed_in[h] + s.curtailment[h] + s.charge[h];
           return C::eq_res(gen, use, std::fabs(gen) + std::fabs(use));
         }));
  cc.add("eq_storage_recursion", max_over_h([&](int h) {
           const double prev = h > 0 ? s.level[h - 1] : 0.0;
           const double lhs = prev + delta * c_in * s.charge[h] - delta * c_out * s.discharge[h];
           return C::eq_res(lhs, s.level[h], std::fabs(prev) + delta * c_in * s.charge[h] +
                                                 delta * c_out * s.discharge[h]);
         }));
  // primal bounds
  cc.add("feas_nonnegative", [&] {
    double worst = 0.0;
    auto low = [&](const std::vector<double>& v) {
      for (double x : v) worst = std::max(worst, -x / (1.0 + std::fabs(x)));
    };
    low(s.grid_purchase); low(s.self_consumption); low(s.feed_in); low(s.curtailment);
    low(s.charge); low(s.discharge); low(s.level);
    worst = std::max({worst, -s.n_pv, -s.n_sto_e, -s.n_sto_p});
    return worst;
  }());
  cc.add("feas_pv_limit", std::max(0.0, (s.n_pv - p.pv_max_kw) / (1.0 + p.pv_max_kw)));
  if (no_feed)
    cc.add("feas_no_feed_in", max_over_h([&](int h) { return std::fabs(s.feed_in[h]); }));

  for (const auto& c : report.conditions) report.max_residual = std::max(report.max_residual, c.residual);
  return report;
}

// ---------------------------------------------------------------------------
// Investment-regime classification on the (feed-in, retail) plane.

enum class Regime { A, B, C, D, E, F };

inline const char* regime_description(Regime r) {
  switch (r) {
    case Regime::A: return "A: no investment";
    case Regime::B: return "B: PV, full feed-in";
    case Regime::C: return "C: PV, feed-in and self-consumption";
    case Regime::D: return "D: PV, self-consumption only";
    case Regime::E: return "E: PV and storage pay off, self-consumption only";
    case Regime::F: return "F: PV and storage pay off, with feed-in";
  }
  return "?";
}

inline char regime_letter(Regime r) { return static_cast<char>('A' + static_cast<int>(r)); }

// Storage pays off when the retail price exceeds the best alternative use of
// a PV kWh (feed-in remuneration or its production cost, whichever is higher)
// by more than the cost of cycling it through the battery.
inline Regime classify_regime(double lcoe, double lcos, double retail_volumetric, double feed_in) {
  if (retail_volumetric > lcos + std::max(feed_in, lcoe))
    return feed_in >= lcoe ? Regime::F : Regime::E;
  if (lcoe >= std::max(feed_in, retail_volumetric)) return Regime::A;
  if (feed_in > lcoe && feed_in >= retail_volumetric) return Regime::B;
  return feed_in >= lcoe ? Regime::C : Regime::D;
}

// EUR/kWh generated over the asset life.
inline double pv_lcoe(double pv_annuity, double full_load_hours) {
  return pv_annuity / full_load_hours;
}

// EUR/kWh discharged, assuming one full cycle per day and power sized for a
// four-hour discharge; the round-trip loss is charged to discharged energy.
inline double storage_lcos(double energy_annuity, double power_annuity, double efficiency) {
  return (energy_annuity + power_annuity / 4.0) / (365.0 * efficiency);
}

}  // namespace prosumeq
