#pragma once

// Power-sector dispatch: cost-minimal operation of a fixed fleet (thermal
// plants, variable renewables with curtailment, pumped storage, lost load)
// against national demand plus the net exchange with prosumage households.
// Internal units: MW, MWh, EUR/MWh, whole system.
//
// Dual conventions (raw LP duals of this formulation):
//   lambda_balance[h]  demand-balance equality; EUR per MW-step, divide by
//                      delta for EUR/MWh
//   mu_res[r][h]       renewable split  g + cu = cap*cf  stored as -y, so the
//                      multiplier is >= 0 and prices the available energy
//   lambda_storage[h]  level recursion, same shape as the household battery
// At degenerate optima (demand exactly on a merit-order boundary) these are
// one valid dual vertex among several; canonical_prices() gives a
// reproducible series for calibration work.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "prosumeq/kkt.hpp"
#include "prosumeq/lp.hpp"
#include "prosumeq/simplex.hpp"
#include "prosumeq/timeseries.hpp"

namespace prosumeq {

struct ThermalTech {
  std::string name;
  double capacity_mw = 0.0;
  double marginal_cost = 0.0;  // EUR/MWh
};

struct ResTech {
  std::string name;
  double capacity_mw = 0.0;
  TimeSeries cf;  // fraction of capacity available, hour by hour
};

struct PumpedStorage {
  double power_mw = 0.0;    // symmetric charge/discharge limit
  double energy_mwh = 0.0;  // reservoir size
  double efficiency = 0.8;  // round trip
};

struct DispatchParams {
  std::vector<ThermalTech> thermal;
  std::vector<ResTech> res;
  PumpedStorage psp;
  double voll = 3000.0;  // EUR/MWh; <= 0 removes the lost-load slack
  TimeSeries demand;     // MW

  // net exchange with the household sector, in MW on the system side;
  // empty means zero
  TimeSeries prosumage_purchase;
  TimeSeries prosumage_feed;
};

inline void validate_dispatch(const DispatchParams& p) {
  if (p.demand.size() == 0) throw std::invalid_argument("dispatch: empty demand");
  if (p.demand.unit != Unit::mw) throw std::invalid_argument("dispatch: demand must be MW");
  validate_series(p.demand, "demand");
  std::vector<std::string> seen;
  for (const auto& t : p.thermal) {
    if (t.name.empty()) throw std::invalid_argument("dispatch: unnamed thermal tech");
    if (std::find(seen.begin(), seen.end(), t.name) != seen.end())
      throw std::invalid_argument("dispatch: duplicate tech name " + t.name);
    seen.push_back(t.name);
    if (t.capacity_mw < 0.0 || !std::isfinite(t.capacity_mw))
      throw std::invalid_argument("dispatch: bad capacity for " + t.name);
    if (!std::isfinite(t.marginal_cost) || t.marginal_cost < 0.0)
      throw std::invalid_argument("dispatch: bad marginal cost for " + t.name);
  }
  for (const auto& r : p.res) {
    if (r.name.empty()) throw std::invalid_argument("dispatch: unnamed res tech");
    if (std::find(seen.begin(), seen.end(), r.name) != seen.end())
      throw std::invalid_argument("dispatch: duplicate tech name " + r.name);
    seen.push_back(r.name);
    if (r.capacity_mw < 0.0 || !std::isfinite(r.capacity_mw))
      throw std::invalid_argument("dispatch: bad capacity for " + r.name);
    if (r.cf.size() != p.demand.size() || r.cf.step_hours != p.demand.step_hours)
      throw std::invalid_argument("dispatch: cf series of " + r.name + " does not match demand");
    validate_series(r.cf, "cf:" + r.name);
  }
  if (p.psp.power_mw < 0.0 || p.psp.energy_mwh < 0.0)
    throw std::invalid_argument("dispatch: negative pumped-storage size");
  if (p.psp.efficiency <= 0.0 || p.psp.efficiency > 1.0)
    throw std::invalid_argument("dispatch: pumped-storage efficiency outside (0,1]");
  for (const TimeSeries* ex : {&p.prosumage_purchase, &p.prosumage_feed}) {
    if (ex->size() == 0) continue;
    if (ex->size() != p.demand.size() || ex->step_hours != p.demand.step_hours)
      throw std::invalid_argument("dispatch: exchange series does not match demand");
  }
}

struct DispatchSolution {
  lp::SolveStatus status = lp::SolveStatus::numerical_breakdown;
  std::string message;
  double objective = 0.0;  // EUR of variable system cost
  int iterations = 0;
  double delta_hours = 1.0;

  std::vector<std::vector<double>> thermal_generation;  // [tech][h], MW
  std::vector<std::vector<double>> res_generation;      // [tech][h], MW
  std::vector<std::vector<double>> res_curtailment;     // [tech][h], MW
  std::vector<double> charge, discharge, level;         // MW, MW, MWh
  std::vector<double> lost_load;                        // MW

  std::vector<double> lambda_balance;                 // EUR per MW-step
  std::vector<double> price;                          // EUR/MWh
  std::vector<std::vector<double>> mu_res;            // [tech][h]
  std::vector<double> lambda_storage;
};

namespace dp_detail {

struct Layout {
  int H = 0, T = 0, R = 0;
  bool lost_load = false;
  int g(int i, int h) const { return i * H + h; }
  int gres(int r, int h) const { return (T + r) * H + h; }
  int cu(int r, int h) const { return (T + R + r) * H + h; }
  int chg(int h) const { return (T + 2 * R) * H + h; }
  int dis(int h) const { return (T + 2 * R + 1) * H + h; }
  int lvl(int h) const { return (T + 2 * R + 2) * H + h; }
  int ll(int h) const { return (T + 2 * R + 3) * H + h; }
  int num_vars() const { return (T + 2 * R + 3 + (lost_load ? 1 : 0)) * H; }
  // rows: balance block, then splits per res tech, then the psp recursion
  int row_balance(int h) const { return h; }
  int row_split(int r, int h) const { return (1 + r) * H + h; }
  int row_rec(int h) const { return (1 + R) * H + h; }
};

inline Layout layout_of(const DispatchParams& p) {
  Layout lo;
  lo.H = static_cast<int>(p.demand.size());
  lo.T = static_cast<int>(p.thermal.size());
  lo.R = static_cast<int>(p.res.size());
  lo.lost_load = p.voll > 0.0;
  return lo;
}

}  // namespace dp_detail

inline lp::LinearProgram build_dispatch_lp(const DispatchParams& p) {
  validate_dispatch(p);
  const auto lo = dp_detail::layout_of(p);
  const int H = lo.H;
  const double delta = p.demand.step_hours;
  const double c_in = (1.0 + p.psp.efficiency) / 2.0;
  const double c_out = 2.0 / (1.0 + p.psp.efficiency);

  lp::LinearProgram prob;
  prob.vars.reserve(lo.num_vars());
  auto hs = [](const std::string& base, int h) { return base + "[" + std::to_string(h) + "]"; };

  for (const auto& t : p.thermal)
    for (int h = 0; h < H; ++h)
      prob.add_variable(hs("g:" + t.name, h), 0.0, t.capacity_mw, delta * t.marginal_cost);
  for (const auto& r : p.res)
    for (int h = 0; h < H; ++h)
      prob.add_variable(hs("g:" + r.name, h), 0.0, lp::kInf, 0.0);
  for (const auto& r : p.res)
    for (int h = 0; h < H; ++h)
      prob.add_variable(hs("cu:" + r.name, h), 0.0, lp::kInf, 0.0);
  for (int h = 0; h < H; ++h) prob.add_variable(hs("chg", h), 0.0, p.psp.power_mw, 0.0);
  for (int h = 0; h < H; ++h) prob.add_variable(hs("dis", h), 0.0, p.psp.power_mw, 0.0);
  for (int h = 0; h < H; ++h) prob.add_variable(hs("lvl", h), 0.0, p.psp.energy_mwh, 0.0);
  if (lo.lost_load)
    for (int h = 0; h < H; ++h) prob.add_variable(hs("ll", h), 0.0, lp::kInf, delta * p.voll);

  // supply - pumping = national demand + household purchases - household feed
  for (int h = 0; h < H; ++h) {
    double rhs = p.demand[h];
    if (p.prosumage_purchase.size()) rhs += p.prosumage_purchase[h];
    if (p.prosumage_feed.size()) rhs -= p.prosumage_feed[h];
    std::vector<int> idx;
    std::vector<double> val;
    for (int i = 0; i < lo.T; ++i) { idx.push_back(lo.g(i, h)); val.push_back(1.0); }
    for (int r = 0; r < lo.R; ++r) { idx.push_back(lo.gres(r, h)); val.push_back(1.0); }
    idx.push_back(lo.dis(h)); val.push_back(1.0);
    idx.push_back(lo.chg(h)); val.push_back(-1.0);
    if (lo.lost_load) { idx.push_back(lo.ll(h)); val.push_back(1.0); }
    prob.add_constraint(hs("balance", h), lp::Relation::equal, rhs, std::move(idx), std::move(val));
  }
  // available renewable energy is either taken or curtailed
  for (int r = 0; r < lo.R; ++r)
    for (int h = 0; h < H; ++h)
      prob.add_constraint(hs("split:" + p.res[r].name, h), lp::Relation::equal,
                          p.res[r].capacity_mw * p.res[r].cf[h],
                          {lo.gres(r, h), lo.cu(r, h)}, {1.0, 1.0});
  // reservoir starts empty and carries losses on both legs
  for (int h = 0; h < H; ++h) {
    std::vector<int> idx;
    std::vector<double> val;
    if (h > 0) { idx.push_back(lo.lvl(h - 1)); val.push_back(1.0); }
    idx.push_back(lo.chg(h)); val.push_back(delta * c_in);
    idx.push_back(lo.dis(h)); val.push_back(-delta * c_out);
    idx.push_back(lo.lvl(h)); val.push_back(-1.0);
    prob.add_constraint(hs("psp_rec", h), lp::Relation::equal, 0.0, std::move(idx), std::move(val));
  }
  return prob;
}

inline DispatchSolution solve_dispatch(const DispatchParams& p, const lp::SolveOptions& opts = {}) {
  const auto prob = build_dispatch_lp(p);
  const auto lo = dp_detail::layout_of(p);
  const int H = lo.H;
  const auto sol = lp::solve_lp(prob, opts);

  DispatchSolution out;
  out.status = sol.status;
  out.message = sol.message;
  out.iterations = sol.iterations;
  out.delta_hours = p.demand.step_hours;
  if (sol.status != lp::SolveStatus::optimal) return out;
  out.objective = sol.objective;

  auto slice = [&](int base) {
    return std::vector<double>(sol.x.begin() + base, sol.x.begin() + base + H);
  };
  for (int i = 0; i < lo.T; ++i) out.thermal_generation.push_back(slice(lo.g(i, 0)));
  for (int r = 0; r < lo.R; ++r) out.res_generation.push_back(slice(lo.gres(r, 0)));
  for (int r = 0; r < lo.R; ++r) out.res_curtailment.push_back(slice(lo.cu(r, 0)));
  out.charge = slice(lo.chg(0));
  out.discharge = slice(lo.dis(0));
  out.level = slice(lo.lvl(0));
  out.lost_load = lo.lost_load ? slice(lo.ll(0)) : std::vector<double>(H, 0.0);

  out.lambda_balance.resize(H);
  out.price.resize(H);
  out.lambda_storage.resize(H);
  for (int h = 0; h < H; ++h) {
    out.lambda_balance[h] = sol.y[lo.row_balance(h)];
    out.price[h] = out.lambda_balance[h] / out.delta_hours;
    out.lambda_storage[h] = sol.y[lo.row_rec(h)];
  }
  out.mu_res.assign(lo.R, std::vector<double>(H));
  for (int r = 0; r < lo.R; ++r)
    for (int h = 0; h < H; ++h) out.mu_res[r][h] = -sol.y[lo.row_split(r, h)];
  return out;
}

inline KktReport check_dispatch_kkt(const DispatchParams& p, const DispatchSolution& s) {
  const auto lo = dp_detail::layout_of(p);
  const int H = lo.H;
  const double delta = p.demand.step_hours;
  const double c_in = (1.0 + p.psp.efficiency) / 2.0;
  const double c_out = 2.0 / (1.0 + p.psp.efficiency);

  KktReport report;
  kkt_detail::Collector cc{&report.conditions};
  using C = kkt_detail::Collector;
  auto hs = [](const std::string& base, int h) { return base + "[" + std::to_string(h) + "]"; };

  double feas = 0.0;  // worst bound violation, relative
  auto bound_gap = [&](double x, double up) {
    feas = std::max(feas, -x / (1.0 + std::fabs(x)));
    if (std::isfinite(up)) feas = std::max(feas, (x - up) / (1.0 + up));
  };

  for (int h = 0; h < H; ++h) {
    const double lam = s.lambda_balance[h];
    const double lam_sto = s.lambda_storage[h];
    const double lam_sto_next = h + 1 < H ? s.lambda_storage[h + 1] : 0.0;

    double supply = s.discharge[h] - s.charge[h] + s.lost_load[h];
    double scale_bal = std::fabs(s.discharge[h]) + std::fabs(s.charge[h]) + s.lost_load[h];

    for (int i = 0; i < lo.T; ++i) {
      const double g = s.thermal_generation[i][h];
      const double r = delta * p.thermal[i].marginal_cost - lam;
      cc.boxed(hs("g:" + p.thermal[i].name, h), r, g, p.thermal[i].capacity_mw,
               delta * p.thermal[i].marginal_cost + std::fabs(lam));
      bound_gap(g, p.thermal[i].capacity_mw);
      supply += g;
      scale_bal += std::fabs(g);
    }
    for (int r = 0; r < lo.R; ++r) {
      const double g = s.res_generation[r][h];
      const double cu = s.res_curtailment[r][h];
      const double mu = s.mu_res[r][h];
      const double avail = p.res[r].capacity_mw * p.res[r].cf[h];
      const double rg = mu - lam;
      cc.add(hs("stat_g:" + p.res[r].name, h), C::stat_res(rg, std::fabs(mu) + std::fabs(lam)));
      cc.add(hs("comp_g:" + p.res[r].name, h), C::comp_res(rg, g));
      cc.add(hs("stat_cu:" + p.res[r].name, h), C::stat_res(mu, std::fabs(mu)));
      cc.add(hs("comp_cu:" + p.res[r].name, h), C::comp_res(mu, cu));
      cc.add(hs("eq_split:" + p.res[r].name, h), C::eq_res(g + cu, avail, g + cu));
      bound_gap(g, lp::kInf);
      bound_gap(cu, lp::kInf);
      supply += g;
      scale_bal += std::fabs(g);
    }
    if (p.psp.power_mw > 0.0 && p.psp.energy_mwh > 0.0) {
      cc.boxed(hs("chg", h), lam - delta * c_in * lam_sto, s.charge[h], p.psp.power_mw,
               std::fabs(lam) + delta * c_in * std::fabs(lam_sto));
      cc.boxed(hs("dis", h), delta * c_out * lam_sto - lam, s.discharge[h], p.psp.power_mw,
               std::fabs(lam) + delta * c_out * std::fabs(lam_sto));
      cc.boxed(hs("lvl", h), lam_sto - lam_sto_next, s.level[h], p.psp.energy_mwh,
               std::fabs(lam_sto) + std::fabs(lam_sto_next));
      bound_gap(s.charge[h], p.psp.power_mw);
      bound_gap(s.discharge[h], p.psp.power_mw);
      bound_gap(s.level[h], p.psp.energy_mwh);
      const double prev = h > 0 ? s.level[h - 1] : 0.0;
      cc.add(hs("eq_psp_rec", h),
             C::eq_res(prev + delta * c_in * s.charge[h] - delta * c_out * s.discharge[h] - s.level[h],
                       0.0, std::fabs(prev) + s.charge[h] + s.discharge[h] + std::fabs(s.level[h])));
    }
    if (lo.lost_load) {
      const double rll = delta * p.voll - lam;
      cc.add(hs("stat_ll", h), C::stat_res(rll, delta * p.voll + std::fabs(lam)));
      cc.add(hs("comp_ll", h), C::comp_res(rll, s.lost_load[h]));
      bound_gap(s.lost_load[h], lp::kInf);
    }

    double rhs = p.demand[h];
    if (p.prosumage_purchase.size()) rhs += p.prosumage_purchase[h];
    if (p.prosumage_feed.size()) rhs -= p.prosumage_feed[h];
    cc.add(hs("eq_balance", h), C::eq_res(supply, rhs, scale_bal));
  }
  cc.add("feas_bounds", std::max(0.0, feas));

  for (const auto& c : report.conditions) report.max_residual = std::max(report.max_residual, c.residual);
  return report;
}

// Price series for calibration: the balance dual wherever pumped storage is
// active (time coupling sets the price there), otherwise the static
// merit-order price of the thermal requirement. Breaks the dual degeneracy
// when demand sits exactly on a capacity boundary.
inline std::vector<double> canonical_prices(const DispatchParams& p, const DispatchSolution& s) {
  const int H = static_cast<int>(p.demand.size());
  std::vector<int> order(p.thermal.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p.thermal[a].marginal_cost < p.thermal[b].marginal_cost;
  });

  std::vector<double> out(H);
  for (int h = 0; h < H; ++h) {
    if (s.charge[h] > 1e-6 || s.discharge[h] > 1e-6) {
      out[h] = s.price[h];
      continue;
    }
    if (s.lost_load[h] > 1e-6) {
      out[h] = p.voll;
      continue;
    }
    double need = 0.0;
    for (const auto& g : s.thermal_generation) need += g[h];
    if (need <= 1e-9) {
      out[h] = 0.0;
      continue;
    }
    const double eps = 1e-6 * std::max(1.0, need);
    double cum = 0.0, price = p.voll > 0.0 ? p.voll : p.thermal[order.back()].marginal_cost;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& t = p.thermal[order[k]];
      if (t.capacity_mw <= 0.0) continue;
      cum += t.capacity_mw;
      if (need < cum - eps) {  // strictly inside this tech: it sets the price
        price = t.marginal_cost;
        break;
      }
      if (need <= cum + eps) {  // on the boundary: the next dispatchable tech prices
        price = p.voll > 0.0 ? p.voll : t.marginal_cost;
        for (std::size_t k2 = k + 1; k2 < order.size(); ++k2) {
          if (p.thermal[order[k2]].capacity_mw > 0.0) {
            price = p.thermal[order[k2]].marginal_cost;
            break;
          }
        }
        break;
      }
    }
    out[h] = price;
  }
  return out;
}

}  // namespace prosumeq
