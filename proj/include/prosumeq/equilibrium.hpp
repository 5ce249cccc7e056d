#pragma once

// Market equilibrium between the prosumage segment and the power sector.
// Fixed tariffs decouple the two problems (household first, then dispatch
// facing the aggregate exchange). When either tariff side tracks the
// wholesale price, the coupled system is solved as a damped best-response
// iteration, dispatch first, and verified through both KKT checkers plus the
// price-coupling identity.

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "prosumeq/csv.hpp"
#include "prosumeq/dispatch.hpp"
#include "prosumeq/household.hpp"

namespace prosumeq {

struct EquilibriumConfig {
  double damping = 0.5;           // weight on the fresh price vector
  int max_iterations = 50;
  double price_tolerance = 1e-4;  // EUR/kWh, max hourly innovation
  double kkt_tolerance = 1e-6;
  double n_households = 1e6;      // population behind the representative household
};

inline void validate_equilibrium(const EquilibriumConfig& c) {
  if (!(c.damping > 0.0) || c.damping > 1.0)
    throw std::invalid_argument("equilibrium: damping outside (0,1]");
  if (c.max_iterations < 1) throw std::invalid_argument("equilibrium: max_iterations < 1");
  if (!(c.price_tolerance > 0.0) || !(c.kkt_tolerance > 0.0))
    throw std::invalid_argument("equilibrium: non-positive tolerance");
  if (!(c.n_households > 0.0)) throw std::invalid_argument("equilibrium: non-positive n_households");
}

struct IterationLog {
  int iteration = 0;
  double max_price_change = 0.0;  // EUR/kWh, before damping
  double z_pro = 0.0;             // EUR/year per household
  double z_sys = 0.0;             // EUR system dispatch cost
  double hh_kkt_residual = 0.0;
  double disp_kkt_residual = 0.0;
};

struct ScenarioResult {
  std::string name;
  bool rtp = false;
  bool converged = false;
  int iterations = 0;
  std::string message;

  HouseholdSolution household;
  DispatchSolution dispatch;
  KktReport household_kkt, dispatch_kkt;
  std::vector<IterationLog> log;

  Tariff tariff;                        // as faced by the household in the final pass
  std::vector<double> canonical_price;  // EUR/MWh, degeneracy-resolved
  double coupling_residual = 0.0;       // EUR/kWh; 0 when tariffs are fixed
  double price_tolerance = 1e-4;        // carried along for joint reporting
  double kkt_tolerance = 1e-6;

  bool solved() const {
    return household.status == lp::SolveStatus::optimal && dispatch.status == lp::SolveStatus::optimal;
  }
  double max_kkt_residual() const {
    return std::max(household_kkt.max_residual, dispatch_kkt.max_residual);
  }
};

// Wholesale price level before any prosumage activity: dispatch of the full
// pure-consumer demand, averaged weighted by that demand. EUR/kWh.
inline double calibrate_energy_charge(const DispatchParams& p, const lp::SolveOptions& opts = {}) {
  DispatchParams q = p;
  q.prosumage_purchase = {};
  q.prosumage_feed = {};
  const auto sol = solve_dispatch(q, opts);
  if (sol.status != lp::SolveStatus::optimal)
    throw std::runtime_error("calibration dispatch failed: " + sol.message);
  const auto price = canonical_prices(q, sol);
  double value = 0.0, energy = 0.0;
  for (std::size_t h = 0; h < price.size(); ++h) {
    value += q.demand[h] * price[h];
    energy += q.demand[h];
  }
  if (energy <= 0.0) return 0.0;
  return value / energy / 1000.0;
}

namespace eq_detail {

inline TimeSeries to_system_mw(const std::vector<double>& kw_per_household, const TimeSeries& like,
                               double n_households) {
  TimeSeries ts;
  ts.step_hours = like.step_hours;
  ts.unit = Unit::mw;
  ts.values.resize(kw_per_household.size());
  const double f = n_households / 1000.0;
  for (std::size_t h = 0; h < kw_per_household.size(); ++h) ts.values[h] = kw_per_household[h] * f;
  return ts;
}

// smallest lag at which the price history repeats, 0 if none does
inline int cycle_length(const std::deque<std::vector<double>>& hist) {
  if (hist.size() < 2) return 0;
  const auto& last = hist.back();
  for (std::size_t lag = 2; lag < hist.size(); ++lag) {
    const auto& old = hist[hist.size() - 1 - lag];
    double diff = 0.0;
    for (std::size_t h = 0; h < last.size(); ++h) diff = std::max(diff, std::fabs(last[h] - old[h]));
    if (diff < 1e-9) return static_cast<int>(lag);
  }
  return 0;
}

// Damping hides exact price repeats, but a price cycle leaves its period in
// the innovation sequence: period p repeats every p lags, and a two-point
// alternation makes the innovations constant (a truly fixed response would
// make them shrink geometrically instead). Returns the estimated price cycle
// length, 0 if the recent innovations do not repeat.
inline int innovation_period(const std::vector<double>& changes) {
  const int n = static_cast<int>(changes.size());
  for (int p = 1; p <= 6; ++p) {
    if (n < 3 * p) break;
    bool repeats = true;
    for (int k = n - 1; k >= n - 2 * p; --k) {
      const double a = changes[k], b = changes[k - p];
      if (std::fabs(a - b) > 0.05 * std::max(std::max(a, b), 1e-12)) {
        repeats = false;
        break;
      }
    }
    if (repeats) return p == 1 ? 2 : p;
  }
  return 0;
}

}  // namespace eq_detail

inline ScenarioResult solve_scenario(const std::string& name, const Tariff& tariff,
                                     const ProsumageParams& hh, const DispatchParams& disp,
                                     const EquilibriumConfig& cfg = {},
                                     const lp::SolveOptions& opts = {}) {
  validate_equilibrium(cfg);
  validate_prosumage(hh);
  validate_dispatch(disp);
  if (disp.demand.size() != hh.demand.size() || disp.demand.step_hours != hh.demand.step_hours)
    throw std::invalid_argument("scenario: household and dispatch horizons differ");

  ScenarioResult out;
  out.name = name;
  out.rtp = tariff.needs_wholesale();
  out.price_tolerance = cfg.price_tolerance;
  out.kkt_tolerance = cfg.kkt_tolerance;
  const int H = static_cast<int>(hh.demand.size());

  auto run_dispatch = [&](const HouseholdSolution& h, DispatchParams& used) {
    used = disp;
    used.prosumage_purchase = eq_detail::to_system_mw(h.grid_purchase, disp.demand, cfg.n_households);
    used.prosumage_feed = eq_detail::to_system_mw(h.feed_in, disp.demand, cfg.n_households);
    return solve_dispatch(used, opts);
  };

  if (!out.rtp) {
    out.tariff = tariff;
    out.household = solve_household(hh, tariff, opts);
    if (out.household.status != lp::SolveStatus::optimal) {
      out.message = "household: " + out.household.message;
      return out;
    }
    DispatchParams used;
    out.dispatch = run_dispatch(out.household, used);
    if (out.dispatch.status != lp::SolveStatus::optimal) {
      out.message = "dispatch: " + out.dispatch.message;
      return out;
    }
    out.household_kkt = check_household_kkt(hh, tariff, out.household);
    out.dispatch_kkt = check_dispatch_kkt(used, out.dispatch);
    out.canonical_price = canonical_prices(used, out.dispatch);
    out.iterations = 1;
    out.converged = out.max_kkt_residual() <= cfg.kkt_tolerance;
    if (!out.converged) out.message = "kkt residual above tolerance";
    out.log.push_back({1, 0.0, out.household.objective, out.dispatch.objective,
                       out.household_kkt.max_residual, out.dispatch_kkt.max_residual});
    return out;
  }

  // price level seen before any prosumage reaction: households buy their raw load
  HouseholdSolution pure;
  pure.grid_purchase = hh.demand.values;
  pure.feed_in.assign(H, 0.0);
  DispatchParams used;
  {
    const auto warm = run_dispatch(pure, used);
    if (warm.status != lp::SolveStatus::optimal) {
      out.message = "initial dispatch: " + warm.message;
      return out;
    }
    out.canonical_price = canonical_prices(used, warm);
  }

  std::vector<double> price = out.canonical_price;  // EUR/MWh, what the household will face
  std::deque<std::vector<double>> history;
  history.push_back(price);

  // merit-order flips make the innovation sequence non-monotone, so a stall
  // is only declared when the running minimum has not improved for a while
  double stall_ref = std::numeric_limits<double>::infinity();
  int since_best = 0;
  bool stalled = false;

  // closest approach to the fixed point, reported when the loop fails
  HouseholdSolution best_hh;
  DispatchSolution best_disp;
  KktReport best_hh_kkt, best_disp_kkt;
  std::vector<double> best_price;
  Tariff best_faced;
  double best_seen = std::numeric_limits<double>::infinity();
  int best_it = 0;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Tariff faced = tariff;
    faced.wholesale.resize(H);
    for (int h = 0; h < H; ++h) faced.wholesale[h] = price[h] / 1000.0;

    out.tariff = faced;
    out.household = solve_household(hh, faced, opts);
    if (out.household.status != lp::SolveStatus::optimal) {
      out.message = "household (iteration " + std::to_string(it) + "): " + out.household.message;
      return out;
    }
    out.dispatch = run_dispatch(out.household, used);
    if (out.dispatch.status != lp::SolveStatus::optimal) {
      out.message = "dispatch (iteration " + std::to_string(it) + "): " + out.dispatch.message;
      return out;
    }
    const auto fresh = canonical_prices(used, out.dispatch);
    double change = 0.0;
    for (int h = 0; h < H; ++h) change = std::max(change, std::fabs(fresh[h] - price[h]) / 1000.0);

    out.household_kkt = check_household_kkt(hh, faced, out.household);
    out.dispatch_kkt = check_dispatch_kkt(used, out.dispatch);
    out.canonical_price = fresh;
    out.iterations = it;
    out.coupling_residual = change;
    out.log.push_back({it, change, out.household.objective, out.dispatch.objective,
                       out.household_kkt.max_residual, out.dispatch_kkt.max_residual});

    if (change <= cfg.price_tolerance) {
      out.converged = out.max_kkt_residual() <= cfg.kkt_tolerance;
      if (!out.converged) out.message = "prices settled but kkt residual above tolerance";
      return out;
    }
    if (change < best_seen) {
      best_seen = change;
      best_it = it;
      best_hh = out.household;
      best_disp = out.dispatch;
      best_hh_kkt = out.household_kkt;
      best_disp_kkt = out.dispatch_kkt;
      best_price = fresh;
      best_faced = faced;
    }
    if (change < 0.95 * stall_ref) {
      stall_ref = change;
      since_best = 0;
    } else if (++since_best >= 10) {
      stalled = true;
      break;
    }
    for (int h = 0; h < H; ++h) price[h] = cfg.damping * fresh[h] + (1.0 - cfg.damping) * price[h];
    history.push_back(price);
    if (history.size() > 12) history.pop_front();
  }

  double lo = out.log.back().max_price_change, hi = lo;
  const std::size_t tail = out.log.size() > 5 ? out.log.size() - 5 : 0;
  for (std::size_t k = tail; k < out.log.size(); ++k) {
    lo = std::min(lo, out.log[k].max_price_change);
    hi = std::max(hi, out.log[k].max_price_change);
  }
  int cyc = eq_detail::cycle_length(history);
  if (cyc == 0) {
    std::vector<double> changes;
    changes.reserve(out.log.size());
    for (const auto& l : out.log) changes.push_back(l.max_price_change);
    cyc = eq_detail::innovation_period(changes);
  }
  if (best_it > 0) {  // report the iterate closest to fixed-point consistency
    out.household = std::move(best_hh);
    out.dispatch = std::move(best_disp);
    out.household_kkt = best_hh_kkt;
    out.dispatch_kkt = best_disp_kkt;
    out.canonical_price = std::move(best_price);
    out.tariff = std::move(best_faced);
    out.coupling_residual = best_seen;
  }
  out.message = std::string(stalled ? "price innovations stopped shrinking" : "no fixed point") +
                " after " + std::to_string(out.iterations) + " iterations; reporting iteration " +
                std::to_string(best_it) + " (closest approach, change " +
                format_double(out.coupling_residual) + " EUR/kWh), recent band [" +
                format_double(lo) + ", " + format_double(hi) + "]" +
                (cyc > 0 ? ", apparent price cycle of length " + std::to_string(cyc) : "");
  return out;
}

struct JointKktReport {
  KktReport combined;               // both agents' conditions, prefixed
  bool coupling_applicable = false;
  double max_coupling_residual = 0.0;  // EUR/kWh
  double price_tolerance = 1e-4;
  double kkt_tolerance = 1e-6;
  bool passes() const {
    return combined.max_residual <= kkt_tolerance &&
           (!coupling_applicable || max_coupling_residual <= price_tolerance);
  }
};

// One flat listing across both optimality systems plus, under real-time
// pricing, the identity between the tariff series the household faced and the
// wholesale price the dispatch produced.
inline JointKktReport joint_kkt_report(const ScenarioResult& r) {
  JointKktReport jr;
  jr.price_tolerance = r.price_tolerance;
  jr.kkt_tolerance = r.kkt_tolerance;
  for (const auto& c : r.household_kkt.conditions) jr.combined.conditions.push_back({"household/" + c.name, c.residual});
  for (const auto& c : r.dispatch_kkt.conditions) jr.combined.conditions.push_back({"dispatch/" + c.name, c.residual});
  for (const auto& c : jr.combined.conditions)
    jr.combined.max_residual = std::max(jr.combined.max_residual, c.residual);

  jr.coupling_applicable = r.rtp;
  if (!r.rtp) return jr;
  const bool rtp_buy = r.tariff.energy_mode == EnergyChargeMode::wholesale;
  for (std::size_t h = 0; h < r.canonical_price.size(); ++h) {
    const double lam_kwh = r.canonical_price[h] / 1000.0;
    const double faced = r.tariff.wholesale.empty() ? 0.0 : r.tariff.wholesale[h];
    const double diff = std::fabs(faced - lam_kwh);
    jr.max_coupling_residual = std::max(jr.max_coupling_residual, diff);
    jr.combined.conditions.push_back(
        {std::string("coupling/") + (rtp_buy ? "t_ener" : "t_prod") + "[" + std::to_string(h) + "]", diff});
  }
  return jr;
}

}  // namespace prosumeq
