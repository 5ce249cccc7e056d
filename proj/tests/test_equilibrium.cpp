#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "prosumeq/equilibrium.hpp"

using namespace prosumeq;

namespace {

TimeSeries series(std::vector<double> v, Unit unit, double step = 1.0) {
  TimeSeries ts;
  ts.values = std::move(v);
  ts.unit = unit;
  ts.step_hours = step;
  return ts;
}

// two-hour world: flat household, PV only in the second hour
struct Toy {
  ProsumageParams hh;
  DispatchParams disp;
  EquilibriumConfig cfg;
};

Toy make_toy() {
  Toy t;
  t.hh.demand = series({1.0, 1.0}, Unit::kw);
  t.hh.pv_cf = series({0.0, 1.0}, Unit::fraction);
  t.hh.pv_max_kw = 10.0;
  t.hh.pv_annuity = 0.005;  // cheap against any sensible price
  t.hh.storage_energy_annuity = 1e6;
  t.hh.storage_power_annuity = 1e6;

  // the household segment is 50 MW against 1000 MW of other demand; the base
  // capacity sits between the with- and without-purchase requirement, so
  // prosumage self-consumption moves the price across the merit-order step
  t.disp.thermal = {{"base", 1025.0, 20.0}, {"peak", 10000.0, 80.0}};
  t.disp.demand = series({1000.0, 1000.0}, Unit::mw);
  t.disp.voll = 3000.0;
  t.cfg.n_households = 5e4;  // 1 kW per household = 50 MW system-wide
  return t;
}

Tariff flat_tariff() {
  Tariff t;
  t.energy_charge = 0.05;
  t.other_charge = 0.25;
  t.feed_in_mode = FeedInMode::fixed_rate;
  t.feed_in_rate = 0.08;
  return t;
}

}  // namespace

TEST_CASE("calibration returns the demand-weighted mean wholesale price") {
  DispatchParams p;
  p.thermal = {{"only", 1000.0, 50.0}};
  p.demand = series({400.0, 600.0}, Unit::mw);
  CHECK(calibrate_energy_charge(p) == Catch::Approx(0.05));

  // calibration ignores whatever exchange series are attached
  p.prosumage_purchase = series({100.0, 100.0}, Unit::mw);
  CHECK(calibrate_energy_charge(p) == Catch::Approx(0.05));
}

TEST_CASE("calibration weights hours by demand") {
  DispatchParams p;
  p.thermal = {{"base", 500.0, 10.0}, {"peak", 1000.0, 100.0}};
  p.demand = series({400.0, 600.0}, Unit::mw);
  // hour 0 prices at 10 (inside base), hour 1 at 100
  const double expected = (400.0 * 10.0 + 600.0 * 100.0) / 1000.0 / 1000.0;
  CHECK(calibrate_energy_charge(p) == Catch::Approx(expected));
}

TEST_CASE("fixed tariffs solve in one pass and match the manual chain") {
  Toy t = make_toy();
  const Tariff tariff = flat_tariff();
  const auto r = solve_scenario("toy", tariff, t.hh, t.disp, t.cfg);
  REQUIRE(r.solved());
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.rtp == false);
  CHECK(r.coupling_residual == 0.0);
  CHECK(r.log.size() == 1);
  CHECK(r.max_kkt_residual() <= 1e-6);

  const auto hh = solve_household(t.hh, tariff);
  REQUIRE(hh.status == lp::SolveStatus::optimal);
  CHECK(hh.objective == r.household.objective);  // bit-identical: same code path

  DispatchParams manual = t.disp;
  manual.prosumage_purchase = eq_detail::to_system_mw(hh.grid_purchase, t.disp.demand, t.cfg.n_households);
  manual.prosumage_feed = eq_detail::to_system_mw(hh.feed_in, t.disp.demand, t.cfg.n_households);
  const auto dp = solve_dispatch(manual);
  REQUIRE(dp.status == lp::SolveStatus::optimal);
  CHECK(dp.objective == r.dispatch.objective);

  const auto joint = joint_kkt_report(r);
  CHECK(joint.coupling_applicable == false);
  CHECK(joint.passes());
  // both agents' conditions are present under their prefixes
  bool saw_hh = false, saw_dp = false;
  for (const auto& c : joint.combined.conditions) {
    saw_hh = saw_hh || c.name.rfind("household/", 0) == 0;
    saw_dp = saw_dp || c.name.rfind("dispatch/", 0) == 0;
  }
  CHECK(saw_hh);
  CHECK(saw_dp);
}

TEST_CASE("household aggregation scales kW to system MW") {
  const auto like = series({0.0, 0.0}, Unit::mw);
  const auto ts = eq_detail::to_system_mw({1.0, 2.5}, like, 1e6);
  CHECK(ts.unit == Unit::mw);
  CHECK(ts.values[0] == Catch::Approx(1000.0));
  CHECK(ts.values[1] == Catch::Approx(2500.0));
}

TEST_CASE("real-time purchase pricing reaches a fixed point") {
  Toy t = make_toy();
  Tariff tariff = flat_tariff();
  tariff.energy_mode = EnergyChargeMode::wholesale;  // buy at spot plus charges
  tariff.feed_in_mode = FeedInMode::prohibited;
  tariff.feed_in_rate = 0.0;
  t.cfg.damping = 1.0;  // undamped: the toy's best response is a contraction

  const auto r = solve_scenario("rtp_buy", tariff, t.hh, t.disp, t.cfg);
  REQUIRE(r.solved());
  INFO(r.message);
  CHECK(r.converged);
  CHECK(r.rtp);
  CHECK(r.iterations >= 2);
  CHECK(r.coupling_residual <= t.cfg.price_tolerance);

  // the faced series and the produced series agree at the fixed point
  const auto joint = joint_kkt_report(r);
  CHECK(joint.coupling_applicable);
  CHECK(joint.max_coupling_residual <= t.cfg.price_tolerance);
  CHECK(joint.passes());

  // PV removes the household load from the peak hour: the system price there
  // falls back to the base technology
  CHECK(r.canonical_price[1] == Catch::Approx(20.0));
  CHECK(r.household.n_pv > 0.9);

  // best-response stability: re-solving the household against the final
  // produced prices leaves its objective unchanged
  Tariff settled = r.tariff;
  for (std::size_t h = 0; h < settled.wholesale.size(); ++h)
    settled.wholesale[h] = r.canonical_price[h] / 1000.0;
  const auto again = solve_household(t.hh, settled);
  REQUIRE(again.status == lp::SolveStatus::optimal);
  CHECK(std::fabs(again.objective - r.household.objective) <=
        1e-6 * std::max(1.0, std::fabs(r.household.objective)));
}

TEST_CASE("feed-in premium pays spot plus the fixed margin") {
  Toy t = make_toy();
  Tariff tariff = flat_tariff();
  tariff.feed_in_mode = FeedInMode::wholesale_premium;
  tariff.feed_in_rate = 0.0;
  tariff.feed_in_premium = 0.03;
  t.cfg.damping = 1.0;

  const auto r = solve_scenario("rtp_feed", tariff, t.hh, t.disp, t.cfg);
  REQUIRE(r.solved());
  INFO(r.message);
  CHECK(r.converged);
  for (std::size_t h = 0; h < r.tariff.wholesale.size(); ++h)
    CHECK(r.tariff.sell(h) == r.tariff.wholesale[h] + 0.03);
}

TEST_CASE("iteration cap reports the remaining price band") {
  Toy t = make_toy();
  Tariff tariff = flat_tariff();
  tariff.energy_mode = EnergyChargeMode::wholesale;
  tariff.feed_in_mode = FeedInMode::prohibited;
  tariff.feed_in_rate = 0.0;
  t.cfg.max_iterations = 1;  // the first innovation is 0.06 EUR/kWh, far above tol

  const auto r = solve_scenario("capped", tariff, t.hh, t.disp, t.cfg);
  REQUIRE(r.solved());
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.message.find("no fixed point after 1 iterations") != std::string::npos);
  CHECK(r.message.find("recent band") != std::string::npos);
  CHECK(r.coupling_residual > t.cfg.price_tolerance);
}

TEST_CASE("a corrupted price series fails the coupling identity") {
  Toy t = make_toy();
  Tariff tariff = flat_tariff();
  tariff.energy_mode = EnergyChargeMode::wholesale;
  tariff.feed_in_mode = FeedInMode::prohibited;
  tariff.feed_in_rate = 0.0;
  t.cfg.damping = 1.0;
  auto r = solve_scenario("corrupt", tariff, t.hh, t.disp, t.cfg);
  REQUIRE(r.converged);

  r.tariff.wholesale[0] += 0.01;
  const auto joint = joint_kkt_report(r);
  CHECK(joint.max_coupling_residual >= 0.01 - 1e-12);
  CHECK_FALSE(joint.passes());
}

TEST_CASE("scenario inputs are validated before solving") {
  Toy t = make_toy();
  const Tariff tariff = flat_tariff();

  SECTION("horizon mismatch") {
    t.disp.demand = series({1000.0}, Unit::mw);
    CHECK_THROWS_AS(solve_scenario("bad", tariff, t.hh, t.disp, t.cfg), std::invalid_argument);
  }
  SECTION("bad damping") {
    t.cfg.damping = 0.0;
    CHECK_THROWS_AS(solve_scenario("bad", tariff, t.hh, t.disp, t.cfg), std::invalid_argument);
  }
  SECTION("bad household count") {
    t.cfg.n_households = 0.0;
    CHECK_THROWS_AS(solve_scenario("bad", tariff, t.hh, t.disp, t.cfg), std::invalid_argument);
  }
}

TEST_CASE("infeasible dispatch surfaces as a failed scenario") {
  Toy t = make_toy();
  t.disp.thermal = {{"tiny", 10.0, 20.0}};
  t.disp.voll = 0.0;  // no slack: demand cannot be met
  const auto r = solve_scenario("infeasible", flat_tariff(), t.hh, t.disp, t.cfg);
  CHECK_FALSE(r.solved());
  CHECK_FALSE(r.converged);
  CHECK(r.message.find("dispatch") != std::string::npos);
}
