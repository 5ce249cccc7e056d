#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "prosumeq/runner.hpp"

using namespace prosumeq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path temp_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("prosumeq_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out);
  out << text;
}

// a deliberately tiny variant of the reference scenario: 120 steps per year
ScenarioConfig fast_scenario(const std::string& name) {
  auto c = base_scenario();
  c.name = name;
  c.subsample = 73;
  c.tariff.energy_charge = 0.05;
  c.tariff.other_charge = 0.25;
  c.tariff.feed_in_mode = FeedInMode::fixed_rate;
  c.tariff.feed_in_rate = 0.08;
  return c;
}

}  // namespace

TEST_CASE("catalog holds the sixteen tariff designs") {
  const auto catalog = builtin_catalog();
  REQUIRE(catalog.size() == 16);
  std::set<std::string> names;
  for (const auto& c : catalog) {
    names.insert(c.name);
    CHECK(c.synthetic);
    CHECK(c.thermal.size() == 6);
    CHECK(c.res.size() == 4);
    CHECK(c.psp.power_mw == 9000.0);
    CHECK(c.psp.energy_mwh == 60000.0);
  }
  CHECK(names.size() == 16);  // unique names

  const auto& base = catalog[0];
  CHECK(base.name == "Retail_30_FIT_8");
  CHECK(base.tariff.energy_charge == 0.05);
  CHECK(base.tariff.other_charge == 0.25);
  CHECK(base.tariff.feed_in_rate == 0.08);
  CHECK(base.tariff.buy(0) == Catch::Approx(0.30));

  const auto& cap = catalog[5];
  CHECK(cap.name == "Retail_30_FIT_8_Cap");
  CHECK(cap.tariff.feed_in_cap_fraction == 0.5);

  const auto& fixed_part = catalog[8];
  CHECK(fixed_part.name == "Retail_15_FIT_8");
  CHECK(fixed_part.tariff.other_charge == 0.10);
  CHECK(fixed_part.tariff.fixed_charge == 750.0);

  CHECK(catalog[12].tariff.feed_in_mode == FeedInMode::wholesale);
  CHECK(catalog[13].tariff.energy_mode == EnergyChargeMode::wholesale);
  CHECK(catalog[15].tariff.feed_in_mode == FeedInMode::wholesale_premium);
  CHECK(catalog[15].tariff.feed_in_premium == 0.03);
}

TEST_CASE("reference fleet carries fuel-derived marginal costs") {
  const auto fleet = reference_thermal();
  REQUIRE(fleet.size() == 6);
  auto find = [&](const std::string& n) {
    for (const auto& t : fleet)
      if (t.name == n) return t;
    FAIL("missing tech " + n);
    return fleet[0];
  };
  CHECK(find("lignite").marginal_cost == Catch::Approx(38.80).margin(0.01));
  CHECK(find("hardcoal").marginal_cost == Catch::Approx(37.31).margin(0.01));
  CHECK(find("ccgt").marginal_cost == Catch::Approx(57.12).margin(0.01));
  CHECK(find("ocgt").marginal_cost == Catch::Approx(77.39).margin(0.01));
  CHECK(find("oil").marginal_cost == Catch::Approx(156.14).margin(0.01));
  CHECK(find("bio").marginal_cost == Catch::Approx(20.53).margin(0.01));
  CHECK(find("ccgt").capacity_mw == 24000.0);
}

TEST_CASE("config text round-trips through parse and serialize") {
  for (const auto& c : builtin_catalog()) {
    const auto text = serialize_scenario_config(c);
    const auto back = parse_scenario_config(text);
    CHECK(serialize_scenario_config(back) == text);
  }
}

TEST_CASE("config parser reports precise errors") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_scenario_config(text);
      FAIL("expected a parse error containing '" + needle + "'");
    } catch (const std::invalid_argument& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("name = x\nunknown.key = 1\n", "line 2");
  expect_error("name = x\nunknown.key = 1\n", "unknown key");
  expect_error("tariff.energy_charge = abc\n", "bad number");
  expect_error("resolution.subsample = 1.5\n", "integer");
  expect_error("tariff.feed_in_mode = sometimes\n", "feed-in mode");
  expect_error("just a line without equals\n", "key = value");
  expect_error("dispatch.thermal.capacity_mw = 5\n", "<name>.<field>");
  expect_error("dispatch.thermal.gas.lifetime = 5\n", "unknown field");
}

TEST_CASE("config parser handles comments and custom technologies") {
  const std::string text =
      "# tiny system\n"
      "name = mini\n"
      "tariff.energy_charge = 0.04  # EUR/kWh\n"
      "dispatch.thermal.gas.capacity_mw = 120\n"
      "dispatch.thermal.gas.marginal_cost = 42.5\n"
      "dispatch.res.wind.capacity_mw = 80\n";
  const auto c = parse_scenario_config(text);
  CHECK(c.name == "mini");
  CHECK(c.tariff.energy_charge == 0.04);
  REQUIRE(c.thermal.size() == 1);
  CHECK(c.thermal[0].name == "gas");
  CHECK(c.thermal[0].capacity_mw == 120.0);
  CHECK(c.thermal[0].marginal_cost == 42.5);
  REQUIRE(c.res.size() == 1);
  CHECK(c.res[0].name == "wind");
  // file-only parsing starts from an empty fleet, not the reference system
  CHECK(c.psp.power_mw == 0.0);
}

TEST_CASE("validation accepts every serialized catalog entry") {
  const auto dir = temp_dir("validate_ok");
  for (const auto& c : builtin_catalog()) {
    const auto path = dir / (c.name + ".cfg");
    write_file(path, serialize_scenario_config(c));
    const auto diags = validate_config(path.string());
    INFO(path << ": " << (diags.empty() ? "" : diags.front()));
    CHECK(diags.empty());
  }
  fs::remove_all(dir);
}

TEST_CASE("validation reports field and file problems") {
  const auto dir = temp_dir("validate_bad");

  SECTION("unreadable file") {
    const auto diags = validate_config((dir / "missing.cfg").string());
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("cannot open") != std::string::npos);
  }
  SECTION("out-of-range charge and missing name") {
    write_file(dir / "bad.cfg", "tariff.other_charge = -1\n");
    const auto diags = validate_config((dir / "bad.cfg").string());
    bool saw_name = false, saw_charge = false;
    for (const auto& d : diags) {
      saw_name = saw_name || d.find("name") != std::string::npos;
      saw_charge = saw_charge || d.find("tariff.other_charge") != std::string::npos;
    }
    CHECK(saw_name);
    CHECK(saw_charge);
  }
  SECTION("dir source needs a directory and matching horizons") {
    auto c = fast_scenario("dircheck");
    c.synthetic = false;
    c.data_dir.clear();
    write_file(dir / "nodir.cfg", serialize_scenario_config(c));
    auto diags = validate_config((dir / "nodir.cfg").string());
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("data.dir") != std::string::npos);

    // build a data dir with one truncated series
    const auto data_dir = dir / "data";
    fs::create_directories(data_dir);
    const auto profiles = synthetic_profiles();
    save_timeseries((data_dir / "household_demand.csv").string(), profiles.household_demand);
    save_timeseries((data_dir / "pv_cf.csv").string(), profiles.pv_cf);
    save_timeseries((data_dir / "onshore_cf.csv").string(), profiles.onshore_cf);
    save_timeseries((data_dir / "offshore_cf.csv").string(), profiles.offshore_cf);
    auto short_ror = profiles.ror_cf;
    short_ror.values.resize(4380);
    save_timeseries((data_dir / "ror_cf.csv").string(), short_ror);

    c.data_dir = data_dir.string();
    write_file(dir / "mismatch.cfg", serialize_scenario_config(c));
    diags = validate_config((dir / "mismatch.cfg").string());
    bool saw_missing = false, saw_horizon = false;
    for (const auto& d : diags) {
      saw_missing = saw_missing || d.find("missing data file") != std::string::npos;
      saw_horizon = saw_horizon || (d.find("horizon mismatch") != std::string::npos &&
                                    d.find("4380") != std::string::npos &&
                                    d.find("8760") != std::string::npos);
    }
    CHECK(saw_missing);  // national_demand.csv was never written
    CHECK(saw_horizon);
  }
  fs::remove_all(dir);
}

TEST_CASE("scenario data maps capacity factors by technology name") {
  auto c = fast_scenario("data");
  const auto data = load_scenario_data(c);
  REQUIRE(data.dispatch.demand.size() == 120);
  CHECK(data.household.demand.size() == 120);
  CHECK(data.household.demand.step_hours == 73.0);

  REQUIRE(data.dispatch.res.size() == 4);
  const auto profiles = synthetic_profiles();
  const auto pv = subsample(profiles.pv_cf, 73);
  for (std::size_t i = 0; i < data.dispatch.res.size(); ++i) {
    if (data.dispatch.res[i].name != "solar") continue;
    REQUIRE(data.dispatch.res[i].cf.size() == pv.size());
    for (std::size_t h = 0; h < pv.size(); ++h) CHECK(data.dispatch.res[i].cf[h] == pv[h]);
  }

  // non-prosumage demand = national minus one million aggregated households
  const auto national = subsample(profiles.national_demand, 73);
  const auto hh = subsample(profiles.household_demand, 73);
  for (std::size_t h = 0; h < 5; ++h)
    CHECK(data.dispatch.demand[h] == Catch::Approx(national[h] - 1000.0 * hh[h]));
  for (std::size_t h = 0; h < national.size(); ++h) CHECK(data.dispatch.demand[h] > 0.0);
}

TEST_CASE("batch runs write the full artifact set deterministically") {
  std::vector<ScenarioConfig> configs{fast_scenario("alpha")};
  {
    auto beta = fast_scenario("beta");
    beta.tariff.feed_in_mode = FeedInMode::prohibited;
    beta.tariff.feed_in_rate = 0.0;
    configs.push_back(beta);
  }

  const auto out1 = temp_dir("batch1");
  const auto out2 = temp_dir("batch2");
  const auto b1 = run_batch(configs, out1.string());
  const auto b2 = run_batch(configs, out2.string());

  CHECK(b1.exit_code == 0);
  REQUIRE(b1.outcomes.size() == 2);
  for (const auto& o : b1.outcomes) {
    CHECK(o.ran);
    CHECK(o.converged);
    CHECK(o.kkt_ok);
  }

  const std::vector<std::string> files = {
      "household_alpha.csv", "dispatch_alpha.csv", "prices_alpha.csv",
      "convergence_alpha.csv", "rldc_alpha.csv", "household_beta.csv",
      "metrics.csv", "manifest.json"};
  for (const auto& f : files) {
    INFO(f);
    REQUIRE(fs::exists(out1 / f));
    CHECK(slurp(out1 / f) == slurp(out2 / f));  // byte-identical reruns
  }

  // per-step files have one row per step plus the header
  const auto prices = slurp(out1 / "prices_alpha.csv");
  CHECK(std::count(prices.begin(), prices.end(), '\n') == 121);
  const auto metrics = slurp(out1 / "metrics.csv");
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
  CHECK(metrics.find("alpha,ok") != std::string::npos);
  CHECK(metrics.find("beta,ok") != std::string::npos);

  // prohibition shows up in the artifacts: beta exports nothing
  const auto rldc_beta = slurp(out1 / "rldc_beta.csv");
  CHECK(rldc_beta.find("-") == std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
  CHECK(manifest["schema"] == "prosumeq-run-manifest-v1");
  REQUIRE(manifest["scenarios"].size() == 2);
  CHECK(manifest["scenarios"][0]["name"] == "alpha");
  CHECK(manifest["scenarios"][0]["kkt_ok"] == true);
  CHECK(manifest["scenarios"][0]["config_hash"].get<std::string>().size() == 16);

  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("a failing scenario is isolated and flagged") {
  auto broken = fast_scenario("broken");
  broken.thermal.clear();  // nothing dispatchable
  broken.res.clear();
  broken.psp = {0.0, 0.0, 0.8};
  broken.voll = 0.0;  // and no slack either: infeasible
  const std::vector<ScenarioConfig> configs{fast_scenario("fine"), broken};

  const auto out = temp_dir("batch_fail");
  const auto b = run_batch(configs, out.string());
  CHECK(b.exit_code == 1);
  CHECK(b.outcomes[0].ran);
  CHECK(b.outcomes[0].kkt_ok);
  CHECK_FALSE(b.outcomes[1].ran);
  CHECK(!b.outcomes[1].message.empty());

  const auto metrics = slurp(out / "metrics.csv");
  CHECK(metrics.find("broken,failed") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["scenarios"][1]["status"] == "failed");
  CHECK_FALSE(fs::exists(out / "household_broken.csv"));
  fs::remove_all(out);
}

TEST_CASE("batch calibration pins the energy charge to the no-prosumage system") {
  auto c = fast_scenario("calibrated");
  const auto out = temp_dir("batch_cal");
  BatchOptions options;
  options.calibrate = true;
  const auto b = run_batch({c}, out.string(), options);
  REQUIRE(b.exit_code == 0);
  CHECK(b.calibrated_energy_charge > 0.01);   // plausible wholesale level
  CHECK(b.calibrated_energy_charge < 0.20);
  CHECK(b.outcomes[0].energy_charge == b.calibrated_energy_charge);

  // matches a direct computation on the same data
  CHECK(b.calibrated_energy_charge == calibrate_batch_energy_charge(c));
  fs::remove_all(out);
}

TEST_CASE("duplicate scenario names are rejected") {
  const auto out = temp_dir("batch_dup");
  CHECK_THROWS_AS(run_batch({fast_scenario("x"), fast_scenario("x")}, out.string()),
                  std::invalid_argument);
  fs::remove_all(out);
}
