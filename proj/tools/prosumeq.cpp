// Command-line front end: run scenario batches, validate config files, and
// inspect or export the built-in tariff catalog.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prosumeq/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitScenarioFailed = 1;
constexpr int kExitConfigError = 2;

std::string num(double v) {  // compact table formatting, not CSV output
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string tariff_summary(const prosumeq::Tariff& t) {
  using prosumeq::EnergyChargeMode;
  using prosumeq::FeedInMode;
  char buf[160];
  std::string energy =
      t.energy_mode == EnergyChargeMode::wholesale ? "rtp" : num(t.energy_charge);
  std::string feed;
  switch (t.feed_in_mode) {
    case FeedInMode::fixed_rate: feed = num(t.feed_in_rate); break;
    case FeedInMode::prohibited: feed = "prohibited"; break;
    case FeedInMode::wholesale: feed = "rtp"; break;
    case FeedInMode::wholesale_premium: feed = "rtp+" + num(t.feed_in_premium); break;
  }
  std::snprintf(buf, sizeof buf, "energy=%s other=%s fixed=%s feed=%s", energy.c_str(),
                num(t.other_charge).c_str(), num(t.fixed_charge).c_str(), feed.c_str());
  std::string line = buf;
  if (t.feed_in_cap_fraction > 0.0) line += " cap=" + num(t.feed_in_cap_fraction);
  return line;
}

int cmd_catalog(const std::string& write_dir) {
  const auto catalog = prosumeq::builtin_catalog();
  if (!write_dir.empty()) {
    std::filesystem::create_directories(write_dir);
    for (const auto& cfg : catalog) {
      const auto path = std::filesystem::path(write_dir) / (cfg.name + ".cfg");
      prosumeq::run_detail::write_text(path, prosumeq::serialize_scenario_config(cfg));
    }
    std::printf("wrote %zu config files to %s\n", catalog.size(), write_dir.c_str());
    return kExitOk;
  }
  for (const auto& cfg : catalog)
    std::printf("%-24s %s\n", cfg.name.c_str(), tariff_summary(cfg.tariff).c_str());
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  const auto diagnostics = prosumeq::validate_config(path);
  if (diagnostics.empty()) {
    std::printf("%s: ok\n", path.c_str());
    return kExitOk;
  }
  for (const auto& d : diagnostics) std::fprintf(stderr, "%s: %s\n", path.c_str(), d.c_str());
  return kExitConfigError;
}

struct RunArgs {
  std::string scenario;
  bool all = false;
  std::vector<std::string> config_files;
  std::string data_dir;
  bool synthetic = false;
  int subsample = 1;
  std::string out_dir = "out";
  bool calibrate = false;
  int workers = 0;
};

int cmd_run(const RunArgs& args) {
  std::vector<prosumeq::ScenarioConfig> configs;
  if (!args.config_files.empty()) {
    for (const auto& path : args.config_files) {
      const auto diagnostics = prosumeq::validate_config(path);
      if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) std::fprintf(stderr, "%s: %s\n", path.c_str(), d.c_str());
        return kExitConfigError;
      }
      std::ifstream in(path, std::ios::binary);
      std::ostringstream text;
      text << in.rdbuf();
      try {
        configs.push_back(prosumeq::parse_scenario_config(text.str()));
      } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", path.c_str(), e.what());
        return kExitConfigError;
      }
    }
  } else {
    const auto catalog = prosumeq::builtin_catalog();
    if (args.all) {
      configs = catalog;
    } else {
      for (const auto& cfg : catalog)
        if (cfg.name == args.scenario) configs.push_back(cfg);
      if (configs.empty()) {
        std::fprintf(stderr, "unknown scenario '%s'; see `prosumeq catalog`\n",
                     args.scenario.c_str());
        return kExitConfigError;
      }
    }
  }

  for (auto& cfg : configs) {
    if (!args.data_dir.empty()) {
      cfg.synthetic = false;
      cfg.data_dir = args.data_dir;
    } else if (args.synthetic) {
      cfg.synthetic = true;
      cfg.data_dir.clear();
    }
    if (args.subsample > 1) cfg.subsample = args.subsample;
  }

  prosumeq::BatchOptions options;
  options.calibrate = args.calibrate;
  options.workers = args.workers;
  prosumeq::BatchResult batch;
  try {
    batch = prosumeq::run_batch(configs, args.out_dir, options);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return kExitConfigError;
  }

  if (batch.calibrated_energy_charge >= 0.0)
    std::printf("calibrated energy charge: %s EUR/kWh\n",
                num(batch.calibrated_energy_charge).c_str());
  for (const auto& o : batch.outcomes) {
    if (!o.ran) {
      std::printf("%-24s FAILED  %s\n", o.name.c_str(), o.message.c_str());
      continue;
    }
    std::printf("%-24s %s  iterations=%d  z_pro=%.2f  pv=%s kW  sto=%s kWh%s\n", o.name.c_str(),
                o.kkt_ok ? "ok    " : "KKT!  ", o.iterations, o.result.household.objective,
                num(o.result.household.n_pv).c_str(), num(o.result.household.n_sto_e).c_str(),
                o.converged ? "" : "  [not converged]");
  }
  std::printf("outputs in %s\n", args.out_dir.c_str());
  return batch.exit_code == 0 ? kExitOk : kExitScenarioFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prosumage / power-sector equilibrium simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "solve one or more tariff scenarios");
  auto* opt_scenario =
      run->add_option("--scenario", run_args.scenario, "scenario name from the catalog");
  auto* opt_all = run->add_flag("--all", run_args.all, "run the full built-in catalog");
  auto* opt_config = run->add_option("--config", run_args.config_files,
                                     "scenario config file (repeatable, overrides catalog)");
  opt_scenario->excludes(opt_all);
  opt_config->excludes(opt_scenario);
  opt_config->excludes(opt_all);
  auto* opt_dir = run->add_option("--data-dir", run_args.data_dir, "load input CSVs from here");
  run->add_flag("--synthetic", run_args.synthetic, "use the built-in deterministic year")
      ->excludes(opt_dir);
  run->add_option("--subsample", run_args.subsample, "keep every Nth step")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", run_args.out_dir, "output directory (default: out)");
  run->add_flag("--calibrate", run_args.calibrate,
                "derive the energy charge from a no-prosumage system run");
  run->add_option("--workers", run_args.workers, "solver threads (default: PROSUMEQ_WORKERS)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a scenario config file");
  validate->add_option("path", validate_path, "config file")->required();

  std::string catalog_write;
  auto* catalog = app.add_subcommand("catalog", "list built-in tariff scenarios");
  catalog->add_option("--write", catalog_write, "export each scenario as a config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  if (run->parsed()) {
    if (run_args.config_files.empty() && !run_args.all && run_args.scenario.empty()) {
      std::fprintf(stderr, "run: need --scenario NAME, --all, or --config FILE\n");
      return kExitConfigError;
    }
    return cmd_run(run_args);
  }
  if (validate->parsed()) return cmd_validate(validate_path);
  if (catalog->parsed()) return cmd_catalog(catalog_write);
  return kExitConfigError;
}
