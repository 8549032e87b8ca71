// Batch front end for optimal validation-experiment design: scenario and
// sensor design, uncertainty propagation, Bayesian calibration, the
// verification tables, and the full validation workflow, driven by a JSON
// config. Exit codes: 0 ok / not invalidated, 1 invalidated, 2 config error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>

#include "oved/runconfig.hpp"

using namespace oved;

int main(int argc, char** argv) {
  CLI::App app{"oved: optimal design of validation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string data_csv;
  std::int64_t seed_override = -1;
  int threads_override = 0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "JSON run configuration")->required();
    cmd->add_option("-o,--out", out_dir, "output directory (default: config output_dir)");
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--threads", threads_override, "override the config thread count");
  };

  CLI::App* design_scenario = app.add_subcommand(
      "design-scenario", "optimal validation scenario over the controlled environment");
  add_common(design_scenario);
  CLI::App* design_sensor = app.add_subcommand(
      "design-sensor", "optimal observable and sensor parameters for the validation scenario");
  add_common(design_sensor);
  CLI::App* validate = app.add_subcommand("validate", "full validation workflow");
  add_common(validate);
  validate->add_option("--data", data_csv, "CSV of experimental observations (one per line)");
  CLI::App* calibrate = app.add_subcommand("calibrate", "Bayesian calibration from observations");
  add_common(calibrate);
  calibrate->add_option("--data", data_csv, "observations CSV (x..., z..., y rows)")->required();
  CLI::App* verify = app.add_subcommand("verify", "scenario-recovery verification table");
  add_common(verify);
  CLI::App* propagate = app.add_subcommand("propagate", "QoI uncertainty propagation");
  add_common(propagate);

  CLI11_PARSE(app, argc, argv);

  try {
    cli::RunConfig cfg = cli::parse_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override > 0) cfg.threads = threads_override;
    const std::string out = out_dir.empty() ? cfg.output_dir : out_dir;

    if (design_scenario->parsed()) return cli::cmd_design_scenario(cfg, out);
    if (design_sensor->parsed()) return cli::cmd_design_sensor(cfg, out);
    if (validate->parsed()) return cli::cmd_validate(cfg, out, data_csv);
    if (calibrate->parsed()) return cli::cmd_calibrate(cfg, out, data_csv);
    if (verify->parsed()) return cli::cmd_verify(cfg, out);
    if (propagate->parsed()) return cli::cmd_propagate(cfg, out);
    std::cerr << "error: no subcommand\n";
    return cli::exit_config;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_numeric;
  }
}
