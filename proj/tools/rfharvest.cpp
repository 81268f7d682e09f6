// rfharvest: command-line front end for the harvester simulator.

#include <iostream>

#include <CLI11.hpp>

#include "rfharvest/commands.hpp"

int main(int argc, char** argv) {
  using namespace rfharvest;

  CLI::App app{"Ambient-RF energy-harvesting sensor node simulator"};
  app.require_subcommand(1);

  RunOptions run_opt;
  std::uint64_t run_seed = 0;
  double until_s = 0.0, until_j = 0.0;
  int until_tx = 0;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and print the report");
  run_cmd->add_option("scenario_pos", run_opt.scenario, "Scenario file");
  run_cmd->add_option("--scenario", run_opt.scenario, "Scenario file");
  run_cmd->add_option("--trace", run_opt.trace, "Write the step trace CSV here");
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Source RNG seed");
  auto* until_opt = run_cmd->add_option("--until", until_s, "Stop after this many simulated seconds");
  auto* until_j_opt = run_cmd->add_option("--until-joules", until_j, "Stop once cap1 + cap2 store this much");
  auto* until_tx_opt = run_cmd->add_option("--until-tx", until_tx, "Stop after N transmissions");

  std::string budget_scenario;
  auto* budget_cmd = app.add_subcommand("budget", "Print the per-cycle power budget");
  budget_cmd->add_option("scenario_pos", budget_scenario, "Scenario file");
  budget_cmd->add_option("--scenario", budget_scenario, "Scenario file");

  CalibrateOptions cal_opt;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit rectifier parameters to sensitivity thresholds");
  cal_cmd->add_option("--preset", cal_opt.preset, "Built-in target set (paper)");
  cal_cmd->add_option("--target", cal_opt.targets, "[name@]device:stages:f_hz:dbm[:tank]");
  cal_cmd->add_option("--out", cal_opt.out, "Write the parameter sets here");

  SweepOptions sw_opt;
  std::uint64_t sw_seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one simulation per value of a scenario key");
  sweep_cmd->add_option("scenario_pos", sw_opt.scenario, "Scenario file");
  sweep_cmd->add_option("--scenario", sw_opt.scenario, "Scenario file");
  sweep_cmd->add_option("--sweep", sw_opt.sweep, "KEY=V1,V2,... or KEY=lo:hi:step")->required();
  sweep_cmd->add_option("--out", sw_opt.out, "Write the summary CSV here");
  auto* sw_seed_opt = sweep_cmd->add_option("--seed", sw_seed, "Source RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*run_cmd) {
    if (*seed_opt) run_opt.seed = run_seed;
    if (*until_opt) run_opt.until_s = until_s;
    if (*until_j_opt) run_opt.until_joules = until_j;
    if (*until_tx_opt) run_opt.until_tx = until_tx;
    return cmd_run(run_opt, std::cout, std::cerr);
  }
  if (*budget_cmd) return cmd_budget(budget_scenario, std::cout, std::cerr);
  if (*cal_cmd) return cmd_calibrate(cal_opt, std::cout, std::cerr);
  if (*sw_seed_opt) sw_opt.seed = sw_seed;
  return cmd_sweep(sw_opt, std::cout, std::cerr);
}
