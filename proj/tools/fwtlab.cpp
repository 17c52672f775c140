// fwtlab: list, run and merge Free Will Test experiments.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fwtlab/harness/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Free Will Test laboratory"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "list registered experiments");

  auto* run = app.add_subcommand("run", "run an experiment, 'all', or a JSON config file");
  std::string target;
  std::vector<std::string> sets;
  std::string out_dir;
  run->add_option("target", target, "experiment name, 'all', or config.json")->required();
  run->add_option("-s,--set", sets, "override a parameter, key.path=value (repeatable)");
  run->add_option("-o,--out", out_dir, "output directory (default $FWTLAB_OUT or fwtlab-out)");

  auto* report = app.add_subcommand("report", "merge report JSONs from a directory");
  std::string report_dir;
  bool csv = false;
  report->add_option("dir", report_dir, "artifact directory");
  report->add_flag("--csv", csv, "emit CSV instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? fwt::kExitOk : fwt::kExitConfig;
  }

  const fwt::Registry reg = fwt::default_registry();
  if (*list) return fwt::cmd_list(reg, std::cout);
  if (*run) {
    const auto dir = out_dir.empty() ? fwt::default_output_dir() : std::filesystem::path(out_dir);
    return fwt::cmd_run(reg, target, sets, dir, std::cout, std::cerr);
  }
  const auto dir = report_dir.empty() ? fwt::default_output_dir() : std::filesystem::path(report_dir);
  return fwt::cmd_report(reg, dir, csv, std::cout, std::cerr);
}
