#include <iostream>

#include <CLI11.hpp>

#include "mfga/harness/commands.hpp"

int main(int argc, char **argv) {
  using namespace mfga::harness;
  CLI::App app{"Certification and simulation harness for anti-monotone mean field games"};
  app.require_subcommand(1, 1);
  Invocation inv;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 1;
  for (const auto &name : subcommands()) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides [experiment] seed)");
    sub->add_option("--out", out, "output directory (default: [output] dir, then $MFG_ANTIMONO_OUT)");
    sub->add_option("--jobs", jobs, "worker threads for independent trials")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  CLI::App *sub = app.get_subcommands().front();
  inv.command = sub->get_name();
  if (sub->count("--config"))
    inv.config_path = config;
  if (sub->count("--seed"))
    inv.seed = seed;
  if (sub->count("--out"))
    inv.out = out;
  if (sub->count("--jobs"))
    inv.jobs = jobs;
  return dispatch(inv, std::cout, std::cerr);
}
