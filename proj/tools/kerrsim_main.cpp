#include <cstdint>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "kerrsim/config.hpp"
#include "kerrsim/errors.hpp"
#include "kerrsim/runner.hpp"
#include "kerrsim/version.hpp"

namespace {

const char* kExitCodeTable =
    "Exit codes:\n"
    "  0   ok\n"
    "  1   generic failure\n"
    "  2   parse error (config text or command line)\n"
    "  3   validation error (field constraint violated)\n"
    "  4   orthogonal post-selection (weak value diverges)\n"
    "  5   degenerate post-selection (success probability underflows)\n"
    "  6   zero variance (pointer cannot respond to the coupling)\n"
    "  7   nonpositive information (Cramer-Rao bound undefined)\n"
    "  8   empty distribution (no probability mass)\n"
    "  9   resource limit (distribution support too large)\n"
    "  10  unreachable variance (above the full-depth modulation limit)\n"
    "  11  no post-selected trials\n"
    "  12  singular fit (rank-deficient design matrix)\n"
    "  13  non-convergence (iteration budget exhausted)\n"
    "  14  io error (unreadable or unwritable path)";

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("probe-ensemble cross-phase estimation campaigns (v") +
               kerrsim::kVersion + ")"};
  app.footer(kExitCodeTable);

  bool gen_seed = false;
  app.add_flag("--gen-seed", gen_seed, "print a fresh 64-bit seed and exit");

  CliArgs args;
  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"batch", "one Monte Carlo batch at fixed parameters"},
      {"sweep-g", "coupling sweep (or delay-parameterized Gaussian trace)"},
      {"sweep-dn", "modulation-depth sweep over target intensity spreads"},
      {"sweep-eps", "post-selection-angle sweep"},
      {"scaling", "precision-vs-mean-intensity power-law study"},
      {"fisher", "information bounds per mean intensity"},
  };
  for (const auto& command : commands) {
    CLI::App* sub = app.add_subcommand(command.name, command.help);
    sub->add_option("--config", args.config_path, "campaign config (JSON)")->required();
    sub->add_option("--out", args.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", args.seed, "seed override (64-bit unsigned)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--workers", args.workers, "worker threads (default: hardware)")
        ->check(CLI::Range(1, 65536));
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (gen_seed) {
    std::random_device device;
    const uint64_t seed =
        (static_cast<uint64_t>(device()) << 32) ^ static_cast<uint64_t>(device());
    std::cout << seed << "\n";
    return 0;
  }

  const auto subcommands = app.get_subcommands();
  if (subcommands.empty()) {
    std::cerr << app.help() << "\n";
    return static_cast<int>(kerrsim::ExitCode::parse_error);
  }
  const std::string command = subcommands.front()->get_name();
  args.seed_given = subcommands.front()->count("--seed") > 0;

  try {
    kerrsim::CampaignConfig config = kerrsim::load_config(args.config_path);
    if (config.command != command) {
      throw kerrsim::ValidationError("command: config declares '" + config.command +
                                     "' but the '" + command + "' subcommand was invoked");
    }
    if (args.seed_given) config.seed = args.seed;
    const kerrsim::ResultRecord result = kerrsim::run(config, args.workers);
    const std::string dir = args.out_dir.empty() ? config.output.dir : args.out_dir;
    const std::string csv_path = kerrsim::emit_table(result, dir, config.output.prefix);
    std::cout << "wrote " << csv_path << "\n";
    return 0;
  } catch (const kerrsim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(kerrsim::ExitCode::generic_failure);
  }
}
