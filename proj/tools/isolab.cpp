#include <optional>
#include <string>

#include <CLI11.hpp>

#include "isolab/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"isolab: isomonodromic deformations of 2x2 Fuchsian systems"};
  app.require_subcommand(1);

  std::optional<std::string> config;
  std::string out = ".";
  std::optional<double> tol, grid_step;
  std::optional<std::uint64_t> seed;

  const char* commands[][2] = {
      {"monodromy", "monodromy generators of a Fuchsian system"},
      {"flow", "Schlesinger flow along a parameter path with invariant checks"},
      {"pvi", "Painleve VI track, parameters and residual"},
      {"garnier", "Garnier coordinates along a parameter grid"},
      {"reduce", "scalar second-order equation and apparent points"},
      {"tau", "ln tau along a parameter path"},
      {"verify", "self-verification suite"},
      {"probe-pole", "pole-order probe for u(t)"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", config, "JSON configuration");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--tol", tol, "tolerance");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--grid-step", grid_step, "grid step magnitude");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : isolab::cli::kInvalidConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return isolab::cli::run_command(command, config, out, {tol, seed, grid_step});
}
