#include "plap/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian principal eigenvalues: solves, optimization, derivative checks"};
  std::string subcommand, config, out;
  std::uint64_t seed = 0;
  app.add_option("subcommand", subcommand, "solve | optimize | derivative | sobolev | check")->required();
  app.add_option("--config", config, "JSON run configuration")->required();
  auto* out_opt = app.add_option("--out", out, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : plap::cli::exit_invalid;
  }
  std::optional<std::filesystem::path> out_dir;
  if (*out_opt) out_dir = out;
  std::optional<std::uint64_t> seed_override;
  if (*seed_opt) seed_override = seed;
  return plap::cli::run(subcommand, config, out_dir, seed_override);
}
