#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "cvshadow/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Classical shadows for continuous-variable states"};
  app.set_version_flag("--version", std::string(CVSHADOW_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out, "override the output directory");
  };
  auto* sample = app.add_subcommand("sample", "simulate measurement records");
  auto* reconstruct = app.add_subcommand("reconstruct", "average shadows and compare characteristic functions");
  auto* bounds = app.add_subcommand("bounds", "sample-complexity bounds");
  auto* entropy = app.add_subcommand("entropy", "polynomial entropy estimate");
  for (auto* sub : {sample, reconstruct, bounds, entropy}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = cvshadow::load_config(config_path);
    std::optional<std::filesystem::path> out_path;
    if (out) out_path = *out;
    cvshadow::apply_overrides(cfg, seed, out_path);
    if (sample->parsed()) return cvshadow::cmd_sample(cfg);
    if (reconstruct->parsed()) return cvshadow::cmd_reconstruct(cfg);
    if (bounds->parsed()) return cvshadow::cmd_bounds(cfg);
    return cvshadow::cmd_entropy(cfg);
  } catch (const cvshadow::ConfigError& e) {
    std::cerr << "error: config " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
