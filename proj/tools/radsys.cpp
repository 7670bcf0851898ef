#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "radsys/cli/app.hpp"

namespace cli = radsys::cli;

int main(int argc, char** argv) {
  CLI::App app{"Radial solutions of quasilinear elliptic systems"};
  app.set_version_flag("--version", std::string(cli::tool_name) + " " + cli::tool_version);
  app.require_subcommand(1);

  std::string config_path, out_dir, solution_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
  };
  auto* solve = app.add_subcommand("solve", "solve for every central-value vector and verify");
  auto* classify = app.add_subcommand("classify", "decide which theorem applies");
  auto* verify = app.add_subcommand("verify", "recheck a stored solution CSV");
  auto* sweep = app.add_subcommand("sweep", "solve a family of central values and compare");
  for (auto* sub : {solve, classify, verify, sweep}) add_common(sub);
  verify->add_option("--solution", solution_path, "solution CSV written by solve")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cli::RunConfig cfg = cli::load_config(config_path);
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    cli::CommandResult res;
    if (*solve) res = cli::cmd_solve(cfg);
    else if (*classify) res = cli::cmd_classify(cfg);
    else if (*verify) res = cli::cmd_verify(cfg, solution_path);
    else res = cli::cmd_sweep(cfg);
    for (const auto& f : res.files) std::cout << f.string() << '\n';
    return res.exit_code;
  } catch (const radsys::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::exit_code::config;
  } catch (const cli::SolutionFileError& e) {
    std::cerr << "solution file error: " << e.what() << '\n';
    return cli::exit_code::config;
  } catch (const radsys::InternalError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return cli::exit_code::internal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code::failure;
  }
}
