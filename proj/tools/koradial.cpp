#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "koradial/commands.hpp"
#include "koradial/expr.hpp"

using namespace koradial;

int main(int argc, char** argv) {
  CLI::App app{"koradial: entire radial solutions of coupled semilinear systems"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string solution;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "problem configuration (TOML)")->required();
    sub->add_option("--set", sets, "override: name=value for a parameter, section.key=value otherwise")
        ->take_all()
        ->allow_extra_args(false);
    sub->add_option("--out", out_dir, "output directory (default: [output].dir)");
  };

  CLI::App* check = app.add_subcommand("check", "check structural hypotheses");
  CLI::App* solve = app.add_subcommand("solve", "compute the entire solution by Picard iteration");
  CLI::App* classify = app.add_subcommand("classify", "existence regime and behavior class");
  CLI::App* bounds = app.add_subcommand("bounds", "verify two-sided bounds on a solution");
  CLI::App* report = app.add_subcommand("report", "everything above, plus iterate audit");
  for (CLI::App* s : {check, solve, classify, bounds, report}) add_common(s);
  bounds->add_option("--solution", solution, "solution CSV (r,u1,u2) on the configured grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig cfg = load_config(config, sets);
    const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output.dir) : std::filesystem::path(out_dir);
    CommandResult res;
    if (*check) {
      res = run_check(cfg, out);
    } else if (*solve) {
      res = run_solve(cfg, out);
    } else if (*classify) {
      res = run_classify(cfg, out);
    } else if (*bounds) {
      std::optional<std::filesystem::path> sol;
      if (!solution.empty()) sol = solution;
      res = run_bounds(cfg, out, sol);
    } else {
      res = run_report(cfg, out);
    }
    std::cout << res.summary;
    std::cout.flush();
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const expr::ParseError& e) {
    std::fprintf(stderr, "expression error: %s\n", e.what());
    return kExitConfig;
  } catch (const expr::EvalError& e) {
    std::fprintf(stderr, "evaluation error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}
