#include "shellkorn/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace sk = shellkorn::cli;

int main(int argc, char** argv) {
  CLI::App app{"Korn constants of thin shells: geometry checks, Ansatz sweeps, eigenvalue sweeps, reports"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool serial = false;
  long long seed = -1;
  std::vector<std::string> csvs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value lines)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides 'out')");
    sub->add_flag("--serial", serial, "Run sweep points one at a time; CSV output is byte-stable");
    sub->add_option("--seed", seed, "Random seed (overrides 'seed')")->check(CLI::NonNegativeNumber);
  };
  auto* geom = app.add_subcommand("geom-check", "Codazzi-Gauss residuals and admissibility certificate");
  auto* ansatz = app.add_subcommand("ansatz-quotient", "Ansatz Korn-quotient sweep over h");
  auto* korn = app.add_subcommand("korn-constant", "Discrete Korn constant sweep over h");
  auto* report = app.add_subcommand("report", "Fit table and log-log plot from sweep CSVs");
  for (auto* s : {geom, ansatz, korn, report}) common(s);
  report->add_option("csv", csvs, "Sweep CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sk::kUsage;
  }

  try {
    auto cfg = sk::load_config(config_path);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    sk::RunOptions opt;
    opt.serial = serial;
    opt.threads = shellkorn::detail::thread_budget();

    if (*geom) return sk::cmd_geom_check(cfg, std::cout, std::cerr);
    if (*ansatz) return sk::cmd_ansatz_quotient(cfg, opt, std::cout, std::cerr);
    if (*korn) return sk::cmd_korn_constant(cfg, opt, std::cout, std::cerr);
    return sk::cmd_report(cfg, csvs, std::cout, std::cerr);
  } catch (const sk::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sk::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sk::kFailure;
  }
}
