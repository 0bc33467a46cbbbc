// pinnbo: run experiment grids, aggregate them and render regret plots.
//
//   pinnbo run --config exp.ini --seeds 0..9
//   pinnbo aggregate --manifest out/<hash>/manifest.txt
//   pinnbo plot --config exp.ini
//   pinnbo verify
//   pinnbo list-problems --defaults
//
// Exit codes: 0 ok, 1 some cells or checks failed, 2 configuration error.

#include "pinnbo/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace pinnbo;

namespace {

struct GridFlags {
  std::string config;
  std::string out;
  std::string seeds;
  std::string method;
  std::string problem;
  int budget = 0;
  int workers = -1;
};

void add_grid_flags(CLI::App* cmd, GridFlags& f) {
  cmd->add_option("--config", f.config, "INI experiment file");
  cmd->add_option("--out", f.out, "output directory (default: out)");
  cmd->add_option("--seeds", f.seeds, "seed range a..b or list a,b,c");
  cmd->add_option("--method", f.method, "method or comma-separated methods");
  cmd->add_option("--problem", f.problem, "problem or comma-separated problems");
  cmd->add_option("--budget", f.budget, "evaluation budget T");
  cmd->add_option("--workers", f.workers, "worker threads (0: all cores)");
}

ExperimentConfig resolve(const GridFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.seeds.empty()) cfg.seeds = parse_seeds(f.seeds);
  if (!f.method.empty()) cfg.methods = split_list(f.method);
  if (!f.problem.empty()) cfg.problems = split_list(f.problem);
  if (f.budget != 0) cfg.budget = f.budget;
  if (f.workers >= 0) cfg.workers = f.workers;
  cfg.validate();
  return cfg;
}

fs::path manifest_path(const std::string& manifest, const GridFlags& f) {
  if (!manifest.empty()) return manifest;
  return resolve(f).root() / "manifest.txt";
}

int report(const std::string& manifest, const GridFlags& f, bool tables, bool plots) {
  const fs::path path = manifest_path(manifest, f);
  const Manifest m = parse_manifest(read_file(path));
  for (const auto& p : write_reports(m, path.parent_path(), tables, plots)) std::cout << p.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PINN-BO experiments"};
  app.require_subcommand(1);

  GridFlags grid;
  std::string manifest;
  bool defaults = false;
  std::uint64_t verify_seed = 0;

  auto* run = app.add_subcommand("run", "run a (problem x method x seed) grid");
  add_grid_flags(run, grid);
  auto* agg = app.add_subcommand("aggregate", "mean and standard error tables");
  add_grid_flags(agg, grid);
  agg->add_option("--manifest", manifest, "manifest.txt of a finished run");
  auto* plot = app.add_subcommand("plot", "SVG best-so-far curves");
  add_grid_flags(plot, grid);
  plot->add_option("--manifest", manifest, "manifest.txt of a finished run");
  auto* ver = app.add_subcommand("verify", "matrix identities and solver refinement checks");
  ver->add_option("--seed", verify_seed, "seed for the random instances");
  auto* list = app.add_subcommand("list-problems", "benchmark problems");
  list->add_flag("--defaults", defaults, "also print every configuration default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg = resolve(grid);
      const Manifest m = run_experiment(cfg, &std::cerr);
      std::cout << (cfg.root() / "manifest.txt").string() << '\n';
      return m.all_ok() ? 0 : 1;
    }
    if (agg->parsed()) return report(manifest, grid, true, false);
    if (plot->parsed()) return report(manifest, grid, false, true);
    if (ver->parsed()) return verify(std::cout, verify_seed) ? 0 : 1;
    if (list->parsed()) {
      list_problems(std::cout, defaults);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
