#pragma once

#include "pinnbo/baselines.hpp"
#include "pinnbo/benchmarks.hpp"
#include "pinnbo/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pinnbo {

/// Thrown for malformed or inconsistent experiment configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using Section = std::map<std::string, std::string>;

struct ExperimentConfig {
  std::vector<std::string> problems{"dropwave"};
  std::vector<std::string> methods{"pinn_bo", "neural_greedy", "random_search"};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int budget = 100;
  int init_points = -1;  // -1: 5 d
  /// Worker threads; 0 means hardware concurrency.
  int workers = 0;
  std::filesystem::path out_dir = "out";
  /// [problems] plus one section per method, each a flat key/value map.
  std::map<std::string, Section> overrides;

  void validate() const;
  /// Sorted key/value text of everything that affects results (not out_dir or workers).
  std::string canonical() const;
  std::string hash() const;
  std::filesystem::path root() const { return out_dir / hash(); }
};

std::vector<std::string> method_names();

/// "a..b" (inclusive) or a comma-separated list.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

/// INI file with an [experiment] section and optional [problems] and
/// per-method sections.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in);

std::uint64_t fnv1a(const std::string& text);

/// Method defaults after overrides; unknown keys are a ConfigError.
ProblemOptions problem_options(const ExperimentConfig& cfg);
PinnBoConfig pinn_bo_config(const ExperimentConfig& cfg, const std::string& method, std::uint64_t seed);
GpBoConfig gp_config(const ExperimentConfig& cfg, const std::string& method, std::uint64_t seed);
double perturb_fraction(const ExperimentConfig& cfg);

RunRecord run_cell(const ExperimentConfig& cfg, const Problem& problem, const std::string& method, std::uint64_t seed);

/// Text serialization. Wall time is not part of the record so that reruns
/// are byte-identical; it goes to a sidecar file.
std::string format_record(const RunRecord& rec);
RunRecord parse_record(const std::string& text);

/// Writes to a temporary sibling and renames over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

struct Cell {
  std::string problem;
  std::string method;
  std::uint64_t seed = 0;
  /// Relative to the manifest's directory.
  std::string record;
  bool ok = false;
  std::string error;
};

struct Manifest {
  std::string hash;
  std::string config;  // canonical text
  std::vector<Cell> cells;

  bool all_ok() const;
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);

/// Runs the whole grid on a worker pool. Writes records, timing sidecars and
/// <root>/manifest.txt. Cell failures are recorded, not thrown.
Manifest run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct Curve {
  std::string problem;
  std::string method;
  int seeds = 0;
  std::vector<double> mean;    // best observed y per iteration
  std::vector<double> stderr_;
  std::vector<double> regret_mean;  // NaN when f* is unknown
  std::vector<double> regret_stderr;
};

/// Mean and standard error across seeds for every (problem, method) with at
/// least one complete cell. Mismatched budgets within a group throw.
std::vector<Curve> aggregate(const Manifest& m, const std::filesystem::path& dir);
std::string format_table(const std::vector<Curve>& curves);
/// One SVG per problem: a line and a +-stderr band per method.
std::string render_svg(const std::string& problem, const std::vector<Curve>& curves);

/// Tables and plots under <dir>/reports; returns the written files.
std::vector<std::filesystem::path> write_reports(const Manifest& m, const std::filesystem::path& dir, bool tables,
                                                 bool plots);

/// Identity suite and solver refinement checks; prints one line per check.
bool verify(std::ostream& out, std::uint64_t seed = 0);

void list_problems(std::ostream& out, bool defaults);

}  // namespace pinnbo
