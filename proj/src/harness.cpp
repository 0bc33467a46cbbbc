#include "pinnbo/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace pinnbo {

namespace fs = std::filesystem;

namespace {

// shortest text that reads back to the same double
std::string num(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

template <class T>
struct Knob {
  const char* key;
  std::function<std::string(const T&)> get;
  std::function<void(T&, const std::string&)> set;
};

#define KNOB_D(T, name, field) \
  Knob<T> { name, [](const T& c) { return num(c.field); }, [](T& c, const std::string& v) { c.field = to_double(name, v); } }
#define KNOB_I(T, name, field)                                                  \
  Knob<T> {                                                                     \
    name, [](const T& c) { return std::to_string(c.field); },                   \
        [](T& c, const std::string& v) { c.field = to_int(name, v); }           \
  }

const std::vector<Knob<PinnBoConfig>>& pinn_knobs() {
  using C = PinnBoConfig;
  static const std::vector<Knob<C>> knobs = {
      KNOB_I(C, "n_r", n_r),
      KNOB_I(C, "candidates", candidates.uniform),
      KNOB_I(C, "local_candidates", candidates.local),
      KNOB_D(C, "local_sigma", candidates.local_sigma),
      KNOB_I(C, "retrain_every", retrain_every),
      KNOB_I(C, "epochs", epochs_per_retrain),
      KNOB_I(C, "width", surrogate.width),
      KNOB_I(C, "depth", surrogate.depth),
      Knob<C>{"activation", [](const C& c) { return to_string(c.surrogate.activation); },
              [](C& c, const std::string& v) {
                try {
                  c.surrogate.activation = parse_activation(v);
                } catch (const std::invalid_argument& e) {
                  throw ConfigError(e.what());
                }
              }},
      KNOB_D(C, "map_lo", surrogate.map_lo),
      KNOB_D(C, "map_hi", surrogate.map_hi),
      KNOB_D(C, "lr", opt.lr),
      KNOB_D(C, "lr_decay", opt.lr_decay),
      KNOB_D(C, "step_factor", step_factor),
      Knob<C>{"scale_targets", [](const C& c) { return std::string(c.scale_targets ? "1" : "0"); },
              [](C& c, const std::string& v) { c.scale_targets = to_bool("scale_targets", v); }},
      KNOB_D(C, "r1", analysis.r1),
      KNOB_D(C, "r2", analysis.r2),
      KNOB_D(C, "lambda1", analysis.lambda1),
      KNOB_D(C, "lambda2", analysis.lambda2),
      KNOB_D(C, "delta", analysis.delta),
      KNOB_D(C, "rkhs_bound", analysis.rkhs_bound),
      KNOB_D(C, "c_r", analysis.c_r),
      KNOB_D(C, "nu_min", analysis.nu_min),
  };
  return knobs;
}

const std::vector<Knob<GpBoConfig>>& gp_knobs() {
  using C = GpBoConfig;
  static const std::vector<Knob<C>> knobs = {
      KNOB_I(C, "candidates", candidates.uniform),
      KNOB_I(C, "local_candidates", candidates.local),
      KNOB_D(C, "local_sigma", candidates.local_sigma),
      KNOB_D(C, "delta", delta),
  };
  return knobs;
}

const std::vector<Knob<ProblemOptions>>& problem_knobs() {
  using C = ProblemOptions;
  static const std::vector<Knob<C>> knobs = {
      KNOB_I(C, "dim", dim),
      KNOB_I(C, "heat_n", heat_n),
      KNOB_I(C, "beam_n", beam_n),
      KNOB_I(C, "michalewicz_m", michalewicz_m),
      KNOB_D(C, "noise_fraction", noise_fraction),
      KNOB_D(C, "pde_noise_std", pde_noise_std),
      Knob<C>{"range_samples", [](const C& c) { return std::to_string(c.range_samples); },
              [](C& c, const std::string& v) { c.range_samples = to_long("range_samples", v); }},
  };
  return knobs;
}

#undef KNOB_D
#undef KNOB_I

constexpr double kDefaultPerturb = 0.1;

template <class T>
void apply(T& target, const std::vector<Knob<T>>& knobs, const Section& section, const std::string& name,
           const std::vector<std::string>& extra = {}) {
  for (const auto& [key, value] : section) {
    if (std::find(extra.begin(), extra.end(), key) != extra.end()) continue;
    auto it = std::find_if(knobs.begin(), knobs.end(), [&](const Knob<T>& k) { return key == k.key; });
    if (it == knobs.end()) throw ConfigError("config: unknown key '" + key + "' in [" + name + "]");
    it->set(target, value);
  }
}

const Section& section_of(const ExperimentConfig& cfg, const std::string& name) {
  static const Section empty;
  auto it = cfg.overrides.find(name);
  return it == cfg.overrides.end() ? empty : it->second;
}

}  // namespace

std::vector<std::string> method_names() { return {"pinn_bo", "neural_greedy", "gp_ei", "gp_ucb", "random_search"}; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const std::string t = trim(text);
  const auto dots = t.find("..");
  std::vector<std::uint64_t> out;
  if (dots != std::string::npos) {
    const long a = to_long("seeds", trim(t.substr(0, dots)));
    const long b = to_long("seeds", trim(t.substr(dots + 2)));
    if (a < 0 || b < a) throw ConfigError("config: bad seed range '" + text + "'");
    for (long s = a; s <= b; ++s) out.push_back(static_cast<std::uint64_t>(s));
  } else {
    for (const auto& item : split_list(t)) {
      const long s = to_long("seeds", item);
      if (s < 0) throw ConfigError("config: negative seed");
      out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (out.empty()) throw ConfigError("config: empty seed list");
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  const auto methods = method_names();
  for (const auto& [name, sec] : tree) {
    if (sec.empty()) throw ConfigError("config: key '" + name + "' outside a section");
    if (name == "experiment") {
      for (const auto& [key, node] : sec) {
        const std::string v = trim(node.data());
        if (key == "problems") {
          cfg.problems = split_list(v);
        } else if (key == "methods") {
          cfg.methods = split_list(v);
        } else if (key == "seeds") {
          cfg.seeds = parse_seeds(v);
        } else if (key == "budget") {
          cfg.budget = to_int(key, v);
        } else if (key == "init_points") {
          cfg.init_points = to_int(key, v);
        } else if (key == "workers") {
          cfg.workers = to_int(key, v);
        } else if (key == "out") {
          cfg.out_dir = v;
        } else {
          throw ConfigError("config: unknown key '" + key + "' in [experiment]");
        }
      }
    } else if (name == "problems" || std::find(methods.begin(), methods.end(), name) != methods.end()) {
      for (const auto& [key, node] : sec) cfg.overrides[name][key] = trim(node.data());
    } else {
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_config(in);
}

void ExperimentConfig::validate() const {
  if (problems.empty()) throw ConfigError("config: no problems");
  if (methods.empty()) throw ConfigError("config: no methods");
  if (seeds.empty()) throw ConfigError("config: no seeds");
  if (budget < 1) throw ConfigError("config: budget must be at least 1");
  if (workers < 0) throw ConfigError("config: workers must be non-negative");
  const auto known = problem_names();
  for (const auto& p : problems) {
    if (std::find(known.begin(), known.end(), p) == known.end()) throw ConfigError("config: unknown problem '" + p + "'");
  }
  const auto all = method_names();
  for (const auto& m : methods) {
    if (std::find(all.begin(), all.end(), m) == all.end()) throw ConfigError("config: unknown method '" + m + "'");
  }
  // surface bad override keys and values before anything runs
  problem_options(*this);
  try {
    for (const auto& m : all) {
      if (m == "pinn_bo" || m == "neural_greedy") pinn_bo_config(*this, m, 0).validate();
      if (m == "gp_ei" || m == "gp_ucb") gp_config(*this, m, 0);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  perturb_fraction(*this);
  if (!section_of(*this, "random_search").empty()) throw ConfigError("config: [random_search] takes no keys");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  auto join = [&](const auto& items) {
    std::string s;
    for (const auto& i : items) {
      if (!s.empty()) s += ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(i)>, std::string>) {
        s += i;
      } else {
        s += std::to_string(i);
      }
    }
    return s;
  };
  os << "budget=" << budget << '\n';
  os << "init_points=" << init_points << '\n';
  os << "methods=" << join(methods) << '\n';
  os << "problems=" << join(problems) << '\n';
  os << "seeds=" << join(seeds) << '\n';
  for (const auto& [sec, kv] : overrides) {
    for (const auto& [k, v] : kv) os << sec << '.' << k << '=' << v << '\n';
  }
  return os.str();
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

ProblemOptions problem_options(const ExperimentConfig& cfg) {
  ProblemOptions po;
  apply(po, problem_knobs(), section_of(cfg, "problems"), "problems");
  return po;
}

PinnBoConfig pinn_bo_config(const ExperimentConfig& cfg, const std::string& method, std::uint64_t seed) {
  PinnBoConfig pc;
  pc.budget = cfg.budget;
  pc.init_points = cfg.init_points;
  pc.seed = seed;
  // neural_greedy shares the PINN-BO surrogate and schedule, then its own keys
  apply(pc, pinn_knobs(), section_of(cfg, "pinn_bo"), "pinn_bo");
  if (method == "neural_greedy") apply(pc, pinn_knobs(), section_of(cfg, "neural_greedy"), method, {"perturb_fraction"});
  return pc;
}

GpBoConfig gp_config(const ExperimentConfig& cfg, const std::string& method, std::uint64_t seed) {
  GpBoConfig gc;
  gc.budget = cfg.budget;
  gc.init_points = cfg.init_points;
  gc.seed = seed;
  apply(gc, gp_knobs(), section_of(cfg, method), method);
  return gc;
}

double perturb_fraction(const ExperimentConfig& cfg) {
  const Section& s = section_of(cfg, "neural_greedy");
  auto it = s.find("perturb_fraction");
  if (it == s.end()) return kDefaultPerturb;
  const double v = to_double("perturb_fraction", it->second);
  if (!(v >= 0.0)) throw ConfigError("config: perturb_fraction must be non-negative");
  return v;
}

RunRecord run_cell(const ExperimentConfig& cfg, const Problem& problem, const std::string& method, std::uint64_t seed) {
  if (method == "pinn_bo") return pinn_bo_run(problem, pinn_bo_config(cfg, method, seed));
  if (method == "neural_greedy") {
    return neural_greedy_run(problem, pinn_bo_config(cfg, method, seed), perturb_fraction(cfg));
  }
  if (method == "gp_ei") return gp_ei_run(problem, gp_config(cfg, method, seed));
  if (method == "gp_ucb") return gp_ucb_run(problem, gp_config(cfg, method, seed));
  if (method == "random_search") return random_search_run(problem, cfg.budget, seed, cfg.init_points);
  throw ConfigError("unknown method '" + method + "'");
}

// ---------------------------------------------------------------------------
// records

namespace {

constexpr const char* kRecordMagic = "pinnbo-run 1";
constexpr const char* kManifestMagic = "pinnbo-manifest 1";

double at_or_nan(const std::vector<double>& v, std::size_t i) {
  return i < v.size() ? v[i] : std::numeric_limits<double>::quiet_NaN();
}

double parse_num(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("record: bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_record(const RunRecord& rec) {
  std::ostringstream os;
  os << kRecordMagic << '\n';
  os << "method " << rec.method << '\n';
  os << "problem " << rec.problem << '\n';
  os << "seed " << rec.seed << '\n';
  os << "dim " << rec.dim << '\n';
  os << "expensive_calls " << rec.expensive_calls << '\n';
  os << "pde_calls " << rec.pde_calls << '\n';
  os << "i0 " << num(rec.diagnostics.i0) << '\n';
  os << "omega_norm_max " << num(rec.diagnostics.omega_norm_max) << '\n';
  for (const auto& [k, v] : rec.config) os << "config " << k << ' ' << v << '\n';
  os << "columns t";
  for (int i = 1; i <= rec.dim; ++i) os << " x" << i;
  os << " y best_y incumbent_f regret nu gamma interaction sigma\n";
  os << "rows " << rec.rows.size() << '\n';
  for (std::size_t r = 0; r < rec.rows.size(); ++r) {
    const IterationRow& row = rec.rows[r];
    os << row.t;
    for (Index i = 0; i < row.x.size(); ++i) os << ' ' << num(row.x[i]);
    os << ' ' << num(row.y) << ' ' << num(row.best_y) << ' ' << num(row.incumbent_f) << ' ' << num(row.regret) << ' '
       << num(row.nu) << ' ' << num(row.gamma) << ' ' << num(row.interaction) << ' '
       << num(at_or_nan(rec.diagnostics.sigma, r)) << '\n';
  }
  return os.str();
}

RunRecord parse_record(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordMagic) throw std::runtime_error("record: missing header");
  RunRecord rec;
  long rows = -1;
  while (rows < 0 && std::getline(in, line)) {
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "method") {
      rec.method = rest;
    } else if (key == "problem") {
      rec.problem = rest;
    } else if (key == "seed") {
      rec.seed = std::stoull(rest);
    } else if (key == "dim") {
      rec.dim = std::stoi(rest);
    } else if (key == "expensive_calls") {
      rec.expensive_calls = std::stol(rest);
    } else if (key == "pde_calls") {
      rec.pde_calls = std::stol(rest);
    } else if (key == "i0") {
      rec.diagnostics.i0 = parse_num(rest);
    } else if (key == "omega_norm_max") {
      rec.diagnostics.omega_norm_max = parse_num(rest);
    } else if (key == "config") {
      const auto sp2 = rest.find(' ');
      rec.config[rest.substr(0, sp2)] = sp2 == std::string::npos ? "" : rest.substr(sp2 + 1);
    } else if (key == "columns") {
      continue;
    } else if (key == "rows") {
      rows = std::stol(rest);
    } else {
      throw std::runtime_error("record: unexpected line '" + line + "'");
    }
  }
  if (rows < 0) throw std::runtime_error("record: missing rows");
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error("record: truncated");
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string tok;
    while (ls >> tok) f.push_back(tok);
    if (static_cast<int>(f.size()) != 1 + rec.dim + 8) throw std::runtime_error("record: bad row width");
    IterationRow row;
    row.t = std::stoi(f[0]);
    row.x.resize(rec.dim);
    for (int i = 0; i < rec.dim; ++i) row.x[i] = parse_num(f[static_cast<std::size_t>(1 + i)]);
    std::size_t k = static_cast<std::size_t>(1 + rec.dim);
    row.y = parse_num(f[k++]);
    row.best_y = parse_num(f[k++]);
    row.incumbent_f = parse_num(f[k++]);
    row.regret = parse_num(f[k++]);
    row.nu = parse_num(f[k++]);
    row.gamma = parse_num(f[k++]);
    row.interaction = parse_num(f[k++]);
    const double sigma = parse_num(f[k++]);
    if (!std::isnan(row.nu)) {
      rec.diagnostics.nu.push_back(row.nu);
      rec.diagnostics.gamma.push_back(row.gamma);
      rec.diagnostics.interaction.push_back(row.interaction);
    }
    if (!std::isnan(sigma)) rec.diagnostics.sigma.push_back(sigma);
    rec.rows.push_back(std::move(row));
  }
  return rec;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// manifest

bool Manifest::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.ok; });
}

std::string format_manifest(const Manifest& m) {
  std::ostringstream os;
  os << kManifestMagic << '\n';
  os << "hash " << m.hash << '\n';
  os << "config-begin\n" << m.config << "config-end\n";
  for (const auto& c : m.cells) {
    std::string err = c.error;
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << "cell " << c.problem << ' ' << c.method << ' ' << c.seed << ' ' << (c.ok ? "ok" : "failed") << ' '
       << (c.record.empty() ? "-" : c.record);
    if (!c.ok) os << ' ' << err;
    os << '\n';
  }
  return os.str();
}

Manifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kManifestMagic) throw std::runtime_error("manifest: missing header");
  Manifest m;
  bool in_config = false;
  while (std::getline(in, line)) {
    if (in_config) {
      if (line == "config-end") {
        in_config = false;
      } else {
        m.config += line + '\n';
      }
      continue;
    }
    if (line == "config-begin") {
      in_config = true;
    } else if (line.rfind("hash ", 0) == 0) {
      m.hash = line.substr(5);
    } else if (line.rfind("cell ", 0) == 0) {
      std::istringstream ls(line.substr(5));
      Cell c;
      std::string status;
      ls >> c.problem >> c.method >> c.seed >> status >> c.record;
      if (!ls) throw std::runtime_error("manifest: bad cell line '" + line + "'");
      c.ok = status == "ok";
      if (c.record == "-") c.record.clear();
      std::getline(ls, c.error);
      c.error = trim(c.error);
      m.cells.push_back(std::move(c));
    } else if (!line.empty()) {
      throw std::runtime_error("manifest: unexpected line '" + line + "'");
    }
  }
  if (in_config) throw std::runtime_error("manifest: unterminated config block");
  return m;
}

Manifest run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const fs::path root = cfg.root();
  fs::create_directories(root);

  Manifest m;
  m.hash = cfg.hash();
  m.config = cfg.canonical();
  for (const auto& p : cfg.problems) {
    for (const auto& meth : cfg.methods) {
      for (auto s : cfg.seeds) {
        Cell c;
        c.problem = p;
        c.method = meth;
        c.seed = s;
        c.record = (fs::path(p) / meth / ("seed" + std::to_string(s) + ".run")).generic_string();
        m.cells.push_back(std::move(c));
      }
    }
  }

  const ProblemOptions po = problem_options(cfg);
  std::map<std::string, std::shared_ptr<const Problem>> problems;
  std::map<std::string, std::string> problem_errors;
  for (const auto& p : cfg.problems) {
    try {
      problems[p] = std::make_shared<const Problem>(make_problem(p, po));
    } catch (const std::exception& e) {
      problem_errors[p] = e.what();
    }
  }

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < m.cells.size(); i = next++) {
      Cell& c = m.cells[i];
      try {
        auto it = problems.find(c.problem);
        if (it == problems.end()) throw std::runtime_error(problem_errors[c.problem]);
        const RunRecord rec = run_cell(cfg, *it->second, c.method, c.seed);
        const fs::path path = root / c.record;
        write_atomic(path, format_record(rec));
        fs::path timing = path;
        timing.replace_extension(".timing");
        write_atomic(timing, "wall_seconds " + num(rec.wall_seconds) + "\n");
        c.ok = true;
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
        c.record.clear();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << (c.ok ? "ok     " : "FAILED ") << c.problem << ' ' << c.method << " seed " << c.seed;
        if (!c.ok) *log << ": " << c.error;
        *log << '\n';
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::min<std::size_t>(cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw, m.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  write_atomic(root / "manifest.txt", format_manifest(m));
  return m;
}

// ---------------------------------------------------------------------------
// reports

std::vector<Curve> aggregate(const Manifest& m, const fs::path& dir) {
  std::vector<Curve> curves;
  std::map<std::pair<std::string, std::string>, std::vector<RunRecord>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& c : m.cells) {
    if (!c.ok) continue;
    const auto key = std::make_pair(c.problem, c.method);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(parse_record(read_file(dir / c.record)));
  }
  if (order.empty()) throw std::runtime_error("aggregate: no complete cells");
  for (const auto& key : order) {
    const auto& runs = groups[key];
    const std::size_t t = runs.front().rows.size();
    for (const auto& r : runs) {
      if (r.rows.size() != t) throw std::runtime_error("aggregate: mismatched budgets for " + key.first + "/" + key.second);
    }
    Curve cv;
    cv.problem = key.first;
    cv.method = key.second;
    cv.seeds = static_cast<int>(runs.size());
    const double n = static_cast<double>(runs.size());
    auto stats = [&](auto field, std::vector<double>& mean, std::vector<double>& se) {
      for (std::size_t i = 0; i < t; ++i) {
        double s = 0.0;
        for (const auto& r : runs) s += field(r.rows[i]);
        const double mu = s / n;
        double ss = 0.0;
        for (const auto& r : runs) ss += (field(r.rows[i]) - mu) * (field(r.rows[i]) - mu);
        mean.push_back(mu);
        se.push_back(runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0);
      }
    };
    stats([](const IterationRow& r) { return r.best_y; }, cv.mean, cv.stderr_);
    stats([](const IterationRow& r) { return r.regret; }, cv.regret_mean, cv.regret_stderr);
    curves.push_back(std::move(cv));
  }
  return curves;
}

std::string format_table(const std::vector<Curve>& curves) {
  std::ostringstream os;
  os << "problem\tmethod\tt\tseeds\tbest_mean\tbest_stderr\tregret_mean\tregret_stderr\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      os << c.problem << '\t' << c.method << '\t' << (i + 1) << '\t' << c.seeds << '\t' << num(c.mean[i]) << '\t'
         << num(c.stderr_[i]) << '\t' << num(c.regret_mean[i]) << '\t' << num(c.regret_stderr[i]) << '\n';
    }
  }
  return os.str();
}

namespace {

std::string fmt(double v, int prec = 2) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::string& problem, const std::vector<Curve>& curves) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr double w = 640, h = 420, ml = 70, mr = 160, mt = 40, mb = 50;
  const double pw = w - ml - mr;
  const double ph = h - mt - mb;

  std::vector<const Curve*> mine;
  for (const auto& c : curves) {
    if (c.problem == problem) mine.push_back(&c);
  }
  std::size_t t_max = 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Curve* c : mine) {
    t_max = std::max(t_max, c->mean.size());
    for (std::size_t i = 0; i < c->mean.size(); ++i) {
      lo = std::min(lo, c->mean[i] - c->stderr_[i]);
      hi = std::max(hi, c->mean[i] + c->stderr_[i]);
    }
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](double t) { return ml + (t_max > 1 ? (t - 1.0) / static_cast<double>(t_max - 1) : 0.5) * pw; };
  auto py = [&](double v) { return mt + (hi - v) / (hi - lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << problem << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = py(v);
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << fmt(y) << "\" x2=\"" << ml + pw << "\" y2=\"" << fmt(y)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
    const double t = 1.0 + (static_cast<double>(t_max) - 1.0) * k / 4.0;
    os << "<text x=\"" << fmt(px(t)) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
       << static_cast<long>(std::lround(t)) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">iteration</text>\n";
  os << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
     << ")\">best observed y</text>\n";

  for (std::size_t k = 0; k < mine.size(); ++k) {
    const Curve& c = *mine[k];
    const char* color = palette[k % std::size(palette)];
    const std::size_t n = c.mean.size();
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < n; ++i) os << fmt(px(i + 1.0)) << ',' << fmt(py(c.mean[i] + c.stderr_[i])) << ' ';
    for (std::size_t i = n; i-- > 0;) os << fmt(px(i + 1.0)) << ',' << fmt(py(c.mean[i] - c.stderr_[i])) << ' ';
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) os << fmt(px(i + 1.0)) << ',' << fmt(py(c.mean[i])) << ' ';
    os << "\"/>\n";
    const double ly = mt + 16 + 20.0 * static_cast<double>(k);
    os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 36 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4 << "\">" << c.method << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<fs::path> write_reports(const Manifest& m, const fs::path& dir, bool tables, bool plots) {
  const std::vector<Curve> curves = aggregate(m, dir);
  const fs::path reports = dir / "reports";
  std::vector<fs::path> written;
  if (tables) {
    write_atomic(reports / "summary.tsv", format_table(curves));
    written.push_back(reports / "summary.tsv");
  }
  if (plots) {
    std::vector<std::string> seen;
    for (const auto& c : curves) {
      if (std::find(seen.begin(), seen.end(), c.problem) != seen.end()) continue;
      seen.push_back(c.problem);
      const fs::path p = reports / (c.problem + ".svg");
      write_atomic(p, render_svg(c.problem, curves));
      written.push_back(p);
    }
  }
  return written;
}

// ---------------------------------------------------------------------------
// verify and listing

namespace {

double harmonic(double x, double y) { return std::exp(0.5 * x) * std::sin(0.5 * y); }

std::vector<double> heat_errors() {
  HeatBoundary bc{[](double s) { return harmonic(s, 0.0); }, [](double s) { return harmonic(s, kHeatLength); },
                  [](double s) { return harmonic(0.0, s); }, [](double s) { return harmonic(kHeatLength, s); }};
  std::vector<double> errs;
  for (int n : {17, 33, 65, 129}) {
    const GridField g = solve_laplace(bc, n);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) e = std::max(e, std::abs(g.values(i, j) - harmonic(i * g.h, j * g.h)));
    }
    errs.push_back(e);
  }
  return errs;
}

std::vector<double> beam_errors() {
  constexpr double pi = std::numbers::pi;
  // w = sin(pi x) with EI = 1 + x / 2
  BeamSpec spec{[](double x) { return 1.0 / (1.0 + 0.5 * x); },
                [](double x) {
                  return std::pow(pi, 4) * (1.0 + 0.5 * x) * std::sin(pi * x) - std::pow(pi, 3) * std::cos(pi * x);
                }};
  std::vector<double> errs;
  for (int n : {33, 65, 129, 257}) {
    const BeamSolution b = solve_beam(n, spec);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(b.w[i] - std::sin(pi * i * b.h)));
    errs.push_back(e);
  }
  return errs;
}

bool slopes_ok(std::ostream& out, const std::string& name, const std::vector<double>& errs) {
  bool ok = true;
  out << name << " errors";
  for (double e : errs) out << ' ' << tick_label(e);
  out << " slopes";
  for (std::size_t k = 1; k < errs.size(); ++k) {
    const double s = std::log2(errs[k - 1] / errs[k]);
    ok = ok && s >= 1.8 && s <= 2.2;
    out << ' ' << fmt(s, 3);
  }
  out << (ok ? "  ok\n" : "  FAILED\n");
  return ok;
}

}  // namespace

bool verify(std::ostream& out, std::uint64_t seed) {
  bool all = true;
  Rng rng = make_rng(seed, 0x7e51f1);
  double worst[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < 50; ++k) {
    const Index t = 1 + static_cast<Index>(rng() % 12);
    const Index nr = 1 + static_cast<Index>(rng() % 12);
    const Index p = t + nr + static_cast<Index>(rng() % 16);
    Mat phi(t, p);
    Mat omega(nr, p);
    for (Index i = 0; i < phi.size(); ++i) phi.data()[i] = normal_draw(rng);
    for (Index i = 0; i < omega.size(); ++i) omega.data()[i] = normal_draw(rng);
    const IdentityReport r = identity_suite(FeatureBank(phi, omega), 0.5 + std::uniform_real_distribution<>(0, 1)(rng),
                                            0.5 + std::uniform_real_distribution<>(0, 1)(rng), rng);
    worst[0] = std::max(worst[0], r.woodbury);
    worst[1] = std::max(worst[1], r.det_ratio);
    worst[2] = std::max(worst[2], r.det_ratio_corollary);
  }
  const char* names[] = {"woodbury identity", "determinant ratio", "determinant ratio corollary"};
  for (int i = 0; i < 3; ++i) {
    const bool ok = worst[i] <= 1e-8;
    all = all && ok;
    out << names[i] << " max discrepancy " << tick_label(worst[i]) << (ok ? "  ok\n" : "  FAILED\n");
  }
  all = slopes_ok(out, "heat refinement", heat_errors()) && all;
  all = slopes_ok(out, "beam refinement", beam_errors()) && all;
  const BeamSolution u = solve_beam(257, BeamSpec::uniform(1.0, 1.0));
  const double mid = u.w[128];
  const bool mid_ok = std::abs(mid - 5.0 / 384.0) <= 2e-4 * (5.0 / 384.0);
  all = all && mid_ok;
  out << "uniform beam midspan " << num(mid) << " vs 5/384" << (mid_ok ? "  ok\n" : "  FAILED\n");
  return all;
}

void list_problems(std::ostream& out, bool defaults) {
  ProblemOptions po;
  po.range_samples = 20000;
  for (const auto& name : problem_names()) {
    const Problem p = make_problem(name, po);
    out << name << "  d=" << p.dim() << "  domain=";
    for (int i = 0; i < p.dim(); ++i) out << (i ? "x" : "") << '[' << tick_label(p.domain.lo[i]) << ',' << tick_label(p.domain.hi[i]) << ']';
    out << "  operator=" << p.op.name;
    if (p.f_star) out << "  f*=" << tick_label(*p.f_star);
    out << '\n';
  }
  if (!defaults) return;
  const ExperimentConfig ec;
  out << "\n[experiment]\n";
  out << "problems = dropwave\nmethods = pinn_bo, neural_greedy, random_search\nseeds = 0..9\n";
  out << "budget = " << ec.budget << "\ninit_points = " << ec.init_points << "  ; -1 means 5 d\n";
  out << "workers = 0  ; 0 means all cores\nout = out\n";
  out << "\n[problems]\n";
  const ProblemOptions dpo;
  for (const auto& k : problem_knobs()) out << k.key << " = " << k.get(dpo) << '\n';
  out << "\n[pinn_bo]\n";
  const PinnBoConfig pc;
  for (const auto& k : pinn_knobs()) out << k.key << " = " << k.get(pc) << '\n';
  out << "\n[neural_greedy]  ; [pinn_bo] keys apply first\nperturb_fraction = " << num(kDefaultPerturb) << '\n';
  const GpBoConfig gc;
  for (const char* m : {"gp_ei", "gp_ucb"}) {
    out << "\n[" << m << "]\n";
    for (const auto& k : gp_knobs()) out << k.key << " = " << k.get(gc) << '\n';
  }
  out << "\n[random_search]  ; no keys\n";
}

}  // namespace pinnbo
