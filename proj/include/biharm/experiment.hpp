#pragma once

// Experiment driver: flat key = value configs, the five experiment runners
// and their CSV / manifest output.

#include <biharm/assembly.hpp>
#include <biharm/corner_asymptotics.hpp>
#include <biharm/eigensolver.hpp>
#include <biharm/error.hpp>
#include <biharm/meshgen.hpp>
#include <biharm/parallel.hpp>
#include <biharm/postprocess.hpp>

#include <Eigen/Core>
#include <umfpack.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace biharm {

inline constexpr const char *version = "0.1.0";

inline const std::vector<std::string> &experiment_names() {
  static const std::vector<std::string> names{"exponent", "square", "sector_sweep",
                                              "dumbbell_sweep", "converge"};
  return names;
}

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep))
    out.push_back(trim(item));
  return out;
}

inline double to_double(const std::string &key, const std::string &text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
      throw std::invalid_argument(text);
    return v;
  } catch (const std::exception &) {
    throw UsageError("config key '" + key + "': '" + text + "' is not a number");
  }
}

} // namespace detail

/// Flat key = value experiment description. Keys are kept as text so that a
/// config written out and read back is identical; typed accessors parse on
/// demand.
class ExperimentConfig {
public:
  static ExperimentConfig defaults(const std::string &experiment) {
    ExperimentConfig c;
    c.set("experiment", experiment);
    c.set("out", "out");
    c.set("threads", "1");
    c.set("seed", "1");
    c.set("tol", "1e-12");
    c.set("residual_tol", "1e-8");
    c.set("max_iter", "500");
    c.set("problem", "clamped");
    c.set("dump_matrices", "");
    if (experiment == "exponent") {
      c.set("theta_deg", "10:140:10");
    } else if (experiment == "square") {
      c.set("h1", "0.1");
      c.set("rho1", "1e-7");
      c.set("h_max", "0.03");
      c.set("r_max", "0.9");
      c.set("samples_per_decade", "40");
    } else if (experiment == "sector_sweep") {
      c.set("theta_deg", "60,90,120,147");
      c.set("h1", "0.2,0.14,0.1");
      c.set("rho1", "1e-6");
      c.set("r_max", "0.9");
      c.set("samples_per_decade", "40");
    } else if (experiment == "dumbbell_sweep") {
      c.set("c", "1.0,0.9,0.8,0.7,0.6,0.5,0.4,0.35,0.325,0.3,0.275,0.25,0.225,0.2,0.175,0.15,"
                 "0.125,0.1,0.075,0.05,0.025,0.01");
      c.set("levels", "40x20,48x24,56x28,64x32");
    } else if (experiment == "converge") {
      c.set("h1", "0.4,0.2,0.1");
      c.set("rho1", "1e-7");
      c.set("h_max_ratio", "0.3");
    } else {
      throw UsageError("unknown experiment '" + experiment + "'");
    }
    return c;
  }

  static ExperimentConfig parse(const std::string &text) {
    ExperimentConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos)
        line.erase(hash);
      line = detail::trim(line);
      if (line.empty())
        continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      if (key.empty())
        throw UsageError("config line " + std::to_string(lineno) + ": empty key");
      c.set(key, detail::trim(line.substr(eq + 1)));
    }
    return c;
  }

  static ExperimentConfig load(const std::string &path) {
    std::ifstream is(path);
    if (!is)
      throw UsageError("cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  /// Loads `path` on top of the defaults of its experiment.
  static ExperimentConfig load_with_defaults(const std::string &path) {
    const auto file = load(path);
    auto c = defaults(file.get("experiment"));
    c.merge(file);
    return c;
  }

  std::string serialize() const {
    std::string out;
    for (const auto &[k, v] : entries_)
      out += k + " = " + v + "\n";
    return out;
  }

  void save(const std::string &path) const {
    std::ofstream os(path);
    if (!os)
      throw UsageError("cannot write " + path);
    os << serialize();
  }

  void set(const std::string &key, const std::string &value) { entries_[key] = value; }
  void merge(const ExperimentConfig &other) {
    for (const auto &[k, v] : other.entries_)
      entries_[k] = v;
  }
  bool has(const std::string &key) const { return entries_.count(key) != 0; }

  const std::string &get(const std::string &key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw UsageError("config key '" + key + "' is missing");
    return it->second;
  }

  double number(const std::string &key) const { return detail::to_double(key, get(key)); }

  int integer(const std::string &key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      throw UsageError("config key '" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  /// Comma-separated numbers; an item "a:b:step" expands to a, a+step, ... <= b.
  std::vector<double> numbers(const std::string &key) const {
    std::vector<double> out;
    for (const auto &item : detail::split(get(key), ',')) {
      if (item.empty())
        continue;
      const auto parts = detail::split(item, ':');
      if (parts.size() == 1) {
        out.push_back(detail::to_double(key, parts[0]));
      } else if (parts.size() == 3) {
        const double a = detail::to_double(key, parts[0]), b = detail::to_double(key, parts[1]),
                     step = detail::to_double(key, parts[2]);
        if (!(step > 0.0) || b < a)
          throw UsageError("config key '" + key + "': bad range '" + item + "'");
        const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
        for (int k = 0; k <= n; ++k)
          out.push_back(a + k * step);
      } else {
        throw UsageError("config key '" + key + "': bad item '" + item + "'");
      }
    }
    if (out.empty())
      throw UsageError("config key '" + key + "' is empty");
    return out;
  }

  /// Items of the form "NXxNY".
  std::vector<std::pair<int, int>> grid_levels(const std::string &key) const {
    std::vector<std::pair<int, int>> out;
    for (const auto &item : detail::split(get(key), ',')) {
      const auto parts = detail::split(item, 'x');
      if (parts.size() != 2)
        throw UsageError("config key '" + key + "': expected NXxNY, got '" + item + "'");
      out.emplace_back(static_cast<int>(detail::to_double(key, parts[0])),
                       static_cast<int>(detail::to_double(key, parts[1])));
    }
    if (out.empty())
      throw UsageError("config key '" + key + "' is empty");
    return out;
  }

  std::string experiment() const { return get("experiment"); }

  SolverConfig solver() const {
    SolverConfig s;
    s.problem = parse_problem(get("problem"));
    s.tol = number("tol");
    s.residual_tol = number("residual_tol");
    s.max_iter = integer("max_iter");
    const double seed = number("seed");
    if (seed < 0 || seed != std::floor(seed))
      throw UsageError("seed must be a non-negative integer");
    s.seed = static_cast<std::uint64_t>(seed);
    validate_config(s);
    return s;
  }

  /// Checks that every key is known for the experiment and every value lies
  /// in the range the target module accepts.
  void validate() const {
    const auto ref = defaults(experiment());
    for (const auto &[k, v] : entries_)
      if (!ref.has(k))
        throw UsageError("config key '" + k + "' is not used by experiment " + experiment());
    for (const auto &[k, v] : ref.entries_)
      if (!has(k))
        throw UsageError("config key '" + k + "' is missing");
    solver();
    if (integer("threads") < 1)
      throw UsageError("threads must be at least 1");
    const std::string e = experiment();
    auto unit = [&](const std::string &key) {
      for (double v : numbers(key))
        if (!(v > 0.0 && v < 1.0))
          throw UsageError("config key '" + key + "' must lie in (0, 1)");
    };
    if (e == "exponent") {
      for (double t : numbers("theta_deg"))
        if (!(t > 0.0 && t < 180.0))
          throw UsageError("theta_deg must lie in (0, 180)");
    } else if (e == "square") {
      unit("h1");
      unit("rho1");
      if (!(number("h_max") >= 0.0))
        throw UsageError("h_max must be non-negative");
      if (!(number("r_max") > 0.0 && number("r_max") <= 1.0))
        throw UsageError("r_max must lie in (0, 1]");
      if (integer("samples_per_decade") < 1)
        throw UsageError("samples_per_decade must be positive");
    } else if (e == "sector_sweep") {
      for (double t : numbers("theta_deg"))
        if (!(t > 0.0 && t < 180.0))
          throw UsageError("theta_deg must lie in (0, 180)");
      unit("h1");
      unit("rho1");
      if (!(number("r_max") > 0.0 && number("r_max") <= 1.0))
        throw UsageError("r_max must lie in (0, 1]");
      if (integer("samples_per_decade") < 1)
        throw UsageError("samples_per_decade must be positive");
    } else if (e == "dumbbell_sweep") {
      for (double c : numbers("c"))
        if (!(c > 0.0))
          throw UsageError("c must be positive");
      for (auto [nx, ny] : grid_levels("levels"))
        if (nx < 4 || ny < 4 || nx % 2 || ny % 2)
          throw UsageError("dumbbell levels must be even and >= 4");
    } else if (e == "converge") {
      unit("h1");
      unit("rho1");
      if (numbers("h1").size() < 3)
        throw UsageError("converge needs at least 3 mesh levels");
      if (!(number("h_max_ratio") > 0.0))
        throw UsageError("h_max_ratio must be positive");
    }
  }

  const std::map<std::string, std::string> &entries() const { return entries_; }
  bool operator==(const ExperimentConfig &) const = default;

private:
  std::map<std::string, std::string> entries_;
};

/// Fixed-width scientific notation with 12 significant digits.
inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header)
      : os_(path) {
    if (!os_)
      throw UsageError("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i)
      os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }

  CsvWriter &num(double v) { return cell(csv_number(v)); }
  CsvWriter &integer(long long v) { return cell(std::to_string(v)); }
  CsvWriter &text(const std::string &s) { return cell(s); }
  void end() {
    os_ << '\n';
    first_ = true;
  }

private:
  CsvWriter &cell(const std::string &s) {
    os_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  std::ofstream os_;
  bool first_ = true;
};

struct RunResult {
  std::vector<std::string> files;
  std::vector<std::pair<std::string, bool>> invariants;

  void check(const std::string &name, bool ok) {
    for (auto &[n, v] : invariants)
      if (n == name) {
        v = v && ok;
        return;
      }
    invariants.emplace_back(name, ok);
  }
  bool ok() const {
    for (const auto &[n, v] : invariants)
      if (!v)
        return false;
    return true;
  }
};

inline void write_manifest(const std::filesystem::path &dir, const ExperimentConfig &config,
                           const RunResult &result) {
  std::ofstream os(dir / "manifest.txt");
  if (!os)
    throw UsageError("cannot write manifest in " + dir.string());
  os << "[run]\n";
  os << "status = " << (result.ok() ? "ok" : "invariant_failure") << "\n";
  os << "biharm = " << version << "\n";
  os << "eigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
     << EIGEN_MINOR_VERSION << "\n";
  os << "umfpack = " << UMFPACK_MAIN_VERSION << '.' << UMFPACK_SUB_VERSION << '.'
     << UMFPACK_SUBSUB_VERSION << "\n";
  os << "[config]\n" << config.serialize();
  os << "[invariants]\n";
  for (const auto &[n, v] : result.invariants)
    os << n << " = " << (v ? "pass" : "fail") << "\n";
  os << "[files]\n";
  for (const auto &f : result.files)
    os << f << "\n";
}

namespace detail {

inline std::filesystem::path prepare_out(const ExperimentConfig &config) {
  const std::filesystem::path dir = config.get("out");
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "manifest.txt");
  return dir;
}

inline bool rayleigh_monotone(const EigenPair &p) {
  for (std::size_t k = 1; k < p.history.size(); ++k)
    if (p.history[k] > p.history[k - 1] * (1.0 + 1e-12))
      return false;
  return true;
}

inline std::string theta_tag(double deg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", deg);
  return buf;
}

constexpr double degree = std::numbers::pi / 180.0;

/// One graded solve plus bisector analysis.
struct CornerRun {
  Index dofs = 0;
  Index triangles = 0;
  EigenPair pair;
  OscillationReport report;
};

inline CornerRun corner_run(Mesh mesh, const CornerExponent &exponent, double rho1, double r_max,
                            int per_decade, const SolverConfig &solver,
                            const std::string &dump_dir = {}) {
  const FunctionSpace space(std::move(mesh));
  const BlockSystem sys = assemble_system(space);
  if (!dump_dir.empty())
    dump_system(dump_dir, sys);
  const Factorization fac(sys);
  CornerRun run;
  run.dofs = 2 * sys.n_i + sys.n_d;
  run.triangles = space.mesh().num_triangles();
  run.pair = smallest_eigenpair(fac, rhs_operator(sys, solver.problem), solver);
  const BisectorRay ray(space, run.pair.u);
  const double r_min = 0.5 * rho1;
  const int n = bisector_sample_count(r_min, r_max, exponent.zero_ratio, per_decade);
  const auto profile = evaluate_on_bisector(ray, n, r_min, r_max);
  const auto zeros = find_zeros(profile, std::cref(ray));
  run.report = oscillation_report(zeros, find_extrema(profile, std::cref(ray), zeros), exponent);
  return run;
}

inline void write_zeros(const std::filesystem::path &path, const OscillationReport &rep) {
  CsvWriter w(path, {"n", "s_n", "r_n", "t_n"});
  const std::size_t n = std::max(rep.s.size(), rep.r.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < n; ++k) {
    w.integer(static_cast<long long>(k + 1))
        .num(k < rep.s.size() ? rep.s[k] : nan)
        .num(k < rep.r.size() ? rep.r[k] : nan)
        .num(k < rep.t.size() ? rep.t[k] : nan);
    w.end();
  }
}

inline void write_ratios(const std::filesystem::path &path, const OscillationReport &rep) {
  CsvWriter w(path, {"n", "s_ratio", "r_ratio", "t_ratio", "predicted_s_ratio",
                     "predicted_t_ratio"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = std::max(rep.s_ratio.size(), rep.r_ratio.size());
  for (std::size_t k = 0; k < n; ++k) {
    w.integer(static_cast<long long>(k + 1))
        .num(k < rep.s_ratio.size() ? rep.s_ratio[k] : nan)
        .num(k < rep.r_ratio.size() ? rep.r_ratio[k] : nan)
        .num(k < rep.t_ratio.size() ? rep.t_ratio[k] : nan)
        .num(rep.predicted_zero_ratio.value_or(nan))
        .num(rep.predicted_extremum_ratio.value_or(nan));
    w.end();
  }
}

} // namespace detail

inline RunResult run_exponent(const ExperimentConfig &config) {
  config.validate();
  const auto dir = detail::prepare_out(config);
  RunResult res;
  CsvWriter w(dir / "exponent.csv",
              {"theta_deg", "alpha", "beta", "zero_ratio", "extremum_value_ratio"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double deg : config.numbers("theta_deg")) {
    const auto e = solve_exponent(deg * detail::degree);
    w.num(deg).num(e.alpha).num(e.beta).num(e.zero_ratio.value_or(nan))
        .num(e.extremum_value_ratio.value_or(nan));
    w.end();
    res.check("root_residual", std::abs(corner::residual(e.root, e.theta)) < 1e-10 * std::abs(e.root));
  }
  res.files.push_back("exponent.csv");
  write_manifest(dir, config, res);
  return res;
}

inline RunResult run_square(const ExperimentConfig &config) {
  config.validate();
  const auto dir = detail::prepare_out(config);
  const auto solver = config.solver();
  const double rho1 = config.number("rho1");
  Mesh mesh = square_mesh(SquareSpec{config.number("h1"), rho1, config.number("h_max")});
  const auto exponent = solve_exponent(std::numbers::pi / 2);
  const auto run = detail::corner_run(std::move(mesh), exponent, rho1, config.number("r_max"),
                                      config.integer("samples_per_decade"), solver,
                                      config.get("dump_matrices"));
  RunResult res;
  {
    CsvWriter w(dir / "eigen.csv", {"problem", "lambda", "N", "triangles", "iterations",
                                    "residual", "converged"});
    w.text(to_string(solver.problem)).num(run.pair.lambda).integer(run.dofs)
        .integer(run.triangles).integer(run.pair.iterations).num(run.pair.residual)
        .integer(run.pair.converged);
    w.end();
  }
  detail::write_zeros(dir / "zeros.csv", run.report);
  detail::write_ratios(dir / "ratios.csv", run.report);
  res.files = {"eigen.csv", "zeros.csv", "ratios.csv"};
  res.check("converged", run.pair.converged);
  res.check("residual", run.pair.residual <= solver.residual_tol);
  res.check("rayleigh_monotone", detail::rayleigh_monotone(run.pair));
  res.check("zeros_interlace", run.report.interlaced());
  write_manifest(dir, config, res);
  return res;
}

struct SectorRow {
  double theta_deg = 0.0;
  double h1 = 0.0;
  detail::CornerRun inner, outer;
};

inline RunResult run_sector_sweep(const ExperimentConfig &config) {
  config.validate();
  const auto dir = detail::prepare_out(config);
  const auto solver = config.solver();
  const auto thetas = config.numbers("theta_deg");
  const auto h1s = config.numbers("h1");
  const double rho1 = config.number("rho1"), r_max = config.number("r_max");
  const int per_decade = config.integer("samples_per_decade");

  std::vector<CornerExponent> exps;
  for (double t : thetas)
    exps.push_back(solve_exponent(t * detail::degree));
  const std::size_t nl = h1s.size();
  std::vector<SectorRow> rows(thetas.size() * nl);
  parallel_for(rows.size() * 2, config.integer("threads"), [&](std::size_t task) {
    const std::size_t i = task / 2;
    const bool outer = task % 2;
    const std::size_t ti = i / nl, li = i % nl;
    SectorSpec spec{thetas[ti] * detail::degree, h1s[li], rho1,
                    outer ? SectorVariant::outer : SectorVariant::inner};
    auto run = detail::corner_run(sector_mesh(spec), exps[ti], rho1, r_max, per_decade, solver);
    rows[i].theta_deg = thetas[ti];
    rows[i].h1 = h1s[li];
    (outer ? rows[i].outer : rows[i].inner) = std::move(run);
  });

  RunResult res;
  CsvWriter w(dir / "sector_sweep.csv",
              {"theta_deg", "h1", "N_inner", "N_outer", "lambda_inner", "lambda_outer",
               "s1_inner", "s1_outer", "s2_inner", "s2_outer", "s_ratio_inner",
               "s_ratio_outer", "zeros_inner", "zeros_outer"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto at = [nan](const std::vector<double> &v, std::size_t k) { return k < v.size() ? v[k] : nan; };
  for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
    const std::string tag = detail::theta_tag(thetas[ti]);
    CsvWriter z(dir / ("zeros_theta" + tag + ".csv"),
                {"h1", "variant", "n", "s_n", "r_n", "t_n"});
    for (std::size_t li = 0; li < nl; ++li) {
      const auto &row = rows[ti * nl + li];
      const auto &a = row.inner.report, &b = row.outer.report;
      w.num(row.theta_deg).num(row.h1).integer(row.inner.dofs).integer(row.outer.dofs)
          .num(row.inner.pair.lambda).num(row.outer.pair.lambda)
          .num(at(a.s, 0)).num(at(b.s, 0)).num(at(a.s, 1)).num(at(b.s, 1))
          .num(at(a.s_ratio, 0)).num(at(b.s_ratio, 0))
          .integer(static_cast<long long>(a.s.size())).integer(static_cast<long long>(b.s.size()));
      w.end();
      for (const auto *run : {&row.inner, &row.outer}) {
        const auto &rep = run->report;
        for (std::size_t k = 0; k < std::max(rep.s.size(), rep.r.size()); ++k) {
          z.num(row.h1).text(run == &row.inner ? "inner" : "outer")
              .integer(static_cast<long long>(k + 1)).num(at(rep.s, k)).num(at(rep.r, k))
              .num(at(rep.t, k));
          z.end();
        }
        res.check("converged", run->pair.converged);
        res.check("residual", run->pair.residual <= solver.residual_tol);
        res.check("zeros_interlace", rep.interlaced());
      }
      res.check("min_max_bracket", row.inner.pair.lambda >= row.outer.pair.lambda);
      if (li > 0) {
        const auto &prev = rows[ti * nl + li - 1];
        const double wp = prev.inner.pair.lambda - prev.outer.pair.lambda;
        const double wc = row.inner.pair.lambda - row.outer.pair.lambda;
        res.check("bracket_shrinks", wc < wp);
        res.check("brackets_nest", row.inner.pair.lambda <= prev.inner.pair.lambda &&
                                       row.outer.pair.lambda >= prev.outer.pair.lambda);
      }
    }
    res.files.push_back("zeros_theta" + tag + ".csv");
  }
  res.files.insert(res.files.begin(), "sector_sweep.csv");
  write_manifest(dir, config, res);
  return res;
}

/// Percentage differences below this are reported as zero.
inline constexpr double discrepancy_floor_percent = 1e-8;

inline RunResult run_dumbbell_sweep(const ExperimentConfig &config) {
  config.validate();
  const auto dir = detail::prepare_out(config);
  const auto solver = config.solver();
  const auto cs = config.numbers("c");
  const auto levels = config.grid_levels("levels");
  const std::size_t nl = levels.size();

  std::vector<ParityRow> rows(cs.size() * nl);
  parallel_for(rows.size(), config.integer("threads"), [&](std::size_t i) {
    const auto [nx, ny] = levels[i % nl];
    rows[i] = parity_row(DumbbellSpec{cs[i / nl], nx, ny}, solver);
  });

  std::vector<ParityRow> finest;
  for (std::size_t ci = 0; ci < cs.size(); ++ci)
    finest.push_back(rows[ci * nl + nl - 1]);
  for (std::size_t i = 0; i + 1 < finest.size(); ++i)
    finest[i].crossing_next = crosses(finest[i], finest[i + 1]);

  RunResult res;
  {
    CsvWriter w(dir / "parity.csv", {"c", "lambda_even", "lambda_odd", "ratio", "N",
                                     "ground_parity", "parity_score_1", "parity_score_2",
                                     "crossing_next"});
    for (const auto &r : finest) {
      w.num(r.c).num(r.lambda_even).num(r.lambda_odd).num(r.ratio).integer(r.dofs)
          .text(r.degenerate ? "degenerate"
                           : r.ambiguous ? "indeterminate"
                                         : (r.ground_even ? "even" : "odd"))
          .num(r.first.score()).num(r.second.score()).integer(r.crossing_next);
      w.end();
    }
  }
  {
    CsvWriter w(dir / "discrepancy.csv", {"c", "N_coarse", "N_fine", "delta_percent"});
    for (std::size_t ci = 0; ci < cs.size(); ++ci) {
      double prev_delta = std::numeric_limits<double>::infinity();
      for (std::size_t li = 0; li + 1 < nl; ++li) {
        const auto &a = rows[ci * nl + li], &b = rows[ci * nl + li + 1];
        double delta = 100.0 * std::abs(b.ratio - a.ratio) / a.ratio;
        if (delta < discrepancy_floor_percent)
          delta = 0.0;
        w.num(cs[ci]).integer(a.dofs).integer(b.dofs).num(delta);
        w.end();
        res.check("discrepancy_decreases", delta == 0.0 || delta < prev_delta);
        prev_delta = delta;
      }
    }
  }
  for (const auto &r : rows) {
    res.check("converged", r.converged);
    res.check("parity_unambiguous", r.degenerate || !r.ambiguous);
  }
  res.files = {"parity.csv", "discrepancy.csv"};
  write_manifest(dir, config, res);
  return res;
}

struct ConvergeLevel {
  double h1 = 0.0;
  Index dofs = 0;
  double lambda = 0.0;
};

inline RunResult run_converge(const ExperimentConfig &config) {
  if (config.has("h1") && config.numbers("h1").size() < 3)
    throw UsageError("converge needs at least 3 mesh levels");
  config.validate();
  const auto dir = detail::prepare_out(config);
  const auto solver = config.solver();
  const auto h1s = config.numbers("h1");
  const double rho1 = config.number("rho1"), ratio = config.number("h_max_ratio");

  std::vector<ConvergeLevel> lv(h1s.size());
  parallel_for(lv.size(), config.integer("threads"), [&](std::size_t i) {
    const FunctionSpace space(square_mesh(SquareSpec{h1s[i], rho1, ratio * h1s[i]}));
    const BlockSystem sys = assemble_system(space);
    const Factorization fac(sys);
    const auto p = smallest_eigenpair(fac, rhs_operator(sys, solver.problem), solver);
    lv[i] = {h1s[i], 2 * sys.n_i + sys.n_d, p.lambda};
  });

  RunResult res;
  const double ref = lv.back().lambda;
  CsvWriter w(dir / "order.csv", {"h1", "N", "lambda", "diff_to_finest", "reduction"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const double d = std::abs(lv[i].lambda - ref);
    double red = nan;
    if (i + 2 < lv.size()) {
      const double dn = std::abs(lv[i + 1].lambda - ref);
      if (dn > 0.0)
        red = d / dn;
      res.check("reduction_factor", d == 0.0 || red >= 3.0);
    }
    w.num(lv[i].h1).integer(lv[i].dofs).num(lv[i].lambda).num(d).num(red);
    w.end();
  }
  res.files = {"order.csv"};
  write_manifest(dir, config, res);
  return res;
}

inline RunResult run_experiment(const ExperimentConfig &config) {
  const std::string e = config.experiment();
  if (e == "exponent")
    return run_exponent(config);
  if (e == "square")
    return run_square(config);
  if (e == "sector_sweep")
    return run_sector_sweep(config);
  if (e == "dumbbell_sweep")
    return run_dumbbell_sweep(config);
  if (e == "converge")
    return run_converge(config);
  throw UsageError("unknown experiment '" + e + "'");
}

/// Process exit code for an exception escaping a run.
inline int exit_code_for(const std::exception &e) {
  if (dynamic_cast<const InvariantViolation *>(&e))
    return 4;
  if (dynamic_cast<const NumericalError *>(&e))
    return 3;
  return 2;
}

inline const char *error_kind(const std::exception &e) {
  if (dynamic_cast<const AsymmetricMesh *>(&e))
    return "AsymmetricMesh";
  if (dynamic_cast<const InvariantViolation *>(&e))
    return "InvariantViolation";
  if (dynamic_cast<const NonConvergence *>(&e))
    return "NonConvergence";
  if (dynamic_cast<const NoOscillation *>(&e))
    return "NoOscillation";
  if (dynamic_cast<const SingularSystem *>(&e))
    return "SingularSystem";
  if (dynamic_cast<const QuadratureError *>(&e))
    return "QuadratureError";
  if (dynamic_cast<const PointLocationFailure *>(&e))
    return "PointLocationFailure";
  if (dynamic_cast<const NumericalError *>(&e))
    return "NumericalError";
  if (dynamic_cast<const InvalidSpec *>(&e))
    return "InvalidSpec";
  if (dynamic_cast<const DegenerateDomain *>(&e))
    return "DegenerateDomain";
  if (dynamic_cast<const MeshTooLarge *>(&e))
    return "MeshTooLarge";
  if (dynamic_cast<const UsageError *>(&e))
    return "UsageError";
  return "Error";
}

/// Writes error.txt ("kind = ...", "exit_code = ...", "message = ...").
inline void write_error_record(const std::filesystem::path &dir, const std::exception &e) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream os(dir / "error.txt");
  std::string msg = e.what();
  for (auto &ch : msg)
    if (ch == '\n')
      ch = ' ';
  os << "kind = " << error_kind(e) << "\nexit_code = " << exit_code_for(e)
     << "\nmessage = " << msg << "\n";
}

} // namespace biharm
