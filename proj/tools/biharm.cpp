// Command line driver. Each experiment subcommand starts from the built-in
// defaults, applies --config, then applies any flags given on the command
// line, and runs the experiment into --out.

#include <biharm/experiment.hpp>
#include <biharm/meshgen.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

using namespace biharm;

namespace {

struct Overrides {
  std::map<std::string, std::string> values;

  void add(CLI::App *app, const std::string &flag, const std::string &key, const std::string &help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string &v) { values[key] = v; },
                                          help);
  }
};

void add_global_flags(CLI::App *app, Overrides &o, std::optional<std::string> &config_path) {
  o.add(app, "--out", "out", "output directory");
  app->add_option("--config", config_path, "key = value config file");
  o.add(app, "--threads", "threads", "worker threads for sweeps");
  o.add(app, "--seed", "seed", "start vector seed");
  o.add(app, "--tol", "tol", "relative eigenvalue change that stops inverse iteration");
  o.add(app, "--residual-tol", "residual_tol", "residual required before stopping");
  o.add(app, "--max-iter", "max_iter", "inverse iteration cap");
  o.add(app, "--problem", "problem", "clamped | buckling");
  o.add(app, "--dump-matrices", "dump_matrices", "write the assembled blocks into this directory");
}

int run_configured(const std::string &experiment, const Overrides &o,
                   const std::optional<std::string> &config_path) {
  std::string out = o.values.count("out") ? o.values.at("out") : "out";
  try {
    ExperimentConfig config = ExperimentConfig::defaults(experiment);
    if (config_path) {
      const auto file = ExperimentConfig::load(*config_path);
      if (file.has("experiment") && file.get("experiment") != experiment)
        throw UsageError("config file is for experiment '" + file.get("experiment") + "'");
      config.merge(file);
    }
    for (const auto &[k, v] : o.values)
      config.set(k, v);
    out = config.get("out");
    const RunResult res = run_experiment(config);
    for (const auto &[name, ok] : res.invariants)
      std::printf("%-24s %s\n", name.c_str(), ok ? "pass" : "FAIL");
    std::printf("output: %s\n", out.c_str());
    return res.ok() ? 0 : 4;
  } catch (const std::exception &e) {
    write_error_record(out, e);
    std::fprintf(stderr, "error: %s: %s\n", error_kind(e), e.what());
    return exit_code_for(e);
  }
}

int run_mesh(const std::map<std::string, std::string> &v, const std::string &path) {
  try {
    auto num = [&](const std::string &key, double fallback) {
      auto it = v.find(key);
      return it == v.end() ? fallback : detail::to_double(key, it->second);
    };
    const std::string domain = v.count("domain") ? v.at("domain") : "square";
    Mesh m;
    if (domain == "square") {
      m = square_mesh(SquareSpec{num("h1", 0.1), num("rho1", 1e-7), num("h_max", 0.0)});
    } else if (domain == "sector") {
      const std::string variant = v.count("variant") ? v.at("variant") : "inner";
      m = sector_mesh(SectorSpec{num("theta_deg", 90.0) * std::numbers::pi / 180.0, num("h1", 0.1),
                                 num("rho1", 1e-6), parse_sector_variant(variant)});
    } else if (domain == "dumbbell") {
      m = dumbbell_mesh(DumbbellSpec{num("c", 1.0), static_cast<int>(num("nx", 64)),
                                     static_cast<int>(num("ny", 32))});
    } else {
      throw UsageError("unknown domain '" + domain + "'");
    }
    save_mesh(path, m);
    std::printf("%d vertices, %d triangles, %zu boundary edges -> %s\n", m.num_vertices(),
                m.num_triangles(), m.boundary_edges.size(), path.c_str());
    return 0;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s: %s\n", error_kind(e), e.what());
    return exit_code_for(e);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Biharmonic eigenvalues by mixed cubic finite elements"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::map<std::string, Overrides> subs;
  std::map<std::string, CLI::App *> apps;

  auto experiment = [&](const std::string &name, const std::string &exp, const std::string &help) {
    CLI::App *sub = app.add_subcommand(name, help);
    add_global_flags(sub, subs[exp], config_path);
    apps[exp] = sub;
    return sub;
  };

  auto *exp_cmd = experiment("exponent", "exponent", "corner exponents and oscillation ratios");
  subs["exponent"].add(exp_cmd, "--theta-deg", "theta_deg", "angles in degrees: list or a:b:step");

  auto *sq = experiment("square", "square", "clamped unit square with corner analysis");
  subs["square"].add(sq, "--h1", "h1", "grading parameter");
  subs["square"].add(sq, "--rho1", "rho1", "radius of the uniform core");
  subs["square"].add(sq, "--h-max", "h_max", "element size cap away from the corner");

  auto *sec = experiment("sector", "sector_sweep", "inner/outer sector brackets");
  subs["sector_sweep"].add(sec, "--theta-deg", "theta_deg", "angles in degrees");
  subs["sector_sweep"].add(sec, "--h1", "h1", "grading parameters, one per level");
  subs["sector_sweep"].add(sec, "--rho1", "rho1", "radius of the uniform core");

  auto *db = experiment("dumbbell", "dumbbell_sweep", "parity sweep over dumbbell domains");
  subs["dumbbell_sweep"].add(db, "--c", "c", "waist parameters");
  subs["dumbbell_sweep"].add(db, "--levels", "levels", "mesh levels NXxNY,...");

  auto *cv = experiment("converge", "converge", "eigenvalue convergence on the unit square");
  subs["converge"].add(cv, "--h1", "h1", "grading parameters, at least three");
  subs["converge"].add(cv, "--rho1", "rho1", "radius of the uniform core");
  subs["converge"].add(cv, "--h-max-ratio", "h_max_ratio", "h_max as a multiple of h1");

  CLI::App *mesh = app.add_subcommand("mesh", "write a mesh file");
  Overrides mesh_flags;
  std::string mesh_out = "mesh.txt";
  mesh->add_option("--out", mesh_out, "mesh file path");
  mesh_flags.add(mesh, "--domain", "domain", "square | sector | dumbbell");
  mesh_flags.add(mesh, "--theta-deg", "theta_deg", "sector angle in degrees");
  mesh_flags.add(mesh, "--h1", "h1", "grading parameter");
  mesh_flags.add(mesh, "--rho1", "rho1", "radius of the uniform core");
  mesh_flags.add(mesh, "--h-max", "h_max", "square: element size cap");
  mesh_flags.add(mesh, "--variant", "variant", "sector: inner | outer");
  mesh_flags.add(mesh, "--c", "c", "dumbbell waist parameter");
  mesh_flags.add(mesh, "--nx", "nx", "dumbbell columns");
  mesh_flags.add(mesh, "--ny", "ny", "dumbbell rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (mesh->parsed())
    return run_mesh(mesh_flags.values, mesh_out);
  for (const auto &[exp, sub] : apps)
    if (sub->parsed())
      return run_configured(exp, subs[exp], config_path);
  return 2;
}
