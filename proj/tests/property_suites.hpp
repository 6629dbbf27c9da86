#pragma once

// Randomized property checks shared by the unit tests and the acceptance
// binary. Each suite draws `cases` random inputs from a seeded generator and
// reports how many of them violated the property.

#include <biharm/assembly.hpp>
#include <biharm/meshgen.hpp>
#include <biharm/postprocess.hpp>
#include <biharm/quadrature.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

namespace biharm::testing {

struct PropertyResult {
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  void record(bool ok, const std::string &what) {
    ++cases;
    if (!ok) {
      if (failures == 0)
        first_failure = what;
      ++failures;
    }
  }
  bool passed() const { return failures == 0; }
};

/// Exact integral of xi^a eta^b over the reference triangle.
inline double monomial_integral(int a, int b) {
  return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
}

/// Uniform square mesh with interior vertices randomly displaced.
inline Mesh jittered_square(int n, std::mt19937_64 &rng) {
  Mesh m = uniform_square_mesh(n);
  std::uniform_real_distribution<double> d(-0.2 / n, 0.2 / n);
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) {
      Point &p = m.vertices[j * (n + 1) + i];
      p += Point(d(rng), d(rng));
    }
  return m;
}

/// Small random mesh from one of the generators.
inline Mesh random_mesh(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (kind(rng)) {
  case 0:
    return jittered_square(1 + static_cast<int>(u(rng) * 4), rng);
  case 1: {
    SectorSpec s;
    s.theta = (20.0 + 150.0 * u(rng)) * std::numbers::pi / 180.0;
    s.h1 = 0.5 + 0.4 * u(rng);
    s.rho1 = 0.05 + 0.3 * u(rng);
    s.variant = u(rng) < 0.5 ? SectorVariant::inner : SectorVariant::outer;
    return sector_mesh(s);
  }
  default: {
    DumbbellSpec s;
    s.c = 0.05 + 1.5 * u(rng);
    s.nx = 4 + 2 * static_cast<int>(u(rng) * 3);
    s.ny = 4 + 2 * static_cast<int>(u(rng) * 2);
    return dumbbell_mesh(s);
  }
  }
}

inline PropertyResult quadrature_exactness(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PropertyResult res;
  for (int k = 0; k < cases; ++k) {
    double exact = 0.0, quad = 0.0;
    double coeffs[7][7] = {};
    for (int a = 0; a <= 6; ++a)
      for (int b = 0; a + b <= 6; ++b) {
        coeffs[a][b] = coef(rng);
        exact += coeffs[a][b] * monomial_integral(a, b);
      }
    for (const auto &q : triangle_rule_degree6) {
      double v = 0.0;
      for (int a = 0; a <= 6; ++a)
        for (int b = 0; a + b <= 6; ++b)
          v += coeffs[a][b] * std::pow(q.xi, a) * std::pow(q.eta, b);
      quad += 0.5 * q.weight * v;
    }
    res.record(std::abs(quad - exact) <= 1e-14, "case " + std::to_string(k));
  }
  return res;
}

inline bool dense_spd(const SparseMatrix &A) {
  const Eigen::MatrixXd D(A);
  if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-12 * D.cwiseAbs().maxCoeff())
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 1e-12 * es.eigenvalues().maxCoeff();
}

/// M, M_hat and K_hat are symmetric positive definite.
inline PropertyResult spd_blocks(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  for (int k = 0; k < cases; ++k) {
    const FunctionSpace space(random_mesh(rng));
    const BlockSystem sys = assemble_system(space);
    res.record(dense_spd(sys.M) && dense_spd(sys.M_hat) && dense_spd(sys.K_hat),
               "case " + std::to_string(k) + " (" + space.mesh().meta.family + ")");
  }
  return res;
}

/// The full stiffness matrix annihilates constants and nothing else.
inline PropertyResult stiffness_kernel(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PropertyResult res;
  for (int k = 0; k < cases; ++k) {
    const FunctionSpace space(random_mesh(rng));
    const SparseMatrix A = assemble_stiffness(space).full;
    const Vector ones = Vector::Ones(A.cols());
    const double scale = Eigen::MatrixXd(A).cwiseAbs().maxCoeff();
    const bool kills_constants = (A * ones).cwiseAbs().maxCoeff() <= 1e-12 * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A), Eigen::EigenvaluesOnly);
    const auto &ev = es.eigenvalues();
    const bool one_dim = std::abs(ev[0]) <= 1e-10 * ev[ev.size() - 1] &&
                         ev[1] > 1e-8 * ev[ev.size() - 1];
    res.record(kills_constants && one_dim,
               "case " + std::to_string(k) + " (" + space.mesh().meta.family + ")");
  }
  return res;
}

/// Profile of a synthetic corner-type oscillation r^alpha cos(beta log r + phi).
inline BisectorProfile synthetic_profile(const RadialField &f, double alpha, int n, double r_min,
                                         double r_max) {
  BisectorProfile p;
  const double q = std::pow(r_min / r_max, 1.0 / (n - 1));
  for (int k = 0; k < n; ++k) {
    const double r = r_max * std::pow(q, k);
    p.radii.push_back(r);
    p.values.push_back(f(r));
    p.element_trace.push_back(0);
    p.local_scale.push_back(std::pow(r, alpha));
  }
  return p;
}

/// Zeros and extrema of synthetic oscillations interlace, extremum values
/// alternate in sign, and zero spacing matches e^{pi / beta}.
inline PropertyResult interlacing(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PropertyResult res;
  for (int k = 0; k < cases; ++k) {
    const double alpha = 1.0 + 4.0 * u(rng);
    const double beta = 0.6 + 3.0 * u(rng);
    const double phi = 2.0 * std::numbers::pi * u(rng);
    const RadialField f = [=](double r) { return std::pow(r, alpha) * std::cos(beta * std::log(r) + phi); };
    const double r_min = 1e-6, r_max = 0.9;
    const double ratio = std::exp(std::numbers::pi / beta);
    const int n = bisector_sample_count(r_min, r_max, ratio);
    const auto profile = synthetic_profile(f, alpha, n, r_min, r_max);
    const auto zeros = find_zeros(profile, f);
    const auto ext = find_extrema(profile, f, zeros);
    CornerExponent e;
    e.beta = beta;
    e.alpha = alpha;
    e.zero_ratio = ratio;
    const auto rep = oscillation_report(zeros, ext, e);
    bool ok = rep.interlaced() && zeros.size() >= 2;
    for (double q : rep.s_ratio)
      ok = ok && std::abs(q / ratio - 1.0) < 1e-8;
    // Expected zero count: solutions of beta log r + phi = pi/2 + m pi in range.
    const double lo = beta * std::log(r_min) + phi, hi = beta * std::log(r_max) + phi;
    const int expected = static_cast<int>(std::floor((hi - 0.5 * std::numbers::pi) / std::numbers::pi) -
                                          std::floor((lo - 0.5 * std::numbers::pi) / std::numbers::pi));
    ok = ok && static_cast<int>(zeros.size()) == expected;
    res.record(ok, "alpha=" + std::to_string(alpha) + " beta=" + std::to_string(beta) +
                       " phi=" + std::to_string(phi));
  }
  return res;
}

/// Mirror pairing is an involution onto mirrored coordinates; symmetric
/// fields classify as even, antisymmetric ones as odd, and a balanced mix
/// as indeterminate.
inline PropertyResult parity_mirror(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PropertyResult res;
  for (int k = 0; k < cases; ++k) {
    DumbbellSpec s;
    s.c = 0.02 + 1.5 * u(rng);
    s.nx = 4 + 2 * static_cast<int>(u(rng) * 5);
    s.ny = 4 + 2 * static_cast<int>(u(rng) * 3);
    const FunctionSpace space(dumbbell_mesh(s));
    const auto mirror = mirror_pairing(space);
    bool ok = true;
    for (Index g = 0; g < space.num_dofs(); ++g) {
      ok = ok && mirror[mirror[g]] == g;
      const Point a = space.dof_coords()[g], b = space.dof_coords()[mirror[g]];
      ok = ok && std::abs(a.x() + b.x()) < 1e-12 && std::abs(a.y() - b.y()) < 1e-12;
    }
    Vector g(space.num_dofs());
    for (Index i = 0; i < g.size(); ++i)
      g[i] = space.is_dirichlet(i) ? 0.0 : u(rng) - 0.5;
    Vector even(g.size()), odd(g.size());
    for (Index i = 0; i < g.size(); ++i) {
      even[i] = g[i] + g[mirror[i]];
      odd[i] = g[i] - g[mirror[i]];
    }
    auto interior = [&](const Vector &full) {
      Vector x(space.num_interior());
      for (Index p = 0; p < x.size(); ++p)
        x[p] = full[space.order()[p]];
      return x;
    };
    const auto pe = parity(interior(even), space, mirror);
    const auto po = parity(interior(odd), space, mirror);
    const auto pm = parity(interior(even / even.norm() + odd / odd.norm()), space, mirror);
    ok = ok && pe.cls == Parity::even && pe.even_score < 1e-12;
    ok = ok && po.cls == Parity::odd && po.odd_score < 1e-12;
    ok = ok && pm.cls == Parity::indeterminate;
    res.record(ok, "c=" + std::to_string(s.c) + " nx=" + std::to_string(s.nx) +
                       " ny=" + std::to_string(s.ny));
  }
  return res;
}

} // namespace biharm::testing
