#pragma once

// Bisector profiles, zeros and extrema of eigenfunctions near a corner, and
// parity classification on mirror-symmetric meshes.

#include <biharm/corner_asymptotics.hpp>
#include <biharm/eigensolver.hpp>
#include <biharm/error.hpp>
#include <biharm/function_space.hpp>
#include <biharm/meshgen.hpp>
#include <biharm/parallel.hpp>
#include <biharm/point_locator.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

namespace biharm {

/// Noise floor factor: values below noise_factor * eps * (local dof scale)
/// are indistinguishable from round-off.
inline constexpr double noise_factor = 50.0;

/// Expands interior coefficients to all dofs (global numbering); Dirichlet
/// dofs are zero.
inline Vector global_coefficients(const FunctionSpace &space, const Vector &u) {
  if (u.size() != space.num_interior())
    throw UsageError("coefficient vector does not match the space");
  Vector g = Vector::Zero(space.num_dofs());
  const auto &order = space.order();
  for (Index p = 0; p < space.num_interior(); ++p)
    g[order[p]] = u[p];
  return g;
}

/// Evaluates a cubic field along the ray corner + r * bisector.
class BisectorRay {
public:
  BisectorRay(const FunctionSpace &space, const Vector &u_interior)
      : BisectorRay(space, global_coefficients(space, u_interior), 0) {}

  /// Ray over a field given by coefficients on all dofs (global numbering).
  static BisectorRay from_global(const FunctionSpace &space, const Vector &coef) {
    if (coef.size() != space.num_dofs())
      throw UsageError("coefficient vector does not match the space");
    return BisectorRay(space, coef, 0);
  }

  /// Factor applied to the input coefficients so that max |dof| = 1.
  double normalization() const { return normalization_; }

  Point point(double r) const { return origin_ + r * direction_; }

  struct Sample {
    double value;
    Index triangle;
    /// Largest |coefficient| on the triangle.
    double local_scale;
  };

  Sample sample(double r) const {
    const auto loc = locator_->locate(point(r));
    if (!loc)
      throw PointLocationFailure("bisector sample outside the mesh", r);
    const auto &b = loc->barycentric;
    const cubic::Values N = cubic::values_barycentric(b[0], b[1], b[2]);
    const auto &dofs = space_->cell_dofs(loc->triangle);
    double v = 0.0, scale = 0.0;
    for (int a = 0; a < cubic::num_nodes; ++a) {
      v += coef_[dofs[a]] * N[a];
      scale = std::max(scale, std::abs(coef_[dofs[a]]));
    }
    return {v, loc->triangle, scale};
  }

  double operator()(double r) const { return sample(r).value; }

private:
  BisectorRay(const FunctionSpace &space, Vector coef, int) : space_(&space), coef_(std::move(coef)) {
    const Mesh &m = space.mesh();
    if (!m.corner)
      throw UsageError("mesh has no corner metadata");
    origin_ = m.vertices[m.corner->vertex];
    direction_ = m.corner->bisector.normalized();
    const double mx = coef_.cwiseAbs().maxCoeff();
    if (!(mx > 0.0))
      throw UsageError("cannot normalize a zero field");
    normalization_ = 1.0 / mx;
    coef_ *= normalization_;
    locator_.emplace(m, origin_);
  }

  const FunctionSpace *space_;
  Point origin_, direction_;
  Vector coef_;
  double normalization_ = 1.0;
  std::optional<PointLocator> locator_;
};

struct BisectorProfile {
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<Index> element_trace;
  std::vector<double> local_scale;
  double normalization = 1.0;
};

/// Geometric samples from r_max down to r_min.
inline BisectorProfile evaluate_on_bisector(const BisectorRay &ray, int n_samples, double r_min,
                                            double r_max) {
  if (!(r_min > 0.0 && r_max > r_min) || n_samples < 2)
    throw UsageError("evaluate_on_bisector: need 0 < r_min < r_max and n_samples >= 2");
  BisectorProfile p;
  p.normalization = ray.normalization();
  const double q = std::pow(r_min / r_max, 1.0 / (n_samples - 1));
  p.radii.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    const double r = k + 1 == n_samples ? r_min : r_max * std::pow(q, k);
    const auto s = ray.sample(r);
    p.radii.push_back(r);
    p.values.push_back(s.value);
    p.element_trace.push_back(s.triangle);
    p.local_scale.push_back(s.local_scale);
  }
  return p;
}

inline BisectorProfile evaluate_on_bisector(const EigenPair &pair, const FunctionSpace &space,
                                            int n_samples, double r_min, double r_max) {
  return evaluate_on_bisector(BisectorRay(space, pair.u), n_samples, r_min, r_max);
}

/// Sample count giving `per_decade` samples per decade, and at least
/// ten samples per predicted zero spacing when one is known.
inline int bisector_sample_count(double r_min, double r_max, std::optional<double> zero_ratio,
                                 int per_decade = 40) {
  double density = per_decade;
  if (zero_ratio && *zero_ratio > 1.0)
    density = std::max(density, 10.0 / std::log10(*zero_ratio));
  return 1 + static_cast<int>(std::ceil(density * std::log10(r_max / r_min)));
}

namespace detail {

inline bool above_noise(double value, double local_scale) {
  return std::abs(value) > noise_factor * std::numeric_limits<double>::epsilon() * local_scale;
}

} // namespace detail

/// Relative position tolerance for zero and extremum refinement.
inline constexpr double position_tolerance = 1e-10;

/// `field(r)` evaluates the profiled function at radius r.
using RadialField = std::function<double(double)>;

/// Zeros of the field along the bisector, largest first. Each sign flip of
/// the profile is refined by bisection on the interpolant; flips where both
/// samples sit below the noise floor are discarded.
inline std::vector<double> find_zeros(const BisectorProfile &p, const RadialField &ray) {
  std::vector<double> zeros;
  for (std::size_t i = 0; i + 1 < p.radii.size(); ++i) {
    const double a = p.values[i], b = p.values[i + 1];
    if (!(a * b < 0.0))
      continue;
    if (!detail::above_noise(a, p.local_scale[i]) && !detail::above_noise(b, p.local_scale[i + 1]))
      continue;
    double hi = p.radii[i], lo = p.radii[i + 1];
    double fhi = a;
    while (hi - lo > position_tolerance * lo) {
      const double mid = 0.5 * (lo + hi);
      const double fm = ray(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm < 0.0) == (fhi < 0.0)) {
        hi = mid;
        fhi = fm;
      } else {
        lo = mid;
      }
    }
    zeros.push_back(0.5 * (lo + hi));
  }
  return zeros;
}

inline std::vector<double> find_zeros(const BisectorProfile &p, const FunctionSpace &space,
                                      const EigenPair &pair) {
  return find_zeros(p, BisectorRay(space, pair.u));
}

struct Extremum {
  double r;
  double t;
};

/// One extremum of |u| per interval between consecutive zeros, and one
/// between the last zero and the innermost sample when the profile turns
/// there. Located by golden-section search in log r; t carries the sign.
inline std::vector<Extremum> find_extrema(const BisectorProfile &p, const RadialField &ray,
                                          const std::vector<double> &zeros) {
  std::vector<Extremum> out;
  if (zeros.empty())
    return out;
  const double r_min = p.radii.back();
  for (std::size_t n = 0; n < zeros.size(); ++n) {
    const double upper = zeros[n];
    const double lower = n + 1 < zeros.size() ? zeros[n + 1] : r_min;
    // Best sample inside (lower, upper); the last interval includes r_min itself.
    const bool last_interval = n + 1 == zeros.size();
    std::size_t best = p.radii.size();
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
      if (p.radii[i] >= upper || p.radii[i] < lower || (!last_interval && p.radii[i] == lower))
        continue;
      if (best == p.radii.size() || std::abs(p.values[i]) > std::abs(p.values[best]))
        best = i;
    }
    if (best == p.radii.size())
      continue;
    if (last_interval && best + 1 == p.radii.size())
      continue; // still growing toward r_min: no interior extremum resolved
    if (!detail::above_noise(p.values[best], p.local_scale[best]))
      continue;
    const double hi = best > 0 ? std::min(upper, p.radii[best - 1]) : upper;
    const double lo = best + 1 < p.radii.size() ? std::max(lower, p.radii[best + 1]) : lower;
    double a = std::log(lo), b = std::log(hi);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double s) { return std::abs(ray(std::exp(s))); };
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > position_tolerance) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = f(x1);
      }
    }
    const double r = std::exp(0.5 * (a + b));
    out.push_back({r, ray(r)});
  }
  return out;
}

inline std::vector<Extremum> find_extrema(const BisectorProfile &p, const FunctionSpace &space,
                                          const EigenPair &pair) {
  const BisectorRay ray(space, pair.u);
  return find_extrema(p, std::cref(ray), find_zeros(p, std::cref(ray)));
}

struct OscillationReport {
  std::vector<double> s;
  std::vector<double> r;
  std::vector<double> t;
  std::vector<double> s_ratio;
  std::vector<double> r_ratio;
  std::vector<double> t_ratio;
  std::optional<double> predicted_zero_ratio;
  std::optional<double> predicted_extremum_ratio;

  /// Between consecutive zeros lies exactly one extremum, and consecutive
  /// extremum values alternate in sign.
  bool interlaced() const {
    for (std::size_t n = 0; n < r.size(); ++n) {
      if (n >= s.size() || !(r[n] < s[n]))
        return false;
      if (n + 1 < s.size() && !(r[n] > s[n + 1]))
        return false;
    }
    for (std::size_t n = 0; n + 1 < t.size(); ++n)
      if (!(t[n] * t[n + 1] < 0.0))
        return false;
    return r.size() + 1 >= s.size();
  }
};

inline OscillationReport oscillation_report(const std::vector<double> &zeros,
                                            const std::vector<Extremum> &extrema,
                                            const CornerExponent &exponent) {
  OscillationReport rep;
  rep.s = zeros;
  for (const auto &e : extrema) {
    rep.r.push_back(e.r);
    rep.t.push_back(e.t);
  }
  for (std::size_t n = 0; n + 1 < rep.s.size(); ++n)
    rep.s_ratio.push_back(rep.s[n] / rep.s[n + 1]);
  for (std::size_t n = 0; n + 1 < rep.r.size(); ++n) {
    rep.r_ratio.push_back(rep.r[n] / rep.r[n + 1]);
    rep.t_ratio.push_back(std::abs(rep.t[n] / rep.t[n + 1]));
  }
  rep.predicted_zero_ratio = exponent.zero_ratio;
  rep.predicted_extremum_ratio = exponent.extremum_value_ratio;
  return rep;
}

/// Full bisector analysis of one eigenfunction with default sampling.
inline OscillationReport analyze_bisector(const EigenPair &pair, const FunctionSpace &space,
                                          const CornerExponent &exponent, double r_min,
                                          double r_max = 0.9) {
  const BisectorRay ray(space, pair.u);
  const int n = bisector_sample_count(r_min, r_max, exponent.zero_ratio);
  const auto profile = evaluate_on_bisector(ray, n, r_min, r_max);
  const auto zeros = find_zeros(profile, std::cref(ray));
  return oscillation_report(zeros, find_extrema(profile, std::cref(ray), zeros), exponent);
}

// ---------------------------------------------------------------------------
// Parity

enum class Parity { even, odd, indeterminate };

inline const char *to_string(Parity p) {
  switch (p) {
  case Parity::even:
    return "even";
  case Parity::odd:
    return "odd";
  default:
    return "indeterminate";
  }
}

inline constexpr double parity_threshold = 0.01;

struct ParityResult {
  Parity cls = Parity::indeterminate;
  /// ||u(-x,y) - u(x,y)|| / ||u||
  double even_score = 0.0;
  /// ||u(-x,y) + u(x,y)|| / ||u||
  double odd_score = 0.0;

  double score() const { return std::min(even_score, odd_score); }
};

/// For every global dof, the dof at the mirrored coordinate (x -> -x).
inline std::vector<Index> mirror_pairing(const FunctionSpace &space) {
  const auto &xy = space.dof_coords();
  double extent = 0.0;
  for (const auto &p : xy)
    extent = std::max(extent, p.cwiseAbs().maxCoeff());
  const double cell = 1e-9 * std::max(extent, 1.0);
  auto key = [cell](double x, double y) {
    const auto i = static_cast<std::int64_t>(std::llround(x / cell));
    const auto j = static_cast<std::int64_t>(std::llround(y / cell));
    return static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(j);
  };
  std::unordered_multimap<std::uint64_t, Index> table;
  table.reserve(xy.size());
  for (Index g = 0; g < static_cast<Index>(xy.size()); ++g)
    table.emplace(key(xy[g].x(), xy[g].y()), g);

  std::vector<Index> mirror(xy.size(), -1);
  for (Index g = 0; g < static_cast<Index>(xy.size()); ++g) {
    const Point target(-xy[g].x(), xy[g].y());
    Index found = -1;
    for (int di = -1; di <= 1 && found < 0; ++di)
      for (int dj = -1; dj <= 1 && found < 0; ++dj) {
        auto range = table.equal_range(key(target.x() + di * cell, target.y() + dj * cell));
        for (auto it = range.first; it != range.second; ++it)
          if ((xy[it->second] - target).cwiseAbs().maxCoeff() <= cell) {
            found = it->second;
            break;
          }
      }
    if (found < 0)
      throw AsymmetricMesh("no mirror dof for (" + std::to_string(xy[g].x()) + ", " +
                           std::to_string(xy[g].y()) + ")");
    mirror[g] = found;
  }
  return mirror;
}

inline ParityResult parity(const Vector &u_interior, const FunctionSpace &space,
                           const std::vector<Index> &mirror) {
  const Vector g = global_coefficients(space, u_interior);
  const double nrm = g.norm();
  if (!(nrm > 0.0))
    throw UsageError("parity of a zero field");
  double even = 0.0, odd = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double m = g[mirror[i]];
    even += (m - g[i]) * (m - g[i]);
    odd += (m + g[i]) * (m + g[i]);
  }
  ParityResult r;
  r.even_score = std::sqrt(even) / nrm;
  r.odd_score = std::sqrt(odd) / nrm;
  if (r.even_score < parity_threshold)
    r.cls = Parity::even;
  else if (r.odd_score < parity_threshold)
    r.cls = Parity::odd;
  return r;
}

inline ParityResult parity(const EigenPair &pair, const FunctionSpace &space) {
  return parity(pair.u, space, mirror_pairing(space));
}

struct ParityRow {
  double c = 0.0;
  double lambda_even = std::numeric_limits<double>::quiet_NaN();
  double lambda_odd = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
  Index dofs = 0;
  ParityResult first, second;
  /// lambda1 eigenfunction is even.
  bool ground_even = false;
  bool converged = false;
  /// The two pairs did not split into one even and one odd function.
  bool ambiguous = true;
  /// The splitting |lambda_2 - lambda_1| is below what the eigen-solve
  /// resolves, so the parity split of the computed pair is arbitrary.
  bool degenerate = false;
  /// Set when this row and the next straddle ratio = 1.
  bool crossing_next = false;
};

/// Splittings below this multiple of the solver tolerance count as degenerate.
inline constexpr double degenerate_factor = 10.0;

/// Both rows resolved and on opposite sides of ratio = 1.
inline bool crosses(const ParityRow &a, const ParityRow &b) {
  return !a.degenerate && !b.degenerate && (a.ratio - 1.0) * (b.ratio - 1.0) < 0.0;
}

/// Two smallest dumbbell eigenpairs at one mesh, parity-classified.
inline ParityRow parity_row(const DumbbellSpec &spec, const SolverConfig &config) {
  const FunctionSpace space(dumbbell_mesh(spec));
  const BlockSystem sys = assemble_system(space);
  const Factorization fac(sys);
  const SparseMatrix &B = rhs_operator(sys, config.problem);
  const auto [a, b] = lowest_two_eigenpairs(fac, B, config);

  const auto mirror = mirror_pairing(space);
  ParityRow row;
  row.c = spec.c;
  row.dofs = 2 * sys.n_i + sys.n_d;
  row.first = parity(a.u, space, mirror);
  row.second = parity(b.u, space, mirror);
  row.converged = a.converged && b.converged;
  const bool split = (row.first.cls == Parity::even && row.second.cls == Parity::odd) ||
                     (row.first.cls == Parity::odd && row.second.cls == Parity::even);
  row.ambiguous = !split;
  row.degenerate = b.lambda - a.lambda <= degenerate_factor * config.tol * b.lambda;
  // Without a clean split, fall back to the smaller of the two scores.
  row.ground_even = split ? row.first.cls == Parity::even
                          : row.first.even_score + row.second.odd_score <=
                                row.first.odd_score + row.second.even_score;
  row.lambda_even = row.ground_even ? a.lambda : b.lambda;
  row.lambda_odd = row.ground_even ? b.lambda : a.lambda;
  row.ratio = row.lambda_even / row.lambda_odd;
  return row;
}

/// Parity-classified rows for each c, in input order, with crossing flags.
inline std::vector<ParityRow> parity_sweep(const std::vector<double> &c_values,
                                           const std::function<DumbbellSpec(double)> &mesh_for,
                                           const SolverConfig &config, int threads = 1) {
  for (double c : c_values)
    if (!(c > 0.0))
      throw DegenerateDomain("parity_sweep: c must be positive");
  std::vector<ParityRow> rows(c_values.size());
  parallel_for(c_values.size(), threads,
               [&](std::size_t i) { rows[i] = parity_row(mesh_for(c_values[i]), config); });
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    rows[i].crossing_next = crosses(rows[i], rows[i + 1]);
  return rows;
}

} // namespace biharm
