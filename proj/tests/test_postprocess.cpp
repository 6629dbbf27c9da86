#include "property_suites.hpp"

#include <biharm/corner_asymptotics.hpp>
#include <biharm/eigensolver.hpp>
#include <biharm/meshgen.hpp>
#include <biharm/point_locator.hpp>
#include <biharm/postprocess.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace biharm;

namespace {

/// Cubic Lagrange basis written directly in barycentrics, node order as
/// documented for the element (vertices, edge pairs, centroid).
std::array<double, 10> cubic_basis(double a, double b, double c) {
  auto v = [](double l) { return 0.5 * l * (3 * l - 1) * (3 * l - 2); };
  auto e = [](double l, double m) { return 4.5 * l * m * (3 * l - 1); };
  return {v(a), v(b), v(c), e(a, b), e(b, a), e(b, c), e(c, b), e(c, a), e(a, c), 27 * a * b * c};
}

/// Value of the global field at p by scanning every triangle.
double brute_force_value(const FunctionSpace &space, const Vector &coef, const Point &p) {
  const Mesh &m = space.mesh();
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto &tri = m.triangles[t];
    const Point a = m.vertices[tri[0]], b = m.vertices[tri[1]], c = m.vertices[tri[2]];
    const double det = (b - a).x() * (c - a).y() - (c - a).x() * (b - a).y();
    const double l1 = ((p - a).x() * (c - a).y() - (c - a).x() * (p - a).y()) / det;
    const double l2 = ((b - a).x() * (p - a).y() - (p - a).x() * (b - a).y()) / det;
    const double l0 = 1.0 - l1 - l2;
    if (std::min({l0, l1, l2}) < -1e-12)
      continue;
    const auto N = cubic_basis(l0, l1, l2);
    double v = 0.0;
    for (int k = 0; k < 10; ++k)
      v += N[k] * coef[space.cell_dofs(t)[k]];
    return v;
  }
  ADD_FAILURE() << "point outside mesh";
  return 0.0;
}

Vector random_field(const FunctionSpace &space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector g(space.num_dofs());
  for (auto &x : g)
    x = u(rng);
  return g;
}

BisectorProfile dense_profile(const RadialField &f, int n, double r_min, double r_max) {
  return biharm::testing::synthetic_profile(f, 0.0, n, r_min, r_max);
}

} // namespace

TEST(BisectorRay, ConstantFieldSamplesToOne) {
  const FunctionSpace space(sector_mesh({1.1, 0.2, 1e-5, SectorVariant::inner}));
  const BisectorRay ray = BisectorRay::from_global(space, Vector::Constant(space.num_dofs(), 3.0));
  EXPECT_DOUBLE_EQ(ray.normalization(), 1.0 / 3.0);
  const auto p = evaluate_on_bisector(ray, 200, 1e-6, 0.99);
  ASSERT_EQ(p.radii.size(), 200u);
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    EXPECT_NEAR(p.values[i], 1.0, 1e-13) << p.radii[i];
    if (i > 0) {
      EXPECT_LT(p.radii[i], p.radii[i - 1]);
    }
  }
  EXPECT_DOUBLE_EQ(p.radii.front(), 0.99);
  EXPECT_DOUBLE_EQ(p.radii.back(), 1e-6);
}

TEST(BisectorRay, LagrangePropertyOnDiagonal) {
  // The diagonal of the uniform square mesh carries vertex and edge dofs.
  const FunctionSpace space(uniform_square_mesh(2));
  const Vector g = random_field(space, 5);
  const BisectorRay ray = BisectorRay::from_global(space, g);
  const double scale = 1.0 / g.cwiseAbs().maxCoeff();
  int checked = 0;
  for (Index d = 0; d < space.num_dofs(); ++d) {
    const Point p = space.dof_coords()[d];
    if (std::abs(p.x() - p.y()) > 1e-14 || p.x() <= 0.0 || p.x() >= 1.0)
      continue;
    EXPECT_NEAR(ray(p.norm()), g[d] * scale, 1e-13) << p.transpose();
    ++checked;
  }
  EXPECT_EQ(checked, 5);
}

TEST(BisectorRay, MatchesExhaustiveEvaluation) {
  const FunctionSpace space(uniform_square_mesh(2));
  ASSERT_LE(space.num_dofs(), 50);
  const Vector g = random_field(space, 6);
  const BisectorRay ray = BisectorRay::from_global(space, g);
  const auto p = evaluate_on_bisector(ray, 300, 1e-4, 1.4);
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    const double expect = brute_force_value(space, g, ray.point(p.radii[i])) * ray.normalization();
    EXPECT_NEAR(p.values[i], expect, 1e-12) << p.radii[i];
  }
}

TEST(BisectorRay, InteriorCoefficientsScatterToGlobal) {
  const FunctionSpace space(sector_mesh({0.9, 0.3, 1e-3, SectorVariant::outer}));
  Vector u(space.num_interior());
  for (Index i = 0; i < u.size(); ++i)
    u[i] = std::sin(0.1 * i);
  const Vector g = global_coefficients(space, u);
  for (Index d = 0; d < space.num_dofs(); ++d) {
    if (space.is_dirichlet(d))
      EXPECT_EQ(g[d], 0.0);
    else
      EXPECT_EQ(g[d], u[space.position()[d]]);
  }
  EXPECT_THROW(global_coefficients(space, Vector::Ones(3)), UsageError);
}

TEST(BisectorRay, OutsidePointsReportRadius) {
  const FunctionSpace space(sector_mesh({1.0, 0.3, 1e-3, SectorVariant::inner}));
  const BisectorRay ray = BisectorRay::from_global(space, Vector::Ones(space.num_dofs()));
  try {
    ray(1.5);
    FAIL() << "expected PointLocationFailure";
  } catch (const PointLocationFailure &e) {
    EXPECT_DOUBLE_EQ(e.radius(), 1.5);
  }
  EXPECT_THROW(evaluate_on_bisector(ray, 10, 0.0, 0.5), UsageError);
  EXPECT_THROW(BisectorRay::from_global(space, Vector::Zero(space.num_dofs())), UsageError);
  const FunctionSpace no_corner(disk_mesh(0.5));
  EXPECT_THROW(BisectorRay::from_global(no_corner, Vector::Ones(no_corner.num_dofs())), UsageError);
}

TEST(PointLocator, AgreesWithExhaustiveScan) {
  const Mesh m = square_mesh(SquareSpec{0.3, 1e-6, 0.0});
  const PointLocator loc(m, Point(0.0, 0.0));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-8.0, 0.0), a(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double r = std::pow(10.0, u(rng));
    const double phi = 0.5 * std::numbers::pi * a(rng);
    const Point p(std::min(r * std::cos(phi), 1.0), std::min(r * std::sin(phi), 1.0));
    const auto found = loc.locate(p);
    ASSERT_TRUE(found.has_value()) << p.transpose();
    const Location &l = *found;
    const auto bc = barycentric(m, l.triangle, p);
    EXPECT_GE(std::min({bc[0], bc[1], bc[2]}), -1e-10) << p.transpose();
    Point back = Point::Zero();
    for (int j = 0; j < 3; ++j)
      back += l.barycentric[j] * m.vertices[m.triangles[l.triangle][j]];
    EXPECT_LT((back - p).norm(), 1e-12 * std::max(1.0, p.norm()));
  }
}

TEST(Zeros, SineProfile) {
  const double rho = 0.1;
  const RadialField f = [rho](double r) { return std::sin(std::numbers::pi * r / rho); };
  const auto p = dense_profile(f, 2000, 0.01, 0.95);
  const auto zeros = find_zeros(p, f);
  ASSERT_EQ(zeros.size(), 9u);
  for (std::size_t k = 0; k < zeros.size(); ++k)
    EXPECT_NEAR(zeros[k], rho * (9 - k), 1e-10 * rho * (9 - k)) << k;
}

TEST(Zeros, NoiseFloorDiscardsRoundOffFlips) {
  // Sign flips far below the local coefficient scale are not zeros.
  const RadialField tiny = [](double r) { return 1e-16 * std::sin(200.0 * std::log(r)); };
  BisectorProfile p = dense_profile(tiny, 400, 1e-3, 0.9);
  EXPECT_TRUE(find_zeros(p, tiny).empty());
  // The same oscillation at a 1e-16 local scale is well above that floor.
  for (auto &s : p.local_scale)
    s = 1e-16;
  EXPECT_FALSE(find_zeros(p, tiny).empty());
}

TEST(Extrema, ParabolaVertex) {
  const double a = 0.2, b = 0.6;
  const RadialField f = [=](double r) { return (r - a) * (b - r); };
  const auto p = dense_profile(f, 500, 1e-3, 0.9);
  const auto zeros = find_zeros(p, f);
  ASSERT_EQ(zeros.size(), 2u);
  EXPECT_NEAR(zeros[0], b, 1e-10);
  EXPECT_NEAR(zeros[1], a, 1e-10);
  const auto ext = find_extrema(p, f, zeros);
  ASSERT_EQ(ext.size(), 1u);
  EXPECT_NEAR(ext[0].r, 0.5 * (a + b), 1e-7);
  EXPECT_NEAR(ext[0].t, 0.25 * (b - a) * (b - a), 1e-14);
}

TEST(Extrema, SamplesCoverEachPredictedSpacing) {
  const double r_min = 1e-7, r_max = 0.9;
  for (double ratio : {1.3, 5.0, 16.6, 1e5}) {
    const int n = bisector_sample_count(r_min, r_max, ratio);
    const double per_log = (n - 1) / std::log(r_max / r_min);
    EXPECT_GE(per_log * std::log(ratio), 10.0) << ratio;
  }
  EXPECT_EQ(bisector_sample_count(r_min, r_max, std::nullopt),
            bisector_sample_count(r_min, r_max, 1e9));
}

TEST(Report, SingleZeroHasNoRatios) {
  const auto e = solve_exponent(0.5 * std::numbers::pi);
  const auto rep = oscillation_report({0.3}, {{0.1, -2.0}}, e);
  EXPECT_TRUE(rep.s_ratio.empty());
  EXPECT_TRUE(rep.r_ratio.empty());
  EXPECT_TRUE(rep.t_ratio.empty());
  EXPECT_TRUE(rep.interlaced());
  ASSERT_TRUE(rep.predicted_zero_ratio.has_value());
  EXPECT_NEAR(*rep.predicted_zero_ratio, 16.56743, 1e-4);
}

TEST(Report, InterlacingDetectsViolations) {
  const auto e = solve_exponent(1.0);
  EXPECT_TRUE(oscillation_report({0.5, 0.1}, {{0.3, 1.0}, {0.05, -0.2}}, e).interlaced());
  EXPECT_FALSE(oscillation_report({0.5, 0.1}, {{0.3, 1.0}, {0.05, 0.2}}, e).interlaced());
  EXPECT_FALSE(oscillation_report({0.5, 0.1}, {{0.6, 1.0}, {0.05, -0.2}}, e).interlaced());
}

TEST(ReportProperty, SyntheticOscillationsInterlace) {
  const auto r = biharm::testing::interlacing(150, 31);
  EXPECT_GE(r.cases, 100);
  EXPECT_TRUE(r.passed()) << r.failures << " failures, first " << r.first_failure;
}

TEST(Parity, CoordinateFields) {
  const FunctionSpace space(dumbbell_mesh({0.6, 16, 8}));
  const auto mirror = mirror_pairing(space);
  Vector ux(space.num_interior()), uxx(space.num_interior());
  for (Index p = 0; p < ux.size(); ++p) {
    const Point q = space.coord_at(p);
    ux[p] = q.x();
    uxx[p] = q.x() * q.x() + q.y();
  }
  const auto po = parity(ux, space, mirror);
  EXPECT_EQ(po.cls, Parity::odd);
  EXPECT_LT(po.odd_score, 1e-14);
  EXPECT_LT(po.score(), 1e-14);
  const auto pe = parity(uxx, space, mirror);
  EXPECT_EQ(pe.cls, Parity::even);
  EXPECT_LT(pe.even_score, 1e-14);
  EXPECT_THROW(parity(Vector::Zero(space.num_interior()), space, mirror), UsageError);
  EXPECT_STREQ(to_string(Parity::indeterminate), "indeterminate");
}

TEST(Parity, AsymmetricMeshRejected) {
  const FunctionSpace space(uniform_square_mesh(3));
  EXPECT_THROW(mirror_pairing(space), AsymmetricMesh);
}

TEST(ParityProperty, MirrorContract) {
  const auto r = biharm::testing::parity_mirror(120, 41);
  EXPECT_GE(r.cases, 100);
  EXPECT_TRUE(r.passed()) << r.failures << " failures, first " << r.first_failure;
}

TEST(Dumbbell, UnitWaistPairAndParity) {
  const ParityRow row = parity_row({1.0, 64, 32}, SolverConfig{});
  ASSERT_TRUE(row.converged);
  EXPECT_FALSE(row.ambiguous);
  EXPECT_TRUE(row.ground_even);
  EXPECT_NEAR(row.lambda_even / 51.9393, 1.0, 5e-3);
  EXPECT_NEAR(row.lambda_odd / 170.8502, 1.0, 5e-3);
  EXPECT_NEAR(row.ratio, 0.304, 0.003);
  EXPECT_LT(row.first.even_score, parity_threshold);
  EXPECT_LT(row.second.odd_score, parity_threshold);
  EXPECT_GT(row.first.odd_score, parity_threshold);
  EXPECT_GT(row.second.even_score, parity_threshold);
}

TEST(Dumbbell, SweepFlagsCrossing) {
  auto mesh = [](double c) { return DumbbellSpec{c, 48, 24}; };
  const auto rows = parity_sweep({0.5, 0.25}, mesh, SolverConfig{}, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].ratio, 0.755, 0.01);
  EXPECT_TRUE(rows[0].ground_even);
  // Thin waist: the odd function is the ground state.
  EXPECT_FALSE(rows[1].ground_even);
  EXPECT_GT(rows[1].ratio, 1.0);
  EXPECT_TRUE(rows[0].crossing_next);
  EXPECT_FALSE(rows[1].crossing_next);
  EXPECT_THROW(parity_sweep({0.5, 0.0}, mesh, SolverConfig{}), DegenerateDomain);
}

TEST(Dumbbell, UnresolvedSplittingIsDegenerate) {
  // At c = 0.025 the lobes decouple and the pair splits by ~1e-14.
  const ParityRow thin = parity_row({0.025, 24, 12}, SolverConfig{});
  ASSERT_TRUE(thin.converged);
  EXPECT_TRUE(thin.degenerate);
  EXPECT_NEAR(thin.ratio, 1.0, 1e-10);
  const ParityRow wide = parity_row({0.5, 24, 12}, SolverConfig{});
  EXPECT_FALSE(wide.degenerate);
  EXPECT_FALSE(wide.ambiguous);
}

TEST(Dumbbell, CrossingsIgnoreDegenerateRows) {
  ParityRow a, b;
  a.ratio = 0.9;
  b.ratio = 1.1;
  EXPECT_TRUE(crosses(a, b));
  EXPECT_TRUE(crosses(b, a));
  b.degenerate = true;
  EXPECT_FALSE(crosses(a, b));
  b.degenerate = false;
  b.ratio = 0.95;
  EXPECT_FALSE(crosses(a, b));
}

TEST(Square, CornerOscillationsOnModerateMeshes) {
  const auto e = solve_exponent(0.5 * std::numbers::pi);
  double s1[2];
  int k = 0;
  for (double h1 : {0.3, 0.2}) {
    const FunctionSpace space(square_mesh(SquareSpec{h1, 1e-7, 0.5 * h1}));
    const BlockSystem sys = assemble_system(space);
    const EigenPair p = smallest_eigenpair(Factorization(sys), sys.M_hat, SolverConfig{});
    const auto rep = analyze_bisector(p, space, e, 0.5e-7);
    ASSERT_GE(rep.s.size(), 3u) << h1;
    EXPECT_TRUE(rep.interlaced()) << h1;
    for (int n = 0; n < 2; ++n)
      EXPECT_NEAR(rep.s_ratio[n] / 16.56743, 1.0, 1e-3) << h1 << " " << n;
    s1[k++] = rep.s[0];
  }
  EXPECT_NEAR(s1[0] / s1[1], 1.0, 5e-4);
}
