#pragma once

// Mesh generators for the three domain families (circular sector, unit square,
// dumbbell) plus the unit disk and uniform squares used for verification.
//
// Sector and square meshes are built from concentric "rings" around the
// graded corner. Inside radius rho1 the rings are uniformly spaced; outside
// they follow r_{k+1} = r_k (1 + h1) so that element size tracks h ~ r h1.
// Consecutive rings are stitched by a strip triangulation that tolerates
// different segment counts, so no hanging nodes appear anywhere.

#include <biharm/error.hpp>
#include <biharm/mesh.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace biharm {

enum class SectorVariant { inner, outer };

inline const char *to_string(SectorVariant v) {
  return v == SectorVariant::inner ? "inner" : "outer";
}

inline SectorVariant parse_sector_variant(const std::string &s) {
  if (s == "inner")
    return SectorVariant::inner;
  if (s == "outer")
    return SectorVariant::outer;
  throw InvalidSpec("unknown sector variant '" + s + "'");
}

struct SectorSpec {
  double theta = std::numbers::pi / 2;
  double h1 = 0.1;
  double rho1 = 1e-6;
  SectorVariant variant = SectorVariant::inner;
};

struct SquareSpec {
  double h1 = 0.1;
  double rho1 = 1e-7;
  /// Cap on element size away from the graded corner; <= 0 selects h1 / 2.
  double h_max = 0.0;
};

struct DumbbellSpec {
  double c = 1.0;
  int nx = 64;
  int ny = 32;
};

struct MeshLimits {
  std::size_t max_vertices = 400000;
};

namespace detail {

/// One ring of the polar construction: radius-like parameter and the number
/// of segments it is divided into.
struct Ring {
  double rho;
  int segments;
};

using RingMap = std::function<Point(double rho, double t, bool last)>;

/// Triangulates the strip between two consecutive rings given as vertex
/// index lists with matching angular parameters t in [0, 1].
inline void stitch(std::vector<std::array<Index, 3>> &tris, const std::vector<Index> &a,
                   const std::vector<double> &ta, const std::vector<Index> &b,
                   const std::vector<double> &tb) {
  if (a.size() == 1) {
    for (std::size_t j = 0; j + 1 < b.size(); ++j)
      tris.push_back({a[0], b[j], b[j + 1]});
    return;
  }
  std::size_t i = 0, j = 0;
  while (i + 1 < a.size() || j + 1 < b.size()) {
    bool advance_b;
    if (i + 1 == a.size())
      advance_b = true;
    else if (j + 1 == b.size())
      advance_b = false;
    else
      advance_b = tb[j + 1] <= ta[i + 1] + 1e-12;
    if (advance_b) {
      tris.push_back({a[i], b[j], b[j + 1]});
      ++j;
    } else {
      tris.push_back({a[i], b[j], a[i + 1]});
      ++i;
    }
  }
}

/// Builds a fan-shaped mesh: apex vertex at map(0, 0), then one polyline
/// per ring. Open fans get their two radial sides tagged Dirichlet; closed
/// fans (a full disk) only have the outer ring as boundary.
inline Mesh build_ring_mesh(const std::vector<Ring> &rings, const RingMap &map, bool closed,
                            BoundaryTag outer_tag, const MeshLimits &limits) {
  std::size_t projected = 1;
  for (const auto &r : rings)
    projected += static_cast<std::size_t>(r.segments) + (closed ? 0 : 1);
  if (projected > limits.max_vertices)
    throw MeshTooLarge("mesh would have " + std::to_string(projected) +
                       " vertices (cap " + std::to_string(limits.max_vertices) + ")");

  Mesh m;
  m.vertices.reserve(projected);
  m.vertices.push_back(map(0.0, 0.0, false));
  std::vector<Index> prev{0};
  std::vector<double> prev_t{0.0};
  std::vector<Index> first_side{0}, second_side{0};

  for (std::size_t k = 0; k < rings.size(); ++k) {
    const bool last = k + 1 == rings.size();
    const int n = rings[k].segments;
    std::vector<Index> cur;
    std::vector<double> cur_t;
    const int count = closed ? n : n + 1;
    for (int i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / n;
      cur.push_back(static_cast<Index>(m.vertices.size()));
      cur_t.push_back(t);
      m.vertices.push_back(map(rings[k].rho, t, last));
    }
    if (closed) {
      // Wrap around by repeating the first vertex at t = 1.
      auto a = prev, b = cur;
      auto ta = prev_t, tb = cur_t;
      if (a.size() > 1) {
        a.push_back(a.front());
        ta.push_back(1.0);
      }
      b.push_back(b.front());
      tb.push_back(1.0);
      stitch(m.triangles, a, ta, b, tb);
    } else {
      stitch(m.triangles, prev, prev_t, cur, cur_t);
      first_side.push_back(cur.front());
      second_side.push_back(cur.back());
    }
    if (last) {
      for (std::size_t i = 0; i + 1 < cur.size(); ++i)
        m.boundary_edges.push_back({{cur[i], cur[i + 1]}, outer_tag});
      if (closed)
        m.boundary_edges.push_back({{cur.back(), cur.front()}, outer_tag});
    }
    prev = std::move(cur);
    prev_t = std::move(cur_t);
  }
  if (!closed) {
    for (std::size_t i = 0; i + 1 < first_side.size(); ++i) {
      m.boundary_edges.push_back({{first_side[i], first_side[i + 1]}, BoundaryTag::dirichlet});
      m.boundary_edges.push_back({{second_side[i], second_side[i + 1]}, BoundaryTag::dirichlet});
    }
  }
  return m;
}

/// Uniform core rings inside rho1 (sizes ~ rho1 h1), ending with a ring of
/// `outer_segments` segments at radius rho1.
inline std::vector<Ring> core_rings(double rho1, double h1, int outer_segments) {
  const int J = std::max(1, static_cast<int>(std::ceil(1.0 / h1 - 1e-9)));
  std::vector<Ring> rings;
  for (int j = 1; j <= J; ++j) {
    int n = static_cast<int>(std::ceil(static_cast<double>(j) * outer_segments / J - 1e-9));
    rings.push_back({rho1 * j / J, std::max(1, n)});
  }
  rings.back().segments = outer_segments;
  return rings;
}

inline void check_unit_interval(double v, const char *name) {
  if (!(v > 0.0 && v < 1.0))
    throw InvalidSpec(std::string(name) + " must lie in (0, 1)");
}

} // namespace detail

/// Polar-graded mesh of the unit-radius sector {0 <= phi <= theta, r <= 1}.
/// The inner variant has its arc vertices on the unit circle, the outer
/// variant circumscribes the arc (chord midpoints touch the circle).
inline Mesh sector_mesh(const SectorSpec &spec, const MeshLimits &limits = {}) {
  if (!(spec.theta > 0.0 && spec.theta < std::numbers::pi))
    throw InvalidSpec("sector_mesh: theta must lie in (0, pi)");
  detail::check_unit_interval(spec.h1, "sector_mesh: h1");
  detail::check_unit_interval(spec.rho1, "sector_mesh: rho1");

  const int n = std::max(1, static_cast<int>(std::ceil(spec.theta / spec.h1 - 1e-9)));
  auto rings = detail::core_rings(spec.rho1, spec.h1, n);
  const double growth = 1.0 + spec.h1;
  for (double r = spec.rho1 * growth; r < 1.0 / std::sqrt(growth); r *= growth)
    rings.push_back({r, n});
  rings.push_back({1.0, n});

  const double dphi = spec.theta / n;
  const double outer_radius =
      spec.variant == SectorVariant::outer ? 1.0 / std::cos(0.5 * dphi) : 1.0;
  const double theta = spec.theta;
  auto map = [theta, outer_radius](double r, double t, bool last) -> Point {
    const double rr = last ? outer_radius : r;
    const double phi = t * theta;
    return {rr * std::cos(phi), rr * std::sin(phi)};
  };
  Mesh m = detail::build_ring_mesh(rings, map, false, BoundaryTag::arc_dirichlet, limits);
  m.corner = Corner{0, Point(std::cos(0.5 * theta), std::sin(0.5 * theta)), theta};
  m.meta.family = "sector";
  m.meta.variant = to_string(spec.variant);
  m.meta.params = {{"theta", spec.theta}, {"h1", spec.h1}, {"rho1", spec.rho1}};
  validate(m);
  return m;
}

/// Unit square (0,1)^2 graded toward the corner (0,0). Rings are circles
/// near the corner and morph into the square boundary at rho = 1; the
/// element size follows min(rho h1, h_max).
inline Mesh square_mesh(const SquareSpec &spec, const MeshLimits &limits = {}) {
  if (!(spec.rho1 > 0.0 && spec.rho1 < 0.5))
    throw InvalidSpec("square_mesh: rho1 must lie in (0, 0.5)");
  detail::check_unit_interval(spec.h1, "square_mesh: h1");
  const double h_max = spec.h_max > 0.0 ? spec.h_max : 0.5 * spec.h1;
  const double quarter = 0.5 * std::numbers::pi;

  auto weight = [](double rho) { return rho * rho; };
  auto even_up = [](int k) { return k + (k % 2); };

  int n0 = even_up(static_cast<int>(std::ceil(quarter / spec.h1 - 1e-9)));
  auto rings = detail::core_rings(spec.rho1, spec.h1, n0);
  int n = n0;
  double rho = spec.rho1;
  for (;;) {
    const double h = std::min(rho * spec.h1, h_max);
    double next = rho + h;
    const bool last = next > 1.0 - 0.5 * std::min(next * spec.h1, h_max);
    if (last)
      next = 1.0;
    const double w = weight(next);
    const double length = next * ((1.0 - w) * quarter + 2.0 * w);
    const double hn = std::min(next * spec.h1, h_max);
    n = std::max(n, even_up(static_cast<int>(std::ceil(length / hn - 1e-9))));
    rings.push_back({next, n});
    rho = next;
    if (last)
      break;
  }

  auto map = [weight, quarter](double r, double t, bool) -> Point {
    const double w = weight(r);
    const Point circ(std::cos(t * quarter), std::sin(t * quarter));
    const Point sq = t <= 0.5 ? Point(1.0, 2.0 * t) : Point(2.0 - 2.0 * t, 1.0);
    Point p = r * ((1.0 - w) * circ + w * sq);
    if (t == 0.0)
      p.y() = 0.0;
    if (t == 1.0)
      p.x() = 0.0;
    return p;
  };
  Mesh m = detail::build_ring_mesh(rings, map, false, BoundaryTag::dirichlet, limits);
  const double s = std::sqrt(0.5);
  m.corner = Corner{0, Point(s, s), quarter};
  m.meta.family = "square";
  m.meta.params = {{"h1", spec.h1}, {"rho1", spec.rho1}, {"h_max", h_max}};
  validate(m);
  return m;
}

inline Mesh square_mesh(double h1, double rho1, const MeshLimits &limits = {}) {
  return square_mesh(SquareSpec{h1, rho1, 0.0}, limits);
}

/// Half-length of the dumbbell: positive root of c + x^2 - x^4 = 0.
inline double dumbbell_half_length(double c) {
  if (!(c > 0.0))
    throw DegenerateDomain("dumbbell: c must be positive");
  return std::sqrt(0.5 * (1.0 + std::sqrt(1.0 + 4.0 * c)));
}

inline double dumbbell_profile(double c, double x) { return c + x * x - x * x * x * x; }

/// Mapped structured mesh of {|y| <= c + x^2 - x^4}. Columns are uniform in
/// x; each column is split uniformly in y between the two boundary curves.
/// The outermost columns collapse onto the tip vertices (+-x_max, 0).
/// Diagonals follow a union-jack pattern so the mesh is exactly symmetric
/// under x -> -x and y -> -y.
inline Mesh dumbbell_mesh(const DumbbellSpec &spec, const MeshLimits &limits = {}) {
  const double xmax = dumbbell_half_length(spec.c);
  if (spec.nx < 4 || spec.ny < 4 || spec.nx % 2 != 0 || spec.ny % 2 != 0)
    throw InvalidSpec("dumbbell_mesh: nx and ny must be even and >= 4");
  const std::size_t projected =
      static_cast<std::size_t>(spec.nx - 1) * (spec.ny + 1) + 2;
  if (projected > limits.max_vertices)
    throw MeshTooLarge("dumbbell mesh would have " + std::to_string(projected) + " vertices");

  const int nx = spec.nx, ny = spec.ny;
  std::vector<double> xs(nx + 1);
  for (int i = 0; i <= nx / 2; ++i) {
    xs[i] = -xmax + 2.0 * xmax * i / nx;
    xs[nx - i] = -xs[i];
  }
  xs[nx / 2] = 0.0;
  std::vector<double> eta(ny + 1);
  for (int j = 0; j <= ny / 2; ++j) {
    eta[j] = -1.0 + 2.0 * j / ny;
    eta[ny - j] = -eta[j];
  }
  eta[ny / 2] = 0.0;

  Mesh m;
  m.vertices.reserve(projected);
  const Index left_tip = 0;
  m.vertices.emplace_back(xs[0], 0.0);
  auto id = [ny](int i, int j) { return static_cast<Index>(1 + (i - 1) * (ny + 1) + j); };
  for (int i = 1; i < nx; ++i) {
    const double f = dumbbell_profile(spec.c, xs[i]);
    for (int j = 0; j <= ny; ++j)
      m.vertices.emplace_back(xs[i], f * eta[j]);
  }
  const Index right_tip = static_cast<Index>(m.vertices.size());
  m.vertices.emplace_back(xs[nx], 0.0);

  for (int j = 0; j < ny; ++j) {
    m.triangles.push_back({left_tip, id(1, j), id(1, j + 1)});
    m.triangles.push_back({right_tip, id(nx - 1, j + 1), id(nx - 1, j)});
  }
  for (int i = 1; i + 1 < nx; ++i) {
    const bool right = i >= nx / 2;
    for (int j = 0; j < ny; ++j) {
      const bool top = j >= ny / 2;
      const Index ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
      if (right == top) {
        m.triangles.push_back({ll, lr, ur});
        m.triangles.push_back({ll, ur, ul});
      } else {
        m.triangles.push_back({ll, lr, ul});
        m.triangles.push_back({lr, ur, ul});
      }
    }
  }
  // Boundary: bottom curve left to right, top curve right to left.
  m.boundary_edges.push_back({{left_tip, id(1, 0)}, BoundaryTag::dirichlet});
  m.boundary_edges.push_back({{id(1, ny), left_tip}, BoundaryTag::dirichlet});
  for (int i = 1; i + 1 < nx; ++i) {
    m.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryTag::dirichlet});
    m.boundary_edges.push_back({{id(i + 1, ny), id(i, ny)}, BoundaryTag::dirichlet});
  }
  m.boundary_edges.push_back({{id(nx - 1, 0), right_tip}, BoundaryTag::dirichlet});
  m.boundary_edges.push_back({{right_tip, id(nx - 1, ny)}, BoundaryTag::dirichlet});

  m.meta.family = "dumbbell";
  m.meta.params = {{"c", spec.c},
                   {"nx", static_cast<double>(nx)},
                   {"ny", static_cast<double>(ny)},
                   {"x_max", xmax}};
  validate(m);
  return m;
}

/// Unit disk by concentric rings of spacing ~h; the boundary is the
/// inscribed polygon.
inline Mesh disk_mesh(double h, const MeshLimits &limits = {}) {
  detail::check_unit_interval(h, "disk_mesh: h");
  const int J = static_cast<int>(std::ceil(1.0 / h - 1e-9));
  std::vector<detail::Ring> rings;
  for (int j = 1; j <= J; ++j) {
    const double r = static_cast<double>(j) / J;
    rings.push_back({r, std::max(6, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / h)))});
  }
  auto map = [](double r, double t, bool) -> Point {
    const double phi = 2.0 * std::numbers::pi * t;
    return {r * std::cos(phi), r * std::sin(phi)};
  };
  Mesh m = detail::build_ring_mesh(rings, map, true, BoundaryTag::arc_dirichlet, limits);
  m.meta.family = "disk";
  m.meta.params = {{"h", h}};
  validate(m);
  return m;
}

/// Structured n x n mesh of (0,1)^2, each cell cut along its rising diagonal.
inline Mesh uniform_square_mesh(int n) {
  if (n < 1)
    throw InvalidSpec("uniform_square_mesh: n must be positive");
  Mesh m;
  auto id = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  for (int i = 0; i < n; ++i) {
    m.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryTag::dirichlet});
    m.boundary_edges.push_back({{id(n, i), id(n, i + 1)}, BoundaryTag::dirichlet});
    m.boundary_edges.push_back({{id(i + 1, n), id(i, n)}, BoundaryTag::dirichlet});
    m.boundary_edges.push_back({{id(0, i + 1), id(0, i)}, BoundaryTag::dirichlet});
  }
  const double s = std::sqrt(0.5);
  m.corner = Corner{0, Point(s, s), 0.5 * std::numbers::pi};
  m.meta.family = "uniform_square";
  m.meta.params = {{"n", static_cast<double>(n)}};
  return m;
}

} // namespace biharm
