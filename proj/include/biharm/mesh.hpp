#pragma once

#include <biharm/error.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace biharm {

using Index = std::int32_t;
using Point = Eigen::Vector2d;

enum class BoundaryTag { dirichlet, arc_dirichlet };

inline const char *to_string(BoundaryTag t) {
  return t == BoundaryTag::dirichlet ? "dirichlet" : "arc_dirichlet";
}

inline BoundaryTag parse_boundary_tag(const std::string &s) {
  if (s == "dirichlet" || s == "0")
    return BoundaryTag::dirichlet;
  if (s == "arc_dirichlet" || s == "1")
    return BoundaryTag::arc_dirichlet;
  throw InvalidSpec("unknown boundary tag '" + s + "'");
}

struct BoundaryEdge {
  std::array<Index, 2> v;
  BoundaryTag tag = BoundaryTag::dirichlet;
};

/// Corner the eigenfunction is probed at, with the unit bisector direction
/// pointing into the domain.
struct Corner {
  Index vertex = -1;
  Point bisector = Point::Zero();
  double angle = 0.0;
};

/// Describes which generator produced a mesh and with which parameters.
struct DomainMeta {
  std::string family;
  std::map<std::string, double> params;
  std::string variant;

  double param(const std::string &key, double fallback = 0.0) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<Index, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::optional<Corner> corner;
  DomainMeta meta;

  Index num_vertices() const { return static_cast<Index>(vertices.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles.size()); }
};

inline double signed_area(const Point &a, const Point &b, const Point &c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

inline double signed_area(const Mesh &m, Index t) {
  const auto &tri = m.triangles[t];
  return signed_area(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
}

inline double diameter(const Mesh &m, Index t) {
  const auto &tri = m.triangles[t];
  const auto &a = m.vertices[tri[0]], &b = m.vertices[tri[1]], &c = m.vertices[tri[2]];
  return std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
}

inline Point centroid(const Mesh &m, Index t) {
  const auto &tri = m.triangles[t];
  return (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) / 3.0;
}

inline std::uint64_t edge_key(Index a, Index b) {
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct MeshReport {
  bool positive_areas = true;
  bool conforming = true;
  bool boundary_tagged = true;
  bool closed_loops = true;
  double min_area = 0.0;
  std::string message;

  bool ok() const { return positive_areas && conforming && boundary_tagged && closed_loops; }
};

/// Checks orientation, edge conformity and that the tagged boundary edges are
/// exactly the edges used by one triangle and form closed loops.
inline MeshReport check_mesh(const Mesh &m) {
  MeshReport r;
  r.min_area = std::numeric_limits<double>::infinity();
  std::unordered_map<std::uint64_t, int> use;
  use.reserve(m.triangles.size() * 3);
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto &tri = m.triangles[t];
    for (Index v : tri) {
      if (v < 0 || v >= m.num_vertices()) {
        r.conforming = false;
        r.message = "triangle references a missing vertex";
        return r;
      }
    }
    const double a = signed_area(m, t);
    r.min_area = std::min(r.min_area, a);
    if (!(a > 0.0)) {
      r.positive_areas = false;
      r.message = "triangle " + std::to_string(t) + " has non-positive area";
    }
    for (int k = 0; k < 3; ++k)
      ++use[edge_key(tri[k], tri[(k + 1) % 3])];
  }
  std::unordered_map<std::uint64_t, int> tagged;
  for (const auto &e : m.boundary_edges)
    ++tagged[edge_key(e.v[0], e.v[1])];
  for (const auto &[key, count] : use) {
    if (count > 2) {
      r.conforming = false;
      r.message = "edge shared by more than two triangles";
    } else if (count == 1 && !tagged.count(key)) {
      r.boundary_tagged = false;
      r.message = "boundary edge without a tag";
    }
  }
  for (const auto &[key, count] : tagged) {
    auto it = use.find(key);
    if (count != 1 || it == use.end() || it->second != 1) {
      r.conforming = false;
      r.message = "tagged edge is not a boundary edge";
    }
  }
  // Closed loops: every boundary vertex has even boundary degree.
  std::unordered_map<Index, int> degree;
  for (const auto &e : m.boundary_edges) {
    ++degree[e.v[0]];
    ++degree[e.v[1]];
  }
  for (const auto &[v, d] : degree) {
    if (d % 2 != 0) {
      r.closed_loops = false;
      r.message = "boundary does not close";
    }
  }
  return r;
}

inline void validate(const Mesh &m) {
  if (m.triangles.empty())
    throw InvalidSpec("mesh has no triangles");
  const auto r = check_mesh(m);
  if (!r.ok())
    throw InvariantViolation("invalid mesh: " + r.message);
}

/// Text format: "nv nt nb", nv lines "x y", nt lines "i j k", nb lines
/// "i j tag".
inline void write_mesh(std::ostream &os, const Mesh &m) {
  os << m.vertices.size() << ' ' << m.triangles.size() << ' ' << m.boundary_edges.size()
     << '\n';
  char buf[96];
  for (const auto &p : m.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    os << buf;
  }
  for (const auto &t : m.triangles)
    os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto &e : m.boundary_edges)
    os << e.v[0] << ' ' << e.v[1] << ' ' << to_string(e.tag) << '\n';
}

inline Mesh read_mesh(std::istream &is) {
  Mesh m;
  std::size_t nv = 0, nt = 0, nb = 0;
  if (!(is >> nv >> nt >> nb))
    throw InvalidSpec("mesh file: bad header");
  m.vertices.resize(nv);
  for (auto &p : m.vertices)
    if (!(is >> p.x() >> p.y()))
      throw InvalidSpec("mesh file: truncated vertex block");
  m.triangles.resize(nt);
  for (auto &t : m.triangles)
    if (!(is >> t[0] >> t[1] >> t[2]))
      throw InvalidSpec("mesh file: truncated triangle block");
  m.boundary_edges.resize(nb);
  for (auto &e : m.boundary_edges) {
    std::string tag;
    if (!(is >> e.v[0] >> e.v[1] >> tag))
      throw InvalidSpec("mesh file: truncated boundary block");
    e.tag = parse_boundary_tag(tag);
  }
  m.meta.family = "file";
  return m;
}

inline void save_mesh(const std::string &path, const Mesh &m) {
  std::ofstream os(path);
  if (!os)
    throw UsageError("cannot write " + path);
  write_mesh(os, m);
}

inline Mesh load_mesh(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    throw UsageError("cannot read " + path);
  return read_mesh(is);
}

} // namespace biharm
