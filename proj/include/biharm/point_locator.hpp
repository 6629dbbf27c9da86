#pragma once

#include <biharm/mesh.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace biharm {

struct Location {
  Index triangle = -1;
  std::array<double, 3> barycentric{};
};

/// Barycentric coordinates of p in triangle t.
inline std::array<double, 3> barycentric(const Mesh &m, Index t, const Point &p) {
  const auto &tri = m.triangles[t];
  const Point &a = m.vertices[tri[0]], &b = m.vertices[tri[1]], &c = m.vertices[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
  const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

/// Point location for meshes graded around a center point. Triangles are
/// bucketed by the logarithm of their distance range from the center, so a
/// query only scans the triangles of one radial shell; an exhaustive scan is
/// the fallback.
class PointLocator {
public:
  PointLocator(const Mesh &mesh, const Point &center, double shell_ratio = 1.25)
      : mesh_(&mesh), center_(center), log_base_(std::log(shell_ratio)) {
    r0_ = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    for (const auto &v : mesh.vertices) {
      const double d = (v - center).norm();
      if (d > 0.0)
        r0_ = std::min(r0_, d);
      rmax = std::max(rmax, d);
    }
    if (!std::isfinite(r0_))
      r0_ = 1.0;
    r0_ *= 0.5;
    buckets_.resize(static_cast<std::size_t>(bucket(rmax)) + 1);
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
      const auto [dmin, dmax] = distance_range(t);
      for (int b = bucket(dmin); b <= bucket(dmax); ++b)
        buckets_[b].push_back(t);
    }
  }

  std::optional<Location> locate(const Point &p) const {
    const double r = (p - center_).norm();
    const int b = bucket(r);
    if (b < static_cast<int>(buckets_.size())) {
      if (auto loc = best_of(buckets_[b], p))
        return loc;
    }
    std::vector<Index> all(mesh_->triangles.size());
    for (Index t = 0; t < mesh_->num_triangles(); ++t)
      all[t] = t;
    return best_of(all, p);
  }

  const Mesh &mesh() const { return *mesh_; }

private:
  int bucket(double r) const {
    if (r <= r0_)
      return 0;
    return 1 + static_cast<int>(std::floor(std::log(r / r0_) / log_base_));
  }

  std::pair<double, double> distance_range(Index t) const {
    const auto &tri = mesh_->triangles[t];
    double dmax = 0.0;
    for (Index v : tri)
      dmax = std::max(dmax, (mesh_->vertices[v] - center_).norm());
    const auto l = barycentric(*mesh_, t, center_);
    if (l[0] >= 0.0 && l[1] >= 0.0 && l[2] >= 0.0)
      return {0.0, dmax};
    double dmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Point &a = mesh_->vertices[tri[k]], &b = mesh_->vertices[tri[(k + 1) % 3]];
      const Point ab = b - a;
      const double s = std::clamp((center_ - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      dmin = std::min(dmin, (a + s * ab - center_).norm());
    }
    return {dmin, dmax};
  }

  std::optional<Location> best_of(const std::vector<Index> &cands, const Point &p) const {
    constexpr double tolerance = 1e-10;
    Location best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (Index t : cands) {
      const auto l = barycentric(*mesh_, t, p);
      const double mn = std::min({l[0], l[1], l[2]});
      if (mn > best_min) {
        best_min = mn;
        best = {t, l};
        if (mn >= 0.0)
          break;
      }
    }
    if (best.triangle < 0 || best_min < -tolerance)
      return std::nullopt;
    return best;
  }

  const Mesh *mesh_;
  Point center_;
  double log_base_;
  double r0_ = 1.0;
  std::vector<std::vector<Index>> buckets_;
};

} // namespace biharm
