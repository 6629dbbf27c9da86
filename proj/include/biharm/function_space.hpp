#pragma once

#include <biharm/cubic_lagrange.hpp>
#include <biharm/mesh.hpp>

#include <array>
#include <memory>
#include <unordered_map>
#include <vector>

namespace biharm {

enum class DofKind { vertex, edge, interior };

/// Continuous cubic Lagrange space on a mesh.
///
/// Global numbering before permutation: vertices, then two dofs per edge
/// (the one nearer the lower-indexed endpoint first), then one per triangle.
/// `position` maps a global dof to its slot in the interior-first ordering
/// used by every assembled matrix: the n_i free dofs come first (ascending
/// global index), then the n_d Dirichlet dofs.
class FunctionSpace {
public:
  explicit FunctionSpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) { build(); }
  explicit FunctionSpace(Mesh mesh)
      : FunctionSpace(std::make_shared<const Mesh>(std::move(mesh))) {}

  const Mesh &mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }

  Index num_dofs() const { return static_cast<Index>(dof_coords_.size()); }
  Index num_interior() const { return n_i_; }
  Index num_dirichlet() const { return n_d_; }
  Index num_edges() const { return num_edges_; }

  const std::vector<Point> &dof_coords() const { return dof_coords_; }
  const std::vector<DofKind> &dof_kind() const { return dof_kind_; }
  bool is_dirichlet(Index global) const { return dirichlet_[global]; }

  /// Global dof -> interior-first position.
  const std::vector<Index> &position() const { return position_; }
  /// Interior-first position -> global dof.
  const std::vector<Index> &order() const { return order_; }

  /// Global dofs of triangle t in local node order.
  const std::array<Index, cubic::num_nodes> &cell_dofs(Index t) const { return cell_dofs_[t]; }

  /// Coordinates of the dof at an interior-first position.
  const Point &coord_at(Index pos) const { return dof_coords_[order_[pos]]; }

private:
  void build() {
    const Mesh &m = *mesh_;
    validate(m);
    const Index nv = m.num_vertices();
    const Index nt = m.num_triangles();

    std::unordered_map<std::uint64_t, Index> edge_ids;
    edge_ids.reserve(static_cast<std::size_t>(nt) * 2);
    std::vector<std::array<Index, 2>> edge_verts;
    std::vector<std::array<Index, 3>> tri_edges(nt);
    for (Index t = 0; t < nt; ++t) {
      const auto &tri = m.triangles[t];
      for (int e = 0; e < 3; ++e) {
        const Index a = tri[cubic::edges[e][0]], b = tri[cubic::edges[e][1]];
        auto [it, inserted] = edge_ids.try_emplace(edge_key(a, b), static_cast<Index>(edge_verts.size()));
        if (inserted)
          edge_verts.push_back({std::min(a, b), std::max(a, b)});
        tri_edges[t][e] = it->second;
      }
    }
    num_edges_ = static_cast<Index>(edge_verts.size());
    const Index ndof = nv + 2 * num_edges_ + nt;

    dof_coords_.resize(ndof);
    dof_kind_.resize(ndof);
    for (Index v = 0; v < nv; ++v) {
      dof_coords_[v] = m.vertices[v];
      dof_kind_[v] = DofKind::vertex;
    }
    for (Index e = 0; e < num_edges_; ++e) {
      const Point &a = m.vertices[edge_verts[e][0]], &b = m.vertices[edge_verts[e][1]];
      dof_coords_[nv + 2 * e] = (2.0 * a + b) / 3.0;
      dof_coords_[nv + 2 * e + 1] = (a + 2.0 * b) / 3.0;
      dof_kind_[nv + 2 * e] = dof_kind_[nv + 2 * e + 1] = DofKind::edge;
    }
    for (Index t = 0; t < nt; ++t) {
      dof_coords_[nv + 2 * num_edges_ + t] = centroid(m, t);
      dof_kind_[nv + 2 * num_edges_ + t] = DofKind::interior;
    }

    cell_dofs_.resize(nt);
    for (Index t = 0; t < nt; ++t) {
      const auto &tri = m.triangles[t];
      auto &d = cell_dofs_[t];
      for (int k = 0; k < 3; ++k)
        d[k] = tri[k];
      for (int e = 0; e < 3; ++e) {
        const Index a = tri[cubic::edges[e][0]];
        const Index id = tri_edges[t][e];
        const bool forward = a == edge_verts[id][0];
        d[3 + 2 * e] = nv + 2 * id + (forward ? 0 : 1);
        d[4 + 2 * e] = nv + 2 * id + (forward ? 1 : 0);
      }
      d[9] = nv + 2 * num_edges_ + t;
    }

    dirichlet_.assign(ndof, false);
    for (const auto &be : m.boundary_edges) {
      dirichlet_[be.v[0]] = dirichlet_[be.v[1]] = true;
      auto it = edge_ids.find(edge_key(be.v[0], be.v[1]));
      if (it != edge_ids.end()) {
        dirichlet_[nv + 2 * it->second] = dirichlet_[nv + 2 * it->second + 1] = true;
      }
    }

    order_.clear();
    order_.reserve(ndof);
    for (Index g = 0; g < ndof; ++g)
      if (!dirichlet_[g])
        order_.push_back(g);
    n_i_ = static_cast<Index>(order_.size());
    for (Index g = 0; g < ndof; ++g)
      if (dirichlet_[g])
        order_.push_back(g);
    n_d_ = ndof - n_i_;
    position_.resize(ndof);
    for (Index p = 0; p < ndof; ++p)
      position_[order_[p]] = p;
  }

  std::shared_ptr<const Mesh> mesh_;
  std::vector<Point> dof_coords_;
  std::vector<DofKind> dof_kind_;
  std::vector<bool> dirichlet_;
  std::vector<Index> position_, order_;
  std::vector<std::array<Index, cubic::num_nodes>> cell_dofs_;
  Index n_i_ = 0, n_d_ = 0, num_edges_ = 0;
};

inline FunctionSpace build_space(Mesh mesh) { return FunctionSpace(std::move(mesh)); }

} // namespace biharm
