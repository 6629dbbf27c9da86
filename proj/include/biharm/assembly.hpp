#pragma once

#include <biharm/cubic_lagrange.hpp>
#include <biharm/error.hpp>
#include <biharm/function_space.hpp>
#include <biharm/quadrature.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace biharm {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using ElementMatrix = Eigen::Matrix<double, cubic::num_nodes, cubic::num_nodes>;

struct ElementMatrices {
  ElementMatrix mass;
  ElementMatrix stiffness;
};

namespace detail {

struct ReferenceTables {
  std::array<cubic::Values, triangle_rule_degree6.size()> values;
  std::array<cubic::Gradients, triangle_rule_degree6.size()> gradients;

  ReferenceTables() {
    for (std::size_t q = 0; q < triangle_rule_degree6.size(); ++q) {
      values[q] = cubic::values(triangle_rule_degree6[q].xi, triangle_rule_degree6[q].eta);
      gradients[q] = cubic::gradients(triangle_rule_degree6[q].xi, triangle_rule_degree6[q].eta);
    }
  }
};

inline const ReferenceTables &reference_tables() {
  static const ReferenceTables tables;
  return tables;
}

} // namespace detail

/// Mass and stiffness matrices of one affine cubic element.
inline ElementMatrices element_matrices(const Point &a, const Point &b, const Point &c) {
  Eigen::Matrix2d J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  const double det = J.determinant();
  if (!(det > 0.0))
    throw QuadratureError("element with non-positive Jacobian");
  const Eigen::Matrix2d Jinv = J.inverse();
  const double area = 0.5 * det;

  const auto &tab = detail::reference_tables();
  ElementMatrices em;
  em.mass.setZero();
  em.stiffness.setZero();
  for (std::size_t q = 0; q < triangle_rule_degree6.size(); ++q) {
    const double w = triangle_rule_degree6[q].weight * area;
    const auto &N = tab.values[q];
    const cubic::Gradients G = tab.gradients[q] * Jinv;
    em.mass.noalias() += w * N * N.transpose();
    em.stiffness.noalias() += w * G * G.transpose();
  }
  return em;
}

struct MassMatrices {
  /// (n_i + n_d)^2, interior-first numbering.
  SparseMatrix full;
  /// Principal n_i x n_i interior block.
  SparseMatrix interior;
};

struct StiffnessMatrices {
  SparseMatrix full;
  /// Rows of the interior test functions: n_i x (n_i + n_d).
  SparseMatrix coupling;
  /// Principal n_i x n_i interior block.
  SparseMatrix interior;
};

namespace detail {

inline std::pair<SparseMatrix, SparseMatrix> assemble_full(const FunctionSpace &space) {
  const Mesh &m = space.mesh();
  const Index n = space.num_dofs();
  const auto &pos = space.position();
  std::vector<Eigen::Triplet<double>> mass, stiff;
  const std::size_t per = cubic::num_nodes * cubic::num_nodes;
  mass.reserve(per * m.triangles.size());
  stiff.reserve(per * m.triangles.size());
  for (Index t = 0; t < m.num_triangles(); ++t) {
    const auto &tri = m.triangles[t];
    const auto em = element_matrices(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
    const auto &dofs = space.cell_dofs(t);
    for (int a = 0; a < cubic::num_nodes; ++a) {
      const Index ia = pos[dofs[a]];
      for (int b = 0; b < cubic::num_nodes; ++b) {
        const Index ib = pos[dofs[b]];
        mass.emplace_back(ia, ib, em.mass(a, b));
        stiff.emplace_back(ia, ib, em.stiffness(a, b));
      }
    }
  }
  SparseMatrix M(n, n), A(n, n);
  M.setFromTriplets(mass.begin(), mass.end());
  A.setFromTriplets(stiff.begin(), stiff.end());
  return {std::move(M), std::move(A)};
}

} // namespace detail

inline MassMatrices assemble_mass(const FunctionSpace &space) {
  auto [M, A] = detail::assemble_full(space);
  const Index ni = space.num_interior();
  MassMatrices out;
  out.interior = M.topLeftCorner(ni, ni);
  out.full = std::move(M);
  return out;
}

inline StiffnessMatrices assemble_stiffness(const FunctionSpace &space) {
  auto [M, A] = detail::assemble_full(space);
  const Index ni = space.num_interior();
  StiffnessMatrices out;
  out.coupling = A.topRows(ni);
  out.interior = A.topLeftCorner(ni, ni);
  out.full = std::move(A);
  return out;
}

/// Blocks of the mixed system [[M, K^T], [K, 0]] acting on (v, u): v over
/// all n_i + n_d dofs, u over the n_i interior dofs.
struct BlockSystem {
  SparseMatrix M;       // (n_i + n_d)^2 mass
  SparseMatrix K;       // n_i x (n_i + n_d) stiffness rows
  SparseMatrix M_hat;   // n_i^2 interior mass
  SparseMatrix K_hat;   // n_i^2 interior stiffness
  Index n_i = 0;
  Index n_d = 0;

  Index v_size() const { return n_i + n_d; }
  Index size() const { return n_i + n_d + n_i; }

  /// The symmetric indefinite saddle-point matrix.
  SparseMatrix saddle() const {
    const Index nv = v_size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(M.nonZeros() + 2 * K.nonZeros()));
    for (int k = 0; k < M.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(M, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < K.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(K, k); it; ++it) {
        trip.emplace_back(nv + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), nv + it.row(), it.value());
      }
    SparseMatrix S(size(), size());
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
  }

  /// Applies the saddle-point operator to (v, u).
  std::pair<Vector, Vector> apply(const Vector &v, const Vector &u) const {
    Vector top = M * v + K.transpose() * u;
    Vector bottom = K * v;
    return {std::move(top), std::move(bottom)};
  }
};

inline BlockSystem assemble_system(const FunctionSpace &space) {
  auto [M, A] = detail::assemble_full(space);
  const Index ni = space.num_interior();
  BlockSystem sys;
  sys.n_i = ni;
  sys.n_d = space.num_dirichlet();
  sys.M_hat = M.topLeftCorner(ni, ni);
  sys.K_hat = A.topLeftCorner(ni, ni);
  sys.K = A.topRows(ni);
  sys.M = std::move(M);
  return sys;
}

/// Writes "i j value" lines (0-based) for every stored entry.
inline void write_coordinate(const std::string &path, const SparseMatrix &A) {
  std::ofstream os(path);
  if (!os)
    throw UsageError("cannot write " + path);
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  char buf[96];
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value());
      os << buf;
    }
}

/// Dumps M, K, M_hat and K_hat into `dir` (created if needed).
inline void dump_system(const std::string &dir, const BlockSystem &sys) {
  std::filesystem::create_directories(dir);
  write_coordinate(dir + "/M.txt", sys.M);
  write_coordinate(dir + "/K.txt", sys.K);
  write_coordinate(dir + "/M_hat.txt", sys.M_hat);
  write_coordinate(dir + "/K_hat.txt", sys.K_hat);
}

} // namespace biharm
