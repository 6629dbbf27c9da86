#pragma once

// Cubic Lagrange element on the reference triangle.
//
// Local node numbering: 0..2 vertices, then two nodes per edge in the order
// edge (0,1), edge (1,2), edge (2,0) -- for edge (i,j) the node nearer i
// comes first -- and finally the centroid (node 9).

#include <Eigen/Core>

#include <array>

namespace biharm::cubic {

inline constexpr int num_nodes = 10;

using Values = Eigen::Matrix<double, num_nodes, 1>;
using Gradients = Eigen::Matrix<double, num_nodes, 2>;

/// Local edges as (start, end) vertex pairs, matching the node ordering.
inline constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};

/// Barycentric coordinates of the 10 nodes.
inline std::array<std::array<double, 3>, num_nodes> node_barycentrics() {
  std::array<std::array<double, 3>, num_nodes> out{};
  out[0] = {1, 0, 0};
  out[1] = {0, 1, 0};
  out[2] = {0, 0, 1};
  for (int e = 0; e < 3; ++e) {
    const int i = edges[e][0], j = edges[e][1];
    std::array<double, 3> near{}, far{};
    near[i] = 2.0 / 3.0;
    near[j] = 1.0 / 3.0;
    far[i] = 1.0 / 3.0;
    far[j] = 2.0 / 3.0;
    out[3 + 2 * e] = near;
    out[4 + 2 * e] = far;
  }
  out[9] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return out;
}

inline Values values_barycentric(double l0, double l1, double l2) {
  const double L[3] = {l0, l1, l2};
  Values n;
  for (int i = 0; i < 3; ++i)
    n[i] = 0.5 * L[i] * (3 * L[i] - 1) * (3 * L[i] - 2);
  for (int e = 0; e < 3; ++e) {
    const int i = edges[e][0], j = edges[e][1];
    n[3 + 2 * e] = 4.5 * L[i] * L[j] * (3 * L[i] - 1);
    n[4 + 2 * e] = 4.5 * L[i] * L[j] * (3 * L[j] - 1);
  }
  n[9] = 27.0 * L[0] * L[1] * L[2];
  return n;
}

inline Values values(double xi, double eta) { return values_barycentric(1 - xi - eta, xi, eta); }

/// Gradients with respect to (xi, eta).
inline Gradients gradients(double xi, double eta) {
  const double L[3] = {1 - xi - eta, xi, eta};
  // d L_k / d(xi, eta)
  const double dL[3][2] = {{-1, -1}, {1, 0}, {0, 1}};
  // Derivatives with respect to the barycentrics, then chain rule.
  Eigen::Matrix<double, num_nodes, 3> dB = Eigen::Matrix<double, num_nodes, 3>::Zero();
  for (int i = 0; i < 3; ++i)
    dB(i, i) = 0.5 * (27 * L[i] * L[i] - 18 * L[i] + 2);
  for (int e = 0; e < 3; ++e) {
    const int i = edges[e][0], j = edges[e][1];
    // 4.5 L_i L_j (3 L_i - 1)
    dB(3 + 2 * e, i) = 4.5 * L[j] * (6 * L[i] - 1);
    dB(3 + 2 * e, j) = 4.5 * L[i] * (3 * L[i] - 1);
    // 4.5 L_i L_j (3 L_j - 1)
    dB(4 + 2 * e, i) = 4.5 * L[j] * (3 * L[j] - 1);
    dB(4 + 2 * e, j) = 4.5 * L[i] * (6 * L[j] - 1);
  }
  dB(9, 0) = 27 * L[1] * L[2];
  dB(9, 1) = 27 * L[0] * L[2];
  dB(9, 2) = 27 * L[0] * L[1];

  Gradients g;
  for (int a = 0; a < num_nodes; ++a)
    for (int d = 0; d < 2; ++d)
      g(a, d) = dB(a, 0) * dL[0][d] + dB(a, 1) * dL[1][d] + dB(a, 2) * dL[2][d];
  return g;
}

} // namespace biharm::cubic
