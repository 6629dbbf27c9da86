#pragma once

#include <array>

namespace biharm {

/// Quadrature point on the reference triangle {xi, eta >= 0, xi + eta <= 1};
/// weights sum to 1 (multiply by the triangle area).
struct QuadraturePoint {
  double xi;
  double eta;
  double weight;
};

namespace detail {

inline constexpr std::array<QuadraturePoint, 12> make_degree6_rule() {
  // Symmetric 12-point rule of degree 6: two S21 orbits and one S111 orbit.
  constexpr double a1 = 0.24928674517091042129, w1 = 0.11678627572637936603;
  constexpr double a2 = 0.063089014491502228340, w2 = 0.050844906370206816921;
  constexpr double b = 0.053145049844816947353, c = 0.31035245103378440542,
                   w3 = 0.082851075618373575194;
  constexpr double e1 = 1.0 - 2.0 * a1, e2 = 1.0 - 2.0 * a2, d = 1.0 - b - c;
  return {{{a1, a1, w1}, {a1, e1, w1}, {e1, a1, w1},
           {a2, a2, w2}, {a2, e2, w2}, {e2, a2, w2},
           {b, c, w3}, {c, b, w3}, {b, d, w3}, {d, b, w3}, {c, d, w3}, {d, c, w3}}};
}

} // namespace detail

/// Exact for polynomials of total degree <= 6, enough for products of two
/// cubics on affine triangles.
inline constexpr std::array<QuadraturePoint, 12> triangle_rule_degree6 =
    detail::make_degree6_rule();

} // namespace biharm
