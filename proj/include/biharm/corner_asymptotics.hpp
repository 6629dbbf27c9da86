#pragma once

// Leading corner exponent of clamped-plate eigenfunctions.
//
// Near a corner of internal angle theta the eigenfunction behaves like
// r^alpha cos(beta log r + phi) along the bisector, where p = root of
//
//     p + 1 + sin((p + 1) theta) / sin(theta) = 0
//
// with smallest positive real part, alpha = Re(p) + 2 and beta = Im(p).
// Consecutive zeros then shrink by e^{pi/beta} and consecutive extremum
// values by e^{alpha pi/beta}.

#include <biharm/error.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace biharm {

struct CornerExponent {
  double theta = 0.0;
  /// Root of the transcendental corner equation.
  std::complex<double> root;
  /// Exponent of the leading term of u; Re(root) + 2.
  double alpha = 0.0;
  /// Im(root) >= 0; exactly zero on the non-oscillatory side.
  double beta = 0.0;
  std::optional<double> zero_ratio;
  std::optional<double> extremum_value_ratio;

  bool oscillatory() const noexcept { return beta > 0.0; }
};

namespace corner {

inline constexpr double real_root_threshold = 1e-8;
inline constexpr double start_theta = 10.0 * std::numbers::pi / 180.0;
// Close to the first-row root at 10 degrees (alpha = 25.14, beta = 12.86).
inline constexpr std::complex<double> start_guess{23.0, 13.0};

inline std::complex<double> residual(std::complex<double> p, double theta) {
  return p + 1.0 + std::sin((p + 1.0) * theta) / std::sin(theta);
}

inline std::complex<double> derivative(std::complex<double> p, double theta) {
  return 1.0 + theta * std::cos((p + 1.0) * theta) / std::sin(theta);
}

inline double real_residual(double p, double theta) {
  return p + 1.0 + std::sin((p + 1.0) * theta) / std::sin(theta);
}

/// Plain complex Newton. Returns nullopt on divergence or stagnation.
inline std::optional<std::complex<double>> newton(std::complex<double> p,
                                                  double theta,
                                                  int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    const auto f = residual(p, theta);
    const auto df = derivative(p, theta);
    if (std::abs(df) == 0.0 || !std::isfinite(std::abs(f)))
      return std::nullopt;
    const auto step = f / df;
    p -= step;
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
      return std::nullopt;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(p))) {
      if (std::abs(residual(p, theta)) < 1e-10)
        return p;
      return std::nullopt;
    }
  }
  if (std::abs(residual(p, theta)) < 1e-11)
    return p;
  return std::nullopt;
}

/// Smallest positive real root on the real restriction. Scans for the first
/// sign change; a local extremum of the residual between samples is located
/// by golden-section search first, so that a pair of roots closer than the
/// scan step (just past the critical angle) is still split.
inline std::optional<double> smallest_real_root(double theta,
                                                double upper = 40.0) {
  const double step = 1e-4;
  auto f = [theta](double x) { return real_residual(x, theta); };
  auto bisect = [&](double lo, double hi) {
    const bool neg = f(lo) < 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      ((f(mid) < 0.0) == neg ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  // Extremum of f on [lo, hi] toward zero from the side of sign s.
  auto extremum = [&](double lo, double hi, double s) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    for (int i = 0; i < 100 && hi - lo > 1e-15 * hi; ++i) {
      if (s * f(x1) < s * f(x2)) {
        hi = x2;
        x2 = x1;
        x1 = hi - g * (hi - lo);
      } else {
        lo = x1;
        x1 = x2;
        x2 = lo + g * (hi - lo);
      }
    }
    return 0.5 * (lo + hi);
  };
  double a = step, fa = f(a);
  double prev = a - step, fprev = f(prev);
  for (double b = a + step; b <= upper; b += step) {
    const double fb = f(b);
    if (fa == 0.0)
      return a;
    if ((fa < 0.0) != (fb < 0.0))
      return bisect(a, b);
    // |f| dips between prev and b: look for a hidden pair of roots.
    const double s = fa > 0.0 ? 1.0 : -1.0;
    if (s * fa < s * fprev && s * fa < s * fb) {
      const double x = extremum(prev, b, s);
      const double fx = f(x);
      if ((fx < 0.0) != (fa < 0.0))
        return bisect(prev, x);
      if (std::abs(fx) <= 1e-13 * (1.0 + x))
        return x;
    }
    prev = a;
    fprev = fa;
    a = b;
    fa = fb;
  }
  return std::nullopt;
}

inline CornerExponent make_exponent(double theta, std::complex<double> root) {
  CornerExponent e;
  e.theta = theta;
  if (std::abs(root.imag()) < real_root_threshold)
    root = {root.real(), 0.0};
  root = {root.real(), std::abs(root.imag())};
  e.root = root;
  e.alpha = root.real() + 2.0;
  e.beta = root.imag();
  if (e.beta > 0.0) {
    e.zero_ratio = std::exp(std::numbers::pi / e.beta);
    e.extremum_value_ratio = std::exp(e.alpha * std::numbers::pi / e.beta);
  }
  return e;
}

/// Tracks the smallest-real-part branch from the 10 degree start value to
/// `theta`, halving the continuation step (1 deg down to 0.1 deg) whenever
/// Newton fails.
inline std::complex<double> continue_branch(double theta) {
  constexpr double deg = std::numbers::pi / 180.0;
  constexpr double max_step = 1.0 * deg;
  constexpr double min_step = 0.1 * deg;

  auto p0 = newton(start_guess, start_theta);
  if (!p0)
    throw NonConvergence("corner exponent: Newton failed at the 10 degree start");
  std::complex<double> p = *p0;
  double t = start_theta;
  const double dir = theta >= t ? 1.0 : -1.0;
  double step = max_step;
  while (dir * (theta - t) > 0.0) {
    const double next = dir * (theta - t) <= step ? theta : t + dir * step;
    // Once the branch is real, keep it real so Newton tracks the real root.
    std::complex<double> guess = p;
    if (std::abs(p.imag()) < real_root_threshold)
      guess = {p.real(), 0.0};
    auto q = newton(guess, next);
    if (!q || q->real() <= 0.0 || std::abs(*q - p) > 0.5 + 3.0 * std::abs(p) * std::abs(next - t) / t) {
      if (step <= min_step * (1.0 + 1e-12))
        throw NonConvergence("corner exponent: continuation failed near theta = " +
                             std::to_string(next / deg) + " deg");
      step = std::max(0.5 * step, min_step);
      continue;
    }
    p = *q;
    t = next;
    step = std::min(2.0 * step, max_step);
  }
  return p;
}

} // namespace corner

/// Leading corner exponent for internal angle theta (radians).
inline CornerExponent solve_exponent(double theta) {
  if (!(theta > 0.0 && theta < std::numbers::pi) || std::sin(theta) == 0.0)
    throw DomainError("solve_exponent: theta must lie in (0, pi)");

  auto p = corner::continue_branch(theta);
  if (std::abs(p.imag()) < corner::real_root_threshold) {
    // Past the collision of the conjugate pair: two real roots appear and the
    // continuation may land on either; take the smaller one.
    const auto r = corner::smallest_real_root(theta, p.real() + 1.0);
    if (!r)
      throw NonConvergence("solve_exponent: no positive real root found");
    p = {*r, 0.0};
  }
  return corner::make_exponent(theta, p);
}

/// (e^{pi/beta}, e^{alpha pi/beta}).
inline std::pair<double, double> ratios(const CornerExponent &e) {
  if (!(e.beta > 0.0))
    throw NoOscillation("ratios: exponent has no imaginary part");
  return {std::exp(std::numbers::pi / e.beta),
          std::exp(e.alpha * std::numbers::pi / e.beta)};
}

/// Angle above which the corner equation only has real roots, localized by
/// bisection on [140 deg, 150 deg] to the given tolerance.
inline double critical_angle(double tol) {
  if (!(tol > 0.0))
    throw DomainError("critical_angle: tol must be positive");
  constexpr double deg = std::numbers::pi / 180.0;
  double lo = 140.0 * deg, hi = 150.0 * deg;
  auto oscillates = [](double t) { return solve_exponent(t).beta > 0.0; };
  if (!oscillates(lo) || oscillates(hi))
    throw NonConvergence("critical_angle: bracket does not contain the transition");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (oscillates(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<CornerExponent> exponent_table(std::span<const double> thetas) {
  std::vector<CornerExponent> out;
  out.reserve(thetas.size());
  for (double t : thetas)
    out.push_back(solve_exponent(t));
  return out;
}

} // namespace biharm
