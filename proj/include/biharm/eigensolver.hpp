#pragma once

// Inverse iteration on the mixed (Ciarlet-Raviart) system.
//
// With S = K M^{-1} K^T, one step solves
//
//     [ M  K^T ] [ v ]   [   0   ]
//     [ K   0  ] [ u ] = [ -B u0 ]
//
// so that S u = B u0 and v = -M^{-1} K^T u. B is the interior mass block
// (clamped plate) or the interior stiffness block (buckling plate). The
// eigenvalue estimate is the Rayleigh quotient u^T S u / u^T B u, where
// u^T S u = v^T M v.

#include <biharm/assembly.hpp>
#include <biharm/error.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/UmfPackSupport>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace biharm {

enum class Problem { clamped, buckling };

inline const char *to_string(Problem p) { return p == Problem::clamped ? "clamped" : "buckling"; }

inline Problem parse_problem(const std::string &s) {
  if (s == "clamped")
    return Problem::clamped;
  if (s == "buckling")
    return Problem::buckling;
  throw UsageError("unknown problem '" + s + "'");
}

struct SolverConfig {
  Problem problem = Problem::clamped;
  /// Relative change of the eigenvalue estimate that stops the iteration.
  double tol = 1e-12;
  /// Once the eigenvalue has settled, iteration continues until the
  /// residual ||u - lambda S^{-1} B u|| / ||u|| is below this.
  double residual_tol = 1e-8;
  int max_iter = 500;
  std::uint64_t seed = 1;
};

struct EigenPair {
  double lambda = 0.0;
  /// Coefficients over the n_i interior dofs, normalized to u^T B u = 1.
  Vector u;
  /// Coefficients over all n_i + n_d dofs; the discrete Laplacian of u.
  Vector v;
  /// ||u - lambda S^{-1} B u|| / ||u||.
  double residual = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  /// Rayleigh quotient after every step.
  std::vector<double> history;
};

inline void validate_config(const SolverConfig &c) {
  if (!(c.tol > 0.0))
    throw UsageError("solver tol must be positive");
  if (!(c.residual_tol > 0.0))
    throw UsageError("solver residual_tol must be positive");
  if (c.max_iter < 1)
    throw UsageError("solver max_iter must be at least 1");
}

/// Reusable direct solver for the saddle-point matrix. Backed by UMFPACK's
/// sparse LU, followed by iterative refinement steps against the assembled
/// matrix.
class Factorization {
public:
  explicit Factorization(const BlockSystem &sys, int refinement_steps = 1)
      : sys_(&sys), refinement_steps_(refinement_steps),
        lu_(std::make_unique<Eigen::UmfPackLU<SparseMatrix>>()) {
    A_ = sys.saddle();
    A_.makeCompressed();
    lu_->compute(A_);
    if (lu_->info() != Eigen::Success)
      throw SingularSystem("saddle-point factorization failed");
  }

  const BlockSystem &system() const { return *sys_; }

  /// Solves for (v, u) with right-hand side (0, b).
  std::pair<Vector, Vector> solve(const Vector &b) const {
    const Index nv = sys_->v_size();
    if (b.size() != sys_->n_i)
      throw UsageError("Factorization::solve: rhs has wrong length");
    Vector rhs = Vector::Zero(sys_->size());
    rhs.tail(sys_->n_i) = b;
    Vector x = lu_->solve(rhs);
    for (int s = 0; s < refinement_steps_; ++s) {
      const Vector r = rhs - A_ * x;
      x += lu_->solve(r);
    }
    if (!x.allFinite())
      throw SingularSystem("saddle-point solve produced non-finite values");
    return {x.head(nv), x.tail(sys_->n_i)};
  }

private:
  const BlockSystem *sys_;
  int refinement_steps_;
  SparseMatrix A_;
  std::unique_ptr<Eigen::UmfPackLU<SparseMatrix>> lu_;
};

inline Factorization factorize(const BlockSystem &sys) { return Factorization(sys); }

/// Interior stiffness block, the right-hand operator of the buckling problem.
inline SparseMatrix buckling_rhs(const FunctionSpace &space) {
  return assemble_stiffness(space).interior;
}

inline const SparseMatrix &rhs_operator(const BlockSystem &sys, Problem p) {
  return p == Problem::clamped ? sys.M_hat : sys.K_hat;
}

/// ||u - lambda S^{-1} B u|| / ||u||, costing one extra solve.
inline double inverse_residual(const Factorization &fac, const SparseMatrix &B,
                               const EigenPair &pair, const EigenPair *deflate = nullptr) {
  auto [v, w] = fac.solve(-pair.lambda * (B * pair.u));
  if (deflate)
    w -= deflate->u.dot(B * w) * deflate->u;
  return (w - pair.u).norm() / pair.u.norm();
}

namespace detail {

inline Vector random_start(Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = dist(gen);
  return x;
}

inline double b_norm(const SparseMatrix &B, const Vector &u) { return std::sqrt(u.dot(B * u)); }

inline EigenPair inverse_iteration(const Factorization &fac, const SparseMatrix &B,
                                   const SolverConfig &config, const EigenPair *deflate) {
  validate_config(config);
  const BlockSystem &sys = fac.system();
  if (B.rows() != sys.n_i || B.cols() != sys.n_i)
    throw UsageError("inverse iteration: rhs operator has wrong size");

  auto project = [&](Vector &u, Vector *v) {
    if (!deflate)
      return;
    const double c = deflate->u.dot(B * u);
    u -= c * deflate->u;
    if (v)
      *v -= c * deflate->v;
  };

  EigenPair pair;
  pair.u = random_start(sys.n_i, config.seed);
  project(pair.u, nullptr);
  double nrm = b_norm(B, pair.u);
  if (!(nrm > 0.0))
    throw NonConvergence("inverse iteration: degenerate start vector");
  pair.u /= nrm;

  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= config.max_iter; ++it) {
    auto [v, u] = fac.solve(-(B * pair.u));
    project(u, &v);
    const double ubu = u.dot(B * u);
    if (!(ubu > 0.0))
      throw NonConvergence("inverse iteration: iterate collapsed");
    const double lambda = v.dot(sys.M * v) / ubu;
    nrm = std::sqrt(ubu);
    pair.u = u / nrm;
    pair.v = v / nrm;
    pair.lambda = lambda;
    pair.iterations = it;
    pair.history.push_back(lambda);
    if (std::abs(lambda - previous) <= config.tol * std::abs(lambda)) {
      pair.residual = inverse_residual(fac, B, pair, deflate);
      if (pair.residual <= config.residual_tol) {
        pair.converged = true;
        break;
      }
    }
    previous = lambda;
  }
  return pair;
}

} // namespace detail

/// Smallest eigenpair by plain inverse iteration. A run that hits max_iter
/// returns its last iterate with `converged == false`.
inline EigenPair smallest_eigenpair(const Factorization &fac, const SparseMatrix &B,
                                    const SolverConfig &config) {
  EigenPair p = detail::inverse_iteration(fac, B, config, nullptr);
  if (!p.converged)
    p.residual = inverse_residual(fac, B, p);
  return p;
}

/// Extra block vectors carried by the subspace iterations below.
inline constexpr int guard_vectors = 2;

namespace detail {

/// Subspace inverse iteration on `wanted + guard_vectors` vectors with a
/// Rayleigh-Ritz step after every solve, optionally B-orthogonal to
/// `deflate`. The k-th pair converges at the rate lambda_k / lambda_{m+1}
/// with m the block size, so clustered eigenvalues above the wanted ones
/// cost little.
inline std::vector<EigenPair> block_inverse_iteration(const Factorization &fac,
                                                      const SparseMatrix &B,
                                                      const SolverConfig &config, int wanted,
                                                      const EigenPair *deflate) {
  validate_config(config);
  const BlockSystem &sys = fac.system();
  if (B.rows() != sys.n_i || B.cols() != sys.n_i)
    throw UsageError("block inverse iteration: rhs operator has wrong size");
  const int m = std::min<Index>(wanted + guard_vectors, sys.n_i - (deflate ? 1 : 0));
  if (m < wanted)
    throw UsageError("block inverse iteration: too few unknowns");

  auto project = [&](Vector &u, Vector *v) {
    if (!deflate)
      return;
    const double c = deflate->u.dot(B * u);
    u -= c * deflate->u;
    if (v)
      *v -= c * deflate->v;
  };

  std::vector<Vector> U(m), V(m);
  for (int j = 0; j < m; ++j) {
    U[j] = random_start(sys.n_i, config.seed + j);
    project(U[j], nullptr);
  }
  std::vector<EigenPair> out(wanted);
  std::vector<double> prev(wanted, std::numeric_limits<double>::infinity());
  int it = 1;
  for (; it <= config.max_iter; ++it) {
    for (int j = 0; j < m; ++j) {
      auto [v, u] = fac.solve(-(B * U[j]));
      project(u, &v);
      U[j] = std::move(u);
      V[j] = std::move(v);
    }
    // Rayleigh-Ritz: S_ij = v_i^T M v_j = u_i^T S u_j, G_ij = u_i^T B u_j.
    Eigen::MatrixXd S(m, m), G(m, m);
    std::vector<Vector> MV(m), BU(m);
    for (int j = 0; j < m; ++j) {
      MV[j] = sys.M * V[j];
      BU[j] = B * U[j];
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        S(i, j) = V[i].dot(MV[j]);
        G(i, j) = U[i].dot(BU[j]);
      }
    S = 0.5 * (S + S.transpose()).eval();
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, G);
    if (es.info() != Eigen::Success)
      throw NonConvergence("block inverse iteration: projected pencil is not definite");
    std::vector<Vector> U2(m, Vector::Zero(sys.n_i)), V2(m, Vector::Zero(sys.v_size()));
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        U2[k] += es.eigenvectors()(j, k) * U[j];
        V2[k] += es.eigenvectors()(j, k) * V[j];
      }
      const double n = b_norm(B, U2[k]);
      U2[k] /= n;
      V2[k] /= n;
    }
    U = std::move(U2);
    V = std::move(V2);
    bool done = true;
    for (int k = 0; k < wanted; ++k) {
      const double lambda = es.eigenvalues()[k];
      out[k].history.push_back(lambda);
      done = done && std::abs(lambda - prev[k]) <= config.tol * std::abs(lambda);
      prev[k] = lambda;
    }
    if (done || it == config.max_iter) {
      double worst = 0.0;
      for (int k = 0; k < wanted; ++k) {
        out[k].lambda = es.eigenvalues()[k];
        out[k].u = U[k];
        out[k].v = V[k];
        out[k].residual = inverse_residual(fac, B, out[k], deflate);
        worst = std::max(worst, out[k].residual);
      }
      if (done && worst <= config.residual_tol) {
        for (auto &p : out)
          p.converged = true;
        break;
      }
    }
  }
  for (auto &p : out)
    p.iterations = std::min(it, config.max_iter);
  return out;
}

} // namespace detail

/// Second eigenpair: subspace inverse iteration with every iterate
/// B-orthogonalized against `deflate` after each solve.
inline EigenPair second_eigenpair(const Factorization &fac, const SparseMatrix &B,
                                  const SolverConfig &config, const EigenPair &deflate) {
  if (deflate.u.size() != fac.system().n_i || deflate.v.size() != fac.system().v_size())
    throw UsageError("second_eigenpair: deflation vector has wrong size");
  return std::move(detail::block_inverse_iteration(fac, B, config, 1, &deflate).front());
}

/// Two smallest eigenpairs by subspace inverse iteration. A nearly
/// degenerate lowest pair costs no more than a well separated one.
inline std::pair<EigenPair, EigenPair> lowest_two_eigenpairs(const Factorization &fac,
                                                             const SparseMatrix &B,
                                                             const SolverConfig &config) {
  auto pairs = detail::block_inverse_iteration(fac, B, config, 2, nullptr);
  return {std::move(pairs[0]), std::move(pairs[1])};
}

} // namespace biharm
