#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace difflan {

/// Symmetric tridiagonal matrix: diag[0..n-1], off[0..n-2].
struct SymmetricTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }
  void apply(std::span<const double> x, std::span<double> out) const;
  double inf_norm() const;
};

/// All eigenvalues by the implicit-shift QL iteration, unsorted.
/// Throws NumericError if any eigenvalue fails to converge.
std::vector<double> ql_eigenvalues(const SymmetricTridiagonal& t);

/// One eigenvector of t for an eigenvalue estimate lambda, by inverse
/// iteration with a partially pivoted tridiagonal factorization.
/// Returns a unit vector (Euclidean norm). `tag` seeds the deterministic
/// start vector.
std::vector<double> inverse_iteration(const SymmetricTridiagonal& t, double lambda,
                                      std::uint64_t tag);

/// Thomas solve of a general tridiagonal system (no pivoting; intended
/// for diagonally dominant systems such as Crank-Nicolson steps).
/// lower[0] and upper[n-1] are ignored.
void tridiagonal_solve(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x);

}  // namespace difflan
