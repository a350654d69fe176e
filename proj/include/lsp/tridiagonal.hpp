#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace lsp {

class TridiagonalError : public std::runtime_error {
 public:
  TridiagonalError(std::size_t row, double pivot)
      : std::runtime_error("tridiagonal solve failed: pivot " + std::to_string(pivot) +
                           " at row " + std::to_string(row) +
                           " (diagonal dominance lost; refine dt or the rate grid)"),
        row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Thomas algorithm. lower[0] and upper[n-1] are ignored. `scratch` must hold
/// n values; `x` may alias `rhs`.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> x, std::span<double> scratch) {
  const std::size_t n = diag.size();
  double pivot = diag[0];
  if (!(std::abs(pivot) > 1e-300)) throw TridiagonalError(0, pivot);
  scratch[0] = upper[0] / pivot;
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i] * scratch[i - 1];
    if (!(std::abs(pivot) > 1e-300)) throw TridiagonalError(i, pivot);
    scratch[i] = (i + 1 < n) ? upper[i] / pivot : 0.0;
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= scratch[i] * x[i + 1];
}

}  // namespace lsp
