#pragma once

#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qw1 {

using Complex = std::complex<double>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatC = Mat<Complex>;
using MatD = Mat<double>;
using VecD = Vec<double>;

// Shared numerical tolerances. Values are part of the library contract and
// are referenced by the tests.
inline constexpr double EIG_INPUT_HERM_TOL = 1e-10;   // hermiticity required by eigensolvers
inline constexpr double EIG_RECON_TOL = 1e-9;         // relative reconstruction error bound
inline constexpr double CHANNEL_PSD_FLOOR = -1e-9;    // smallest admissible delta eigenvalue
inline constexpr double CHANNEL_TRACE_TOL = 1e-9;     // partial-trace-of-delta residual bound
inline constexpr double KRAUS_UNITAL_TOL = 1e-9;      // sum K^dag K identity residual bound
inline constexpr double REF_STATE_TOL = 1e-10;        // reference-state validity bound
inline constexpr double DIFF_HERM_TOL = 1e-10;        // hermiticity bound for gauge inputs
inline constexpr double DIFF_TRACE_TOL = 1e-9;        // partial-trace-free bound for gauge inputs
inline constexpr double NEIGHBOUR_TOL = 1e-9;         // reduction-match bound for neighbour tests
inline constexpr double DEFAULT_SOLVE_TOL = 1e-8;     // interior-point convergence target
inline constexpr int DEFAULT_MAX_ITER = 200;

// Dimension vector of an ordered list of tensor factors together with the
// row-major composite index arithmetic used throughout the library.
struct FactorShape {
  std::vector<int> dims;

  FactorShape() = default;
  explicit FactorShape(std::vector<int> d) : dims(std::move(d)) {
    for (int v : dims)
      if (v < 1) throw std::invalid_argument("FactorShape: dimensions must be positive");
  }

  int factor_count() const { return static_cast<int>(dims.size()); }

  int total() const {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
  }

  // Decomposes a composite index into per-factor digits, leftmost factor
  // slowest (row-major, matching the Kronecker product ordering).
  void unrank(int index, int* digits) const {
    for (int f = factor_count() - 1; f >= 0; --f) {
      digits[f] = index % dims[f];
      index /= dims[f];
    }
  }

  int rank(const int* digits) const {
    int index = 0;
    for (int f = 0; f < factor_count(); ++f) index = index * dims[f] + digits[f];
    return index;
  }

  FactorShape dropped(int f) const {
    FactorShape out;
    for (int i = 0; i < factor_count(); ++i)
      if (i != f) out.dims.push_back(dims[i]);
    return out;
  }

  FactorShape subset(const std::vector<int>& keep) const {
    FactorShape out;
    for (int i : keep) out.dims.push_back(dims.at(i));
    return out;
  }
};

}  // namespace qw1
