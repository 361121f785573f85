#pragma once

// Seeded random matrix helpers shared by the test binaries. Tests never use
// unseeded randomness; every instance is reproducible from the constants in
// the test source.

#include <random>

#include "qw1/types.hpp"

namespace qw1::testutil {

inline MatC random_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatC m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline MatC random_hermitian(int n, std::mt19937_64& rng) {
  MatC a = random_complex(n, n, rng);
  return 0.5 * (a + a.adjoint()).eval();
}

// Random full-rank density matrix (PSD, unit trace).
inline MatC random_density(int n, std::mt19937_64& rng) {
  MatC a = random_complex(n, n, rng);
  MatC p = a * a.adjoint() + 1e-6 * MatC::Identity(n, n);
  return p / p.trace().real();
}

}  // namespace qw1::testutil
