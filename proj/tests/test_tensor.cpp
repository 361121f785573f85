#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qw1/tensor.hpp"
#include "testutil.hpp"

using namespace qw1;
using testutil::random_complex;
using testutil::random_density;
using testutil::random_hermitian;

TEST_CASE("composite index rank and unrank invert each other") {
  FactorShape shape({2, 3, 4});
  std::vector<int> digits(3);
  for (int i = 0; i < shape.total(); ++i) {
    shape.unrank(i, digits.data());
    CHECK(shape.rank(digits.data()) == i);
  }
  CHECK(shape.total() == 24);
  CHECK_THROWS_AS(FactorShape({2, 0}), std::invalid_argument);
}

TEST_CASE("kron entries follow the leftmost-slowest digit convention") {
  std::mt19937_64 rng(11);
  MatC a = random_complex(2, 2, rng);
  MatC b = random_complex(3, 3, rng);
  MatC k = kron(a, b);
  FactorShape shape({2, 3});
  int rd[2], cd[2];
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      shape.unrank(i, rd);
      shape.unrank(j, cd);
      // Not bit-identical: fused multiply-add contraction may differ between
      // the two evaluation sites.
      CHECK(std::abs(k(i, j) - a(rd[0], cd[0]) * b(rd[1], cd[1])) <= 1e-14);
    }
}

TEST_CASE("kron is associative up to rounding") {
  std::mt19937_64 rng(12);
  MatC a = random_complex(2, 2, rng), b = random_complex(2, 2, rng), c = random_complex(3, 3, rng);
  MatC lhs = kron(kron(a, b), c);
  MatC rhs = kron(a, kron(b, c));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-13 * lhs.cwiseAbs().maxCoeff());
}

TEST_CASE("permute_factors swaps kron factors and composes") {
  std::mt19937_64 rng(13);
  MatC a = random_complex(2, 2, rng), b = random_complex(3, 3, rng), c = random_complex(2, 2, rng);
  FactorShape shape({2, 3, 2});
  MatC m = kron(kron(a, b), c);

  MatC swapped = permute_factors(m, shape, {2, 1, 0});
  MatC expect = kron(kron(c, b), a);
  CHECK((swapped - expect).cwiseAbs().maxCoeff() <= 1e-13);

  // Applying a permutation and then another matches the composed gather.
  MatC once = permute_factors(m, shape, {1, 2, 0});
  FactorShape mid({3, 2, 2});
  MatC twice = permute_factors(once, mid, {2, 0, 1});
  MatC direct = permute_factors(m, shape, {0, 1, 2});
  // new_order {1,2,0} then {2,0,1}: slot k holds mid[{2,0,1}[k]] = original {0,1,2}[k].
  CHECK((twice - direct).cwiseAbs().maxCoeff() <= 1e-13);

  CHECK_THROWS_AS(permute_factors(m, shape, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(permute_factors(m, shape, {0, 0, 1}), std::invalid_argument);
}

TEST_CASE("partial_trace collapses kron factors to their traces") {
  std::mt19937_64 rng(14);
  MatC a = random_complex(2, 2, rng), b = random_complex(3, 3, rng), c = random_complex(2, 2, rng);
  FactorShape shape({2, 3, 2});
  MatC m = kron(kron(a, b), c);

  MatC t1 = partial_trace(m, shape, {1});
  MatC e1 = b.trace() * kron(a, c);
  CHECK((t1 - e1).cwiseAbs().maxCoeff() <= 1e-12);

  MatC t02 = partial_trace(m, shape, {0, 2});
  MatC e02 = a.trace() * c.trace() * b;
  CHECK((t02 - e02).cwiseAbs().maxCoeff() <= 1e-12);

  // Trace preservation on an arbitrary (non-product) matrix.
  MatC g = random_complex(12, 12, rng);
  CHECK(std::abs(partial_trace(g, shape, {0, 1}).trace() - g.trace()) <= 1e-12);

  // Tracing factors one at a time agrees with tracing them together.
  MatC stepwise = partial_trace(partial_trace(g, shape, {0}), FactorShape({3, 2}), {0});
  MatC joint = partial_trace(g, shape, {0, 1});
  CHECK((stepwise - joint).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(partial_trace(g, shape, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(g, shape, {2, 1}), std::invalid_argument);
}

TEST_CASE("state_contract weights one factor by a fixed state") {
  std::mt19937_64 rng(15);
  MatC a = random_complex(2, 2, rng), b = random_complex(3, 3, rng), c = random_complex(2, 2, rng);
  FactorShape shape({2, 3, 2});
  MatC m = kron(kron(a, b), c);
  MatC nu = random_density(3, rng);

  MatC got = state_contract(m, shape, 1, nu);
  MatC expect = (nu * b).trace() * kron(a, c);
  CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-12);

  // Against the maximally mixed state the contraction is a scaled partial trace.
  MatC g = random_complex(12, 12, rng);
  MatC mixed = MatC::Identity(3, 3) / 3.0;
  MatC lhs = state_contract(g, shape, 1, mixed);
  MatC rhs = partial_trace(g, shape, {1}) / 3.0;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(state_contract(g, shape, 3, nu), std::invalid_argument);
  CHECK_THROWS_AS(state_contract(g, shape, 0, nu), std::invalid_argument);
}

TEST_CASE("state_contract is linear in both arguments") {
  std::mt19937_64 rng(16);
  FactorShape shape({2, 2});
  MatC m1 = random_complex(4, 4, rng), m2 = random_complex(4, 4, rng);
  MatC n1 = random_hermitian(2, rng), n2 = random_hermitian(2, rng);
  MatC lhs = state_contract<MatC, MatC>((m1 + 2.0 * m2).eval(), shape, 0, (n1 - 0.5 * n2).eval());
  MatC rhs = state_contract(m1, shape, 0, n1) - 0.5 * state_contract(m1, shape, 0, n2) +
             2.0 * state_contract(m2, shape, 0, n1) - 1.0 * state_contract(m2, shape, 0, n2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("hermitian_eig reconstructs its input and sorts ascending") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 2 + static_cast<int>(rng() % 7);
    MatC h = random_hermitian(n, rng);
    HermitianEig e = hermitian_eig(h);
    MatC recon = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
    CHECK((recon - h).norm() <= EIG_RECON_TOL * std::max(1.0, h.norm()));
    for (int i = 1; i < n; ++i) CHECK(e.values(i) >= e.values(i - 1));
  }
  std::mt19937_64 rng2(18);
  MatC notherm = random_complex(3, 3, rng2);
  CHECK_THROWS_AS(hermitian_eig(notherm), std::invalid_argument);
}

TEST_CASE("trace_norm sums absolute eigenvalues") {
  MatC d = MatC::Zero(2, 2);
  d(0, 0) = Complex(3, 0);
  d(1, 1) = Complex(-4, 0);
  CHECK(trace_norm(d) == doctest::Approx(7.0).epsilon(1e-12));

  // Distance between orthogonal pure states has trace norm 2.
  MatC rho = MatC::Zero(2, 2), sigma = MatC::Zero(2, 2);
  rho(0, 0) = 1.0;
  sigma(1, 1) = 1.0;
  CHECK(trace_norm((rho - sigma).eval()) == doctest::Approx(2.0).epsilon(1e-12));

  // Unitary conjugation invariance.
  std::mt19937_64 rng(19);
  MatC h = random_hermitian(4, rng);
  MatC u = hermitian_eig(random_hermitian(4, rng)).vectors;
  CHECK(trace_norm((u * h * u.adjoint()).eval()) == doctest::Approx(trace_norm(h)).epsilon(1e-10));
}
