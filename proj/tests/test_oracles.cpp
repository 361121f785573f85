#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qw1/channel.hpp"
#include "qw1/gauge.hpp"
#include "qw1/oracles.hpp"
#include "qw1/tensor.hpp"
#include "testutil.hpp"

using qw1::Channel;
using qw1::Complex;
using qw1::CompositeSystem;
using qw1::HermitianDifference;
using qw1::MatC;
using qw1::SubsetSpec;
using qw1::VecD;
using qw1::W1Result;

namespace {

// Diagonal process matrix with unit input-sum per output digit: a classical
// channel, suitable for the diagonal linear-program oracle.
Channel random_diagonal_channel(const CompositeSystem& sys, std::mt19937_64& rng) {
  const int q = sys.in_total();
  const int r = sys.out_total();
  VecD diag(r * q);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int b = 0; b < r; ++b) {
    double sum = 0.0;
    for (int x = 0; x < q; ++x) {
      const double v = u(rng);
      diag(b * q + x) = v;
      sum += v;
    }
    for (int x = 0; x < q; ++x) diag(b * q + x) /= sum;
  }
  MatC d = diag.cast<Complex>().asDiagonal();
  return Channel(sys, d);
}

}  // namespace

TEST_CASE("trace distance oracle reproduces known values") {
  MatC zero = MatC::Zero(2, 2), one = MatC::Zero(2, 2);
  zero(0, 0) = 1.0;
  one(1, 1) = 1.0;
  CHECK(std::abs(qw1::trace_distance_oracle(zero, one) - 1.0) < 1e-12);
  CHECK(qw1::trace_distance_oracle(zero, zero) < 1e-12);
  CHECK(std::abs(qw1::trace_distance_oracle(zero, MatC::Identity(2, 2) / 2.0) - 0.5) < 1e-12);

  std::mt19937_64 rng(7);
  MatC rho = qw1::testutil::random_density(3, rng);
  MatC sigma = qw1::testutil::random_density(3, rng);
  CHECK(std::abs(qw1::trace_distance_oracle(rho, sigma) -
                 0.5 * qw1::trace_norm(rho - sigma)) < 1e-12);
  CHECK_THROWS(qw1::trace_distance_oracle(rho, MatC::Identity(2, 2)));
}

TEST_CASE("diagonal linear program matches the semidefinite value") {
  std::mt19937_64 rng(17);
  std::vector<CompositeSystem> systems = {CompositeSystem({2}, {2}),
                                          CompositeSystem({3}, {2}),
                                          CompositeSystem({2, 2}, {2, 2})};
  for (const CompositeSystem& sys : systems) {
    for (int rep = 0; rep < 2; ++rep) {
      Channel a = random_diagonal_channel(sys, rng);
      Channel b = random_diagonal_channel(sys, rng);
      HermitianDifference d = qw1::channel_difference(a, b);
      const double lp = qw1::diagonal_gauge_upper_bound(d);
      W1Result sdp = qw1::w1_distance(a, b);
      REQUIRE(sdp.status == qw1::SolveStatus::optimal);
      CHECK(std::abs(lp - sdp.value) < 1e-6);
    }
  }
}

TEST_CASE("diagonal oracle rejects off-diagonal data") {
  CompositeSystem sys({2}, {2});
  Channel a = qw1::random_channel(sys, 23);
  Channel b = qw1::random_channel(sys, 24);
  CHECK_THROWS(qw1::diagonal_gauge_upper_bound(qw1::channel_difference(a, b)));
}

TEST_CASE("sampled decompositions bound the norm from above") {
  CompositeSystem sys({2, 2}, {2, 2});
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 3; ++rep) {
    Channel a = qw1::random_channel(sys, 100 + 2 * rep);
    Channel b = qw1::random_channel(sys, 101 + 2 * rep);
    HermitianDifference d = qw1::channel_difference(a, b);
    const double ub = qw1::sampled_upper_bound(d, 8, 900 + rep);
    W1Result r = qw1::w1_distance(a, b);
    REQUIRE(r.status == qw1::SolveStatus::optimal);
    CHECK(r.value <= ub + 1e-7);
  }

  // channels differing on one factor only: a single piece certifies cost <= 1
  CompositeSystem sys1({2}, {2});
  Channel p = qw1::random_channel(sys1, 41);
  Channel q = qw1::random_channel(sys1, 42);
  Channel shared = qw1::random_channel(sys1, 43);
  Channel a = qw1::tensor_ordered(p, SubsetSpec({0}), shared, SubsetSpec({1}));
  Channel b = qw1::tensor_ordered(q, SubsetSpec({0}), shared, SubsetSpec({1}));
  const double ub = qw1::sampled_upper_bound(qw1::channel_difference(a, b), 4, 5);
  CHECK(ub <= 1.0 + 1e-9);
  CHECK(ub + 1e-7 >= qw1::w1_distance(a, b).value);

  // zero difference
  CHECK(qw1::sampled_upper_bound(qw1::channel_difference(a, a)) == 0.0);
}

TEST_CASE("certificate check accepts honest solves and flags tampering") {
  CompositeSystem sys({2, 2}, {2, 2});
  Channel a = qw1::random_channel(sys, 51);
  Channel b = qw1::random_channel(sys, 52);
  HermitianDifference d = qw1::channel_difference(a, b);
  W1Result r = qw1::w1_distance(a, b);
  REQUIRE(r.status == qw1::SolveStatus::optimal);

  qw1::CertificateReport good = qw1::certificate_check(r, d);
  CHECK(good.ok);
  CHECK(good.sum_residual < 1e-7);
  CHECK(good.value_residual < 1e-7);

  SUBCASE("scaled piece breaks the reconstruction") {
    W1Result bad = r;
    bad.pieces[0].y *= 1.01;
    CHECK_FALSE(qw1::certificate_check(bad, d).ok);
  }
  SUBCASE("shifted value is caught") {
    W1Result bad = r;
    bad.value += 0.1;
    CHECK_FALSE(qw1::certificate_check(bad, d).ok);
  }
  SUBCASE("negative piece is caught") {
    W1Result bad = r;
    bad.pieces[0].y -= 0.05 * MatC::Identity(16, 16);
    bad.pieces[0].z -= 0.05 * MatC::Identity(16, 16);
    CHECK_FALSE(qw1::certificate_check(bad, d).ok);
  }
  SUBCASE("out-of-range factor is caught") {
    W1Result bad = r;
    bad.pieces[0].factor = 7;
    CHECK_FALSE(qw1::certificate_check(bad, d).ok);
  }
}
