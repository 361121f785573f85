#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qw1/channel.hpp"
#include "qw1/gauge.hpp"
#include "qw1/tensor.hpp"
#include "testutil.hpp"

using qw1::Channel;
using qw1::Complex;
using qw1::CompositeSystem;
using qw1::FactorShape;
using qw1::HermitianDifference;
using qw1::MatC;
using qw1::Partition;
using qw1::SubsetSpec;
using qw1::W1Result;

namespace {

// Reduction that drops factor j: trace the input, contract the output
// against the reference state.  Recomputed here from the tensor primitives
// so the gauge module is checked against an independent path.
MatC drop_factor(const CompositeSystem& sys, int j, const MatC& y) {
  FactorShape full = sys.delta_shape();
  MatC pt = qw1::partial_trace(y, full, {sys.n() + j});
  return qw1::state_contract(pt, full.dropped(sys.n() + j), j, sys.ref_states[j]);
}

double trace_distance(const MatC& rho, const MatC& sigma) {
  return 0.5 * qw1::trace_norm(rho - sigma);
}

MatC partial_trace_inputs(const CompositeSystem& sys, const MatC& m) {
  std::vector<int> ins(sys.n());
  for (int i = 0; i < sys.n(); ++i) ins[i] = sys.n() + i;
  return qw1::partial_trace(m, sys.delta_shape(), ins);
}

double min_eig(const MatC& m) { return qw1::hermitian_eig(m).values.minCoeff(); }

}  // namespace

TEST_CASE("lift_reduced is the adjoint of the drop-factor reduction") {
  std::mt19937_64 rng(71);
  std::vector<MatC> refs = {qw1::testutil::random_density(2, rng),
                            qw1::testutil::random_density(2, rng)};
  CompositeSystem sys({2, 3}, {2, 2}, refs);
  const int m = sys.delta_side();
  for (int j = 0; j < 2; ++j) {
    const int mred = m / (sys.in_dims[j] * sys.out_dims[j]);
    for (int rep = 0; rep < 3; ++rep) {
      MatC y = qw1::testutil::random_hermitian(m, rng);
      MatC g = qw1::testutil::random_hermitian(mred, rng);
      MatC lifted = qw1::lift_reduced(sys, j, g);
      CHECK((lifted - lifted.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
      Complex lhs = (g.adjoint() * drop_factor(sys, j, y)).trace();
      Complex rhs = (lifted.adjoint() * y).trace();
      CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
  CHECK_THROWS(qw1::lift_reduced(sys, 0, MatC::Identity(3, 3)));
  CHECK_THROWS(qw1::lift_reduced(sys, 2, MatC::Identity(6, 6)));
}

TEST_CASE("gauge program has the expected shape") {
  SUBCASE("single qubit factor") {
    CompositeSystem sys({2}, {2});
    Channel a = qw1::random_channel(sys, 11);
    Channel b = qw1::random_channel(sys, 12);
    qw1::GaugeProgram gp = qw1::build_program(qw1::channel_difference(a, b));
    CHECK(gp.program.rows.size() == 20);
    CHECK(gp.program.block_sides.size() == 2);
    CHECK(gp.program.block_sides[0] == 4);
    CHECK(gp.program.scalar_count == 1);
    CHECK(gp.active == std::vector<int>{0});
    CHECK(gp.unit_trace_rows.size() == 4);
  }
  SUBCASE("two qubit factors") {
    CompositeSystem sys({2, 2}, {2, 2});
    Channel a = qw1::random_channel(sys, 21);
    Channel b = qw1::random_channel(sys, 22);
    qw1::GaugeProgram gp = qw1::build_program(qw1::channel_difference(a, b));
    CHECK(gp.program.rows.size() == 328);
    CHECK(gp.program.block_sides.size() == 4);
    CHECK(gp.program.scalar_count == 2);
    CHECK(gp.unit_trace_rows.size() == 16);
  }
  SUBCASE("trivial factors are skipped") {
    CompositeSystem sys({2, 1}, {2, 1});
    Channel a = qw1::random_channel(sys, 31);
    Channel b = qw1::random_channel(sys, 32);
    qw1::GaugeProgram gp = qw1::build_program(qw1::channel_difference(a, b));
    CHECK(gp.active == std::vector<int>{0});
    CHECK(gp.program.block_sides.size() == 2);
  }
}

TEST_CASE("gauge program rows are linearly independent") {
  CompositeSystem sys({2, 2}, {2, 2});
  Channel a = qw1::random_channel(sys, 41);
  Channel b = qw1::random_channel(sys, 42);
  qw1::GaugeProgram gp = qw1::build_program(qw1::channel_difference(a, b));
  auto [reduced, report] = qw1::presolve(gp.program);
  CHECK(!report.inconsistent);
  CHECK(report.removed_rows.empty());
  CHECK(report.rank == static_cast<int>(gp.program.rows.size()));
}

TEST_CASE("presolved and assumed-rank solves agree") {
  CompositeSystem sys({2}, {2});
  Channel a = qw1::random_channel(sys, 51);
  Channel b = qw1::random_channel(sys, 52);
  W1Result fast = qw1::w1_distance(a, b);
  REQUIRE(fast.status == qw1::SolveStatus::optimal);

  qw1::GaugeProgram gp = qw1::build_program(qw1::channel_difference(a, b));
  qw1::ConicSolution slow = qw1::solve(gp.program);  // cold start, presolve on
  REQUIRE(slow.status == qw1::SolveStatus::optimal);
  CHECK(std::abs(fast.value - slow.primal_objective) < 1e-6);
}

TEST_CASE("single-system state distance matches the trace distance") {
  MatC zero = MatC::Zero(2, 2), one = MatC::Zero(2, 2);
  zero(0, 0) = 1.0;
  one(1, 1) = 1.0;
  MatC mixed = MatC::Identity(2, 2) / 2.0;

  W1Result r1 = qw1::state_w1({2}, zero, one);
  REQUIRE(r1.status == qw1::SolveStatus::optimal);
  CHECK(std::abs(r1.value - 1.0) < 1e-7);

  W1Result r2 = qw1::state_w1({2}, zero, mixed);
  REQUIRE(r2.status == qw1::SolveStatus::optimal);
  CHECK(std::abs(r2.value - 0.5) < 1e-7);

  std::mt19937_64 rng(61);
  for (int dim : {2, 3}) {
    for (int rep = 0; rep < 4; ++rep) {
      MatC rho = qw1::testutil::random_density(dim, rng);
      MatC sigma = qw1::testutil::random_density(dim, rng);
      W1Result r = qw1::state_w1({dim}, rho, sigma);
      REQUIRE(r.status == qw1::SolveStatus::optimal);
      CHECK(std::abs(r.value - trace_distance(rho, sigma)) < 1e-6);
    }
  }
}

TEST_CASE("distance vanishes on equal channels and is symmetric") {
  CompositeSystem sys({2, 2}, {2, 2});
  Channel a = qw1::random_channel(sys, 71);
  Channel b = qw1::random_channel(sys, 72);

  W1Result self = qw1::w1_distance(a, a);
  REQUIRE(self.status == qw1::SolveStatus::optimal);
  CHECK(self.value < 1e-7);

  W1Result ab = qw1::w1_distance(a, b);
  W1Result ba = qw1::w1_distance(b, a);
  REQUIRE(ab.status == qw1::SolveStatus::optimal);
  REQUIRE(ba.status == qw1::SolveStatus::optimal);
  CHECK(ab.value > 1e-4);  // random channels are far apart
  CHECK(std::abs(ab.value - ba.value) < 1e-6);
}

TEST_CASE("optimal decompositions certify the value") {
  CompositeSystem sys({2, 2}, {2, 2});
  Channel a = qw1::random_channel(sys, 81);
  Channel b = qw1::random_channel(sys, 82);
  W1Result r = qw1::w1_distance(a, b);
  REQUIRE(r.status == qw1::SolveStatus::optimal);
  REQUIRE(r.pieces.size() == 2);

  MatC x = a.delta - b.delta;
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  MatC recon = MatC::Zero(x.rows(), x.cols());
  double tsum = 0.0;
  for (const qw1::GaugePiece& piece : r.pieces) {
    recon += piece.y - piece.z;
    tsum += piece.t;
    CHECK(piece.t > -1e-9);
    CHECK(min_eig(piece.y) > -1e-7);
    CHECK(min_eig(piece.z) > -1e-7);
    MatC ty = partial_trace_inputs(sys, piece.y);
    MatC tz = partial_trace_inputs(sys, piece.z);
    MatC eye = MatC::Identity(sys.out_total(), sys.out_total());
    CHECK((ty - piece.t * eye).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((tz - piece.t * eye).cwiseAbs().maxCoeff() < 1e-6);
    MatC hy = drop_factor(sys, piece.factor, piece.y);
    MatC hz = drop_factor(sys, piece.factor, piece.z);
    CHECK((hy - hz).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK((recon - x).cwiseAbs().maxCoeff() < 1e-6 * scale);
  CHECK(std::abs(tsum - r.value) < 1e-6);
  CHECK(r.duality_gap < 1e-7);
}

TEST_CASE("interpolation bound and reductions bracket the distance") {
  CompositeSystem sys({2, 2}, {2, 2});
  Channel a = qw1::random_channel(sys, 91);
  Channel b = qw1::random_channel(sys, 92);
  W1Result r = qw1::w1_distance(a, b);
  REQUIRE(r.status == qw1::SolveStatus::optimal);

  qw1::TelescopeBound tb = qw1::telescope_bound(a, b);
  CHECK(r.value <= tb.bound + 1e-7);
  CHECK(tb.coarse_bound <= 2);
  CHECK(r.value <= tb.coarse_bound + 1e-7);
  REQUIRE(tb.pieces.size() == 2);
  MatC sum = tb.pieces[0].x + tb.pieces[1].x;
  CHECK((sum - (a.delta - b.delta)).cwiseAbs().maxCoeff() < 1e-10);
  for (int j = 0; j < 2; ++j) {
    MatC hp = drop_factor(sys, j, tb.pieces[j].x);
    CHECK(hp.cwiseAbs().maxCoeff() < 1e-9);
  }

  // reductive superadditivity over every partition of two factors
  Partition split({SubsetSpec({0}), SubsetSpec({1})}, 2);
  Partition whole({SubsetSpec({0, 1})}, 2);
  CHECK(qw1::reduction_lower_bound(a, b, split) <= r.value + 1e-6);
  CHECK(std::abs(qw1::reduction_lower_bound(a, b, whole) - r.value) < 1e-8);
}

TEST_CASE("interpolation collapses on single-factor differences") {
  CompositeSystem sys1({2}, {2});
  Channel p = qw1::random_channel(sys1, 94);
  Channel q = qw1::random_channel(sys1, 95);
  Channel shared = qw1::random_channel(sys1, 96);
  Channel a = qw1::tensor_ordered(shared, SubsetSpec({0}), p, SubsetSpec({1}));
  Channel b = qw1::tensor_ordered(shared, SubsetSpec({0}), q, SubsetSpec({1}));
  qw1::TelescopeBound tb = qw1::telescope_bound(a, b);
  CHECK(tb.coarse_bound == 1);
  CHECK(tb.pieces[0].x.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(tb.pieces[1].x.cwiseAbs().maxCoeff() > 1e-6);
  CHECK(tb.bound <= 1.0 + 1e-7);

  qw1::TelescopeBound same = qw1::telescope_bound(a, a);
  CHECK(same.coarse_bound == 0);
  CHECK(same.bound == 0.0);
}

TEST_CASE("distance adds over independent factors") {
  CompositeSystem sys1({2}, {2});
  Channel a = qw1::random_channel(sys1, 101);
  Channel b = qw1::random_channel(sys1, 102);
  Channel c = qw1::random_channel(sys1, 103);
  Channel d = qw1::random_channel(sys1, 104);

  Channel ac = qw1::tensor_ordered(a, SubsetSpec({0}), c, SubsetSpec({1}));
  Channel bd = qw1::tensor_ordered(b, SubsetSpec({0}), d, SubsetSpec({1}));

  double dab = qw1::w1_distance(a, b).value;
  double dcd = qw1::w1_distance(c, d).value;
  W1Result joint = qw1::w1_distance(ac, bd);
  REQUIRE(joint.status == qw1::SolveStatus::optimal);
  CHECK(std::abs(joint.value - (dab + dcd)) < 1e-5);
}

TEST_CASE("norm is homogeneous in the difference") {
  CompositeSystem sys({2}, {2});
  Channel a = qw1::random_channel(sys, 111);
  Channel b = qw1::random_channel(sys, 112);
  double base = qw1::w1_distance(a, b).value;
  HermitianDifference doubled(sys, 2.0 * (a.delta - b.delta));
  W1Result r = qw1::w1_norm(doubled);
  REQUIRE(r.status == qw1::SolveStatus::optimal);
  CHECK(std::abs(r.value - 2.0 * base) < 1e-6);
}

TEST_CASE("coarse graining never increases the distance") {
  CompositeSystem sys({2, 2}, {2, 2});
  Channel a = qw1::random_channel(sys, 121);
  Channel b = qw1::random_channel(sys, 122);
  double fine = qw1::w1_distance(a, b).value;

  Partition merge({SubsetSpec({0, 1})}, 2);
  Channel ca = qw1::coarse_grain(a, merge);
  Channel cb = qw1::coarse_grain(b, merge);
  CHECK(ca.system.n() == 1);
  CHECK(ca.system.in_dims[0] == 4);
  CHECK(ca.system.out_dims[0] == 4);
  MatC expected_ref = qw1::kron(sys.ref_states[0], sys.ref_states[1]);
  CHECK((ca.system.ref_states[0] - expected_ref).cwiseAbs().maxCoeff() < 1e-12);
  W1Result coarse = qw1::w1_distance(ca, cb);
  REQUIRE(coarse.status == qw1::SolveStatus::optimal);
  CHECK(coarse.value <= fine + 1e-6);

  Partition identity({SubsetSpec({0}), SubsetSpec({1})}, 2);
  double same = qw1::w1_distance(qw1::coarse_grain(a, identity),
                                 qw1::coarse_grain(b, identity))
                    .value;
  CHECK(std::abs(same - fine) < 1e-6);

  Partition swap({SubsetSpec({1}), SubsetSpec({0})}, 2);
  double swapped = qw1::w1_distance(qw1::coarse_grain(a, swap),
                                    qw1::coarse_grain(b, swap))
                       .value;
  CHECK(std::abs(swapped - fine) < 1e-6);
}

TEST_CASE("invalid inputs are rejected") {
  CompositeSystem sys2({2}, {2});
  CompositeSystem sys3({3}, {3});
  Channel a = qw1::random_channel(sys2, 131);
  Channel c = qw1::random_channel(sys3, 132);
  CHECK_THROWS(qw1::channel_difference(a, c));

  // nonzero partial trace over the inputs
  CHECK_THROWS(HermitianDifference(sys2, MatC::Identity(4, 4)));
  // non-Hermitian
  MatC bad = MatC::Zero(4, 4);
  bad(0, 1) = 1.0;
  CHECK_THROWS(HermitianDifference(sys2, bad));
  // wrong side
  CHECK_THROWS(HermitianDifference(sys2, MatC::Zero(3, 3)));

  Channel b = qw1::random_channel(sys2, 133);
  // partition must cover every factor exactly once
  CHECK_THROWS(qw1::reduction_lower_bound(a, b, Partition({}, 1)));
  CHECK_THROWS(qw1::telescope_bound(a, c));
}
