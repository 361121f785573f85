#pragma once

#include "qw1/channel.hpp"
#include "qw1/conic.hpp"

namespace qw1 {

// Options forwarded to the interior-point solver by the norm and distance
// entry points.
struct SolveConfig {
  double tol = DEFAULT_SOLVE_TOL;
  int max_iter = DEFAULT_MAX_ITER;
  int verbosity = 0;
};

// A Hermitian matrix of process-matrix shape whose partial trace over the
// inputs vanishes: the difference space in which channel differences live.
// Construction validates both properties and stores an exactly Hermitian
// copy.
struct HermitianDifference {
  CompositeSystem system;
  MatC x;
  HermitianDifference(CompositeSystem sys, MatC m);
};

// Difference of two channels on the same system (same dims and reference
// states required).
HermitianDifference channel_difference(const Channel& a, const Channel& b);

// One factor's contribution to an optimal decomposition: x restricted to
// this piece equals y - z, with trace_inputs(y) = trace_inputs(z) = t * 1
// and matching drop-factor reductions.
struct GaugePiece {
  int factor = 0;
  double t = 0.0;
  MatC y, z;
};

// Outcome of a norm or distance evaluation.
struct W1Result {
  double value = 0.0;
  SolveStatus status = SolveStatus::numerical_failure;
  double duality_gap = 1.0;
  double primal_residual = 1.0;
  double dual_residual = 1.0;
  int iterations = 0;
  std::vector<GaugePiece> pieces;
};

// Conic encoding of the gauge-norm program for a given difference, together
// with the bookkeeping needed to interpret and warm-start it.  Blocks come
// in (y, z) pairs per active factor (factors with any dimension > 1), in
// the order listed in `active`; scalar k is that factor's t.
struct GaugeProgram {
  ConicProgram program;
  std::vector<int> active;
  std::vector<int> unit_trace_rows;  // rows asserting diag(trace_inputs) = t
};

// Builds the gauge program: minimize sum_j t_j subject to
//   (i)  sum_j (y_j - z_j) = x,
//   (ii) trace over the inputs of y_j and z_j equals t_j times the identity,
//   (iii) the drop-factor-j reductions of y_j and z_j agree,
// with y_j, z_j positive semidefinite and t_j >= 0.  Rows implied by the
// others are omitted so the row set has full rank.
GaugeProgram build_program(const HermitianDifference& x);

// Adjoint of the drop-factor-j reduction: embeds a reduced-system matrix
// back into the full space, inserting the reference state at output factor j
// and an identity at input factor j.
MatC lift_reduced(const CompositeSystem& sys, int j, const MatC& g);

// Gauge norm of a difference: the least total budget sum_j t_j over
// decompositions of x into single-factor pieces.
W1Result w1_norm(const HermitianDifference& x, const SolveConfig& cfg = {});

// Distance between two channels on the same system: the gauge norm of their
// difference.
W1Result w1_distance(const Channel& a, const Channel& b, const SolveConfig& cfg = {});

// Factor-by-factor interpolation between two channels.  pieces[j] moves
// factor j from a to b; the pieces sum to a.delta - b.delta and each one's
// drop-factor-j reduction vanishes.  bound sums the per-piece norms (an
// upper bound on the distance by the triangle inequality) and coarse_bound
// counts the nonzero pieces (so the distance is at most the number of
// factors that differ).
struct TelescopeBound {
  double bound = 0.0;
  int coarse_bound = 0;
  std::vector<HermitianDifference> pieces;
};
TelescopeBound telescope_bound(const Channel& a, const Channel& b,
                               const SolveConfig& cfg = {});

// Reductive superadditivity bound: the sum over the parts of a partition of
// the distances between the channels reduced to each part.  Never exceeds
// the full distance (up to solver tolerance); equals it on the trivial
// partition and on products aligned with the partition.
double reduction_lower_bound(const Channel& a, const Channel& b, const Partition& p,
                             const SolveConfig& cfg = {});

// Wraps a density matrix on the given factor dimensions as a channel with
// one-dimensional outputs; differences of such channels recover the state
// transport distance.
Channel state_channel(const std::vector<int>& dims, const MatC& rho);

// Distance between two states viewed as one-dimensional-output channels.
// For a single factor this equals half the trace norm of the difference.
W1Result state_w1(const std::vector<int>& dims, const MatC& rho, const MatC& sigma,
                  const SolveConfig& cfg = {});

// Reinterprets a channel on a coarser system whose factors are the parts of
// the partition, in the order listed; reference states multiply accordingly.
// Coarse graining can only shrink the distance (fewer pieces are available).
Channel coarse_grain(const Channel& c, const Partition& parts);

}  // namespace qw1
