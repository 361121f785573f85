#pragma once

// Self-contained primal-dual interior-point solver for linear conic programs
// over a product of complex Hermitian positive semidefinite blocks and a
// nonnegative orthant:
//
//   minimize    sum_b <C_b, X_b> + c . u
//   subject to  sum_b <A_ib, X_b> + a_i . u = b_i   (i = 1..p)
//               X_b >= 0 (Hermitian PSD),  u >= 0
//
// with <A, B> = Re tr(A B). Constraint coefficients are sparse Hermitian
// matrices given by their upper-triangle entries. Internally every Hermitian
// block is carried through the standard real symmetric embedding of doubled
// side (scaled so objective and multipliers match the Hermitian program
// exactly); iterates follow Nesterov-Todd scaled Mehrotra predictor-corrector
// steps with a dense Cholesky of the Schur complement.

#include <string>
#include <utility>
#include <vector>

#include "qw1/types.hpp"

namespace qw1 {

// One upper-triangle entry of a Hermitian coefficient matrix; the (q, p)
// mirror entry conj(v) is implied. Diagonal entries must be real.
struct ConicBlockEntry {
  int p = 0, q = 0;
  Complex v;
};

struct ConicRowBlock {
  int block = 0;
  std::vector<ConicBlockEntry> entries;
};

struct ConicRow {
  std::vector<ConicRowBlock> blocks;
  std::vector<std::pair<int, double>> scalars;  // (orthant coordinate, coefficient)
  double rhs = 0.0;
};

struct ConicProgram {
  std::vector<int> block_sides;
  int scalar_count = 0;
  std::vector<MatC> block_cost;  // empty means zero cost on every block
  VecD scalar_cost;              // size 0 means zero cost on the orthant
  std::vector<ConicRow> rows;
};

enum class SolveStatus { optimal, max_iterations, numerical_failure, infeasible };
std::string to_string(SolveStatus s);

struct PresolveReport {
  std::vector<int> removed_rows;  // original indices of dependent rows
  bool inconsistent = false;      // a removed row contradicted the kept ones
  int rank = 0;
};

// Detects exactly dependent equality rows through a pivoted Cholesky of the
// row Gram matrix, removes them, and checks the removed right-hand sides for
// consistency.
std::pair<ConicProgram, PresolveReport> presolve(const ConicProgram& p);

struct IterationRecord {
  double primal_objective = 0.0, dual_objective = 0.0;
  double primal_residual = 0.0, dual_residual = 0.0, mu = 0.0;
};

struct ConicOptions {
  double tol = DEFAULT_SOLVE_TOL;
  int max_iter = DEFAULT_MAX_ITER;
  int verbosity = 0;
  bool assume_full_rank = false;  // caller guarantees independent rows; skips presolve
  bool record_trace = false;

  // Optional strictly interior warm starts. Ignored (with a fallback to the
  // default cold start) when the supplied points are not strictly interior.
  bool use_primal_start = false;
  std::vector<MatC> x0_blocks;
  VecD x0_scalars;
  bool use_dual_start = false;
  VecD y0;  // length = rows.size(); slacks are C - A^T y0
};

struct ConicSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double rel_gap = 1.0;
  double primal_residual = 1.0;
  double dual_residual = 1.0;
  int iterations = 0;
  std::vector<MatC> x_blocks;
  VecD x_scalars;
  VecD y;  // one multiplier per original row; presolve-removed rows carry 0
  std::vector<MatC> dual_blocks;  // dual slack matrices
  VecD dual_scalars;
  PresolveReport presolve;
  std::vector<IterationRecord> trace;
  std::string message;
};

ConicSolution solve(const ConicProgram& p, const ConicOptions& opt = {});

}  // namespace qw1
