#pragma once

#include <cstdint>

#include "qw1/gauge.hpp"

namespace qw1 {

// Trace distance between density matrices, computed from the spectrum of the
// difference.  Serves as an independent reference value for single-system
// state distances.
double trace_distance_oracle(const MatC& rho, const MatC& sigma);

// Exact value of the gauge norm for diagonal data, computed by a linear
// program over the diagonals alone.  Requires the difference and every
// reference state to be diagonal; conjugating any feasible decomposition by
// the diagonal pinching shows the restriction is lossless in that case.
// Deliberately independent of the semidefinite path: the rows are generated
// with plain integer arithmetic and solved with presolve enabled.
double diagonal_gauge_upper_bound(const HermitianDifference& x, const SolveConfig& cfg = {});

// Upper bound on the gauge norm from explicit feasible decompositions: a
// telescoping interpolation of a channelization of x in the natural factor
// order, the same in `samples` random factor orders with random paddings,
// and single-piece decompositions when x is concentrated on one factor.
// Every candidate is a valid bound; the smallest is returned.
double sampled_upper_bound(const HermitianDifference& x, int samples = 16,
                           std::uint64_t seed = 1);

// Residuals of a claimed optimal decomposition, recomputed from scratch.
struct CertificateReport {
  double sum_residual = 0.0;        // max-abs of sum_j (y_j - z_j) - x
  double psd_floor = 0.0;           // most negative eigenvalue (or t) over pieces
  double trace_residual = 0.0;      // max-abs of Tr_in y_j - t_j 1 over pieces
  double reduction_residual = 0.0;  // max-abs of drop_j(y_j) - drop_j(z_j)
  double value_residual = 0.0;      // | sum_j t_j - value |
  bool ok = false;
};

// Verifies that the pieces of a solve certify its value: they reproduce x,
// are positive semidefinite, carry the right partial traces, and their
// drop-factor reductions agree.  Residuals are compared against tol times
// one plus the magnitude of the data.
CertificateReport certificate_check(const W1Result& r, const HermitianDifference& x,
                                    double tol = 1e-7);

}  // namespace qw1
