#include "qw1/oracles.hpp"

#include "qw1/conic.hpp"
#include "qw1/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qw1 {

namespace {

std::vector<int> active_factors(const CompositeSystem& s) {
  std::vector<int> a;
  for (int j = 0; j < s.n(); ++j)
    if (s.in_dims[j] > 1 || s.out_dims[j] > 1) a.push_back(j);
  return a;
}

MatC hermitize(const MatC& m) { return Complex(0.5, 0.0) * (m + m.adjoint()); }

MatC positive_part(const MatC& h) {
  HermitianEig e = hermitian_eig(h);
  return e.vectors * e.values.cwiseMax(0.0).asDiagonal() * e.vectors.adjoint();
}

MatC trace_inputs(const CompositeSystem& sys, const MatC& m) {
  std::vector<int> ins(sys.n());
  std::iota(ins.begin(), ins.end(), sys.n());
  return partial_trace(m, sys.delta_shape(), ins);
}

MatC drop_factor(const CompositeSystem& sys, int j, const MatC& y) {
  FactorShape full = sys.delta_shape();
  MatC pt = partial_trace(y, full, {sys.n() + j});
  return state_contract(pt, full.dropped(sys.n() + j), j, sys.ref_states[j]);
}

double max_offdiag(const MatC& m) {
  double v = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (r != c) v = std::max(v, std::abs(m(r, c)));
  return v;
}

}  // namespace

double trace_distance_oracle(const MatC& rho, const MatC& sigma) {
  if (rho.rows() != rho.cols() || sigma.rows() != sigma.cols() || rho.rows() != sigma.rows())
    throw std::invalid_argument("trace_distance_oracle: shape mismatch");
  MatC d = hermitize(rho - sigma);
  return 0.5 * hermitian_eig(d).values.cwiseAbs().sum();
}

double diagonal_gauge_upper_bound(const HermitianDifference& x, const SolveConfig& cfg) {
  const CompositeSystem& sys = x.system;
  const int n = sys.n();
  const int Q = sys.in_total();
  const int R = sys.out_total();
  const int m = sys.delta_side();
  const double scale = std::max(1.0, x.x.cwiseAbs().maxCoeff());
  if (max_offdiag(x.x) > 1e-10 * scale)
    throw std::invalid_argument("diagonal_gauge_upper_bound: difference is not diagonal");
  for (const MatC& ref : sys.ref_states)
    if (max_offdiag(ref) > 1e-10)
      throw std::invalid_argument("diagonal_gauge_upper_bound: reference state is not diagonal");

  const std::vector<int> active = active_factors(sys);
  const int nact = static_cast<int>(active.size());
  if (nact == 0) return 0.0;

  // Variables, all in the nonnegative orthant: t_k first, then for each
  // active factor the y diagonal and the z diagonal.
  const auto tvar = [](int k) { return k; };
  const auto yvar = [&](int k, int d) { return nact + k * 2 * m + d; };
  const auto zvar = [&](int k, int d) { return nact + k * 2 * m + m + d; };

  ConicProgram p;
  p.scalar_count = nact + nact * 2 * m;
  p.scalar_cost = VecD::Zero(p.scalar_count);
  for (int k = 0; k < nact; ++k) p.scalar_cost(tvar(k)) = 1.0;

  // sum_k (y_k - z_k) reproduces the diagonal of x
  for (int d = 0; d < m; ++d) {
    ConicRow row;
    for (int k = 0; k < nact; ++k) {
      row.scalars.push_back({yvar(k, d), 1.0});
      row.scalars.push_back({zvar(k, d), -1.0});
    }
    row.rhs = x.x(d, d).real();
    p.rows.push_back(std::move(row));
  }
  // summing the input digits of y_k (and z_k) gives t_k for every output digit
  for (int k = 0; k < nact; ++k)
    for (int side = 0; side < 2; ++side)
      for (int b = 0; b < R; ++b) {
        ConicRow row;
        for (int xx = 0; xx < Q; ++xx) {
          const int d = b * Q + xx;
          row.scalars.push_back({side == 0 ? yvar(k, d) : zvar(k, d), 1.0});
        }
        row.scalars.push_back({tvar(k), -1.0});
        p.rows.push_back(std::move(row));
      }
  // the drop-factor-j contractions of y_k and z_k agree, expressed directly
  // in digit arithmetic (independent of the tensor helpers)
  for (int k = 0; k < nact; ++k) {
    const int j = active[k];
    const int rj = sys.out_dims[j];
    const int qj = sys.in_dims[j];
    int rpost = 1, qpost = 1;
    for (int f = j + 1; f < n; ++f) {
      rpost *= sys.out_dims[f];
      qpost *= sys.in_dims[f];
    }
    const int rhat = R / rj;
    const int qhat = Q / qj;
    for (int uhat = 0; uhat < rhat; ++uhat)
      for (int xhat = 0; xhat < qhat; ++xhat) {
        const int upre = uhat / rpost, upost = uhat % rpost;
        const int xpre = xhat / qpost, xpost = xhat % qpost;
        ConicRow row;
        for (int beta = 0; beta < rj; ++beta) {
          const double w = sys.ref_states[j](beta, beta).real();
          if (w == 0.0) continue;
          for (int alpha = 0; alpha < qj; ++alpha) {
            const int b = (upre * rj + beta) * rpost + upost;
            const int xx = (xpre * qj + alpha) * qpost + xpost;
            const int d = b * Q + xx;
            row.scalars.push_back({yvar(k, d), w});
            row.scalars.push_back({zvar(k, d), -w});
          }
        }
        p.rows.push_back(std::move(row));
      }
  }

  ConicOptions opt;
  opt.tol = cfg.tol;
  opt.max_iter = cfg.max_iter;
  opt.verbosity = cfg.verbosity;
  ConicSolution s = solve(p, opt);
  if (s.status != SolveStatus::optimal)
    throw std::runtime_error("diagonal_gauge_upper_bound: linear program did not reach optimality (" +
                             to_string(s.status) + ")");
  return s.primal_objective;
}

double sampled_upper_bound(const HermitianDifference& x, int samples, std::uint64_t seed) {
  const CompositeSystem& sys = x.system;
  const int n = sys.n();
  const int Q = sys.in_total();
  const int R = sys.out_total();
  const double scale = std::max(1.0, x.x.cwiseAbs().maxCoeff());

  MatC xpos = positive_part(x.x);
  MatC xneg = xpos - x.x;
  MatC s = trace_inputs(sys, xpos);
  HermitianEig es = hermitian_eig(s);
  const double c = std::max(0.0, es.values.maxCoeff());
  if (c <= 1e-13 * scale) return 0.0;

  // square root of the headroom left by the positive part's partial trace
  VecD head = es.values.unaryExpr([&](double v) { return std::sqrt(std::max(0.0, c - v)); });
  MatC w = es.vectors * head.asDiagonal() * es.vectors.adjoint();
  MatC wfull = kron(w, MatC::Identity(Q, Q).eval());

  // Sum of single-piece bounds along one interpolation order: each piece is
  // a difference of channels scaled by c, so it costs at most c, and padding
  // its positive part bounds it by the largest eigenvalue of that partial
  // trace as well.
  auto telescope_value = [&](const std::vector<int>& order, const MatC& pad) {
    Channel dt(sys, (xpos + pad) / c);
    Channel et(sys, (xneg + pad) / c);
    double total = 0.0;
    std::vector<int> taken;
    MatC prev = dt.delta;
    for (int i = 0; i < n; ++i) {
      taken.push_back(order[i]);
      std::sort(taken.begin(), taken.end());
      MatC next;
      if (i == n - 1) {
        next = et.delta;
      } else {
        std::vector<int> rest;
        for (int f = 0; f < n; ++f)
          if (!std::binary_search(taken.begin(), taken.end(), f)) rest.push_back(f);
        next = tensor_ordered(reduce_to_subset(et, SubsetSpec(taken)), SubsetSpec(taken),
                              reduce_to_subset(dt, SubsetSpec(rest)), SubsetSpec(rest))
                   .delta;
      }
      MatC lam = hermitize(c * (prev - next));
      if (lam.cwiseAbs().maxCoeff() > 1e-14 * scale) {
        MatC lp = positive_part(lam);
        const double piece = hermitian_eig(trace_inputs(sys, lp)).values.maxCoeff();
        total += std::min(c, piece);
      }
      prev = std::move(next);
    }
    return total;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  MatC uniform_pad = kron((c * MatC::Identity(R, R) - s).eval(),
                          (MatC::Identity(Q, Q) / double(Q)).eval());
  try {
    best = std::min(best, telescope_value(order, uniform_pad));
  } catch (const std::exception&) {
  }

  std::mt19937_64 rng(seed);
  for (int rep = 0; rep < samples; ++rep) {
    std::shuffle(order.begin(), order.end(), rng);
    const std::uint64_t sub = rng();
    try {
      MatC pad = wfull * random_channel(sys, sub).delta * wfull;
      best = std::min(best, telescope_value(order, hermitize(pad)));
    } catch (const std::exception&) {
    }
  }

  // x concentrated on a single factor decomposes in one piece of cost c
  if (n == 1) {
    best = std::min(best, c);
  } else {
    for (int j = 0; j < n; ++j)
      if (drop_factor(sys, j, x.x).cwiseAbs().maxCoeff() <= 1e-8 * scale)
        best = std::min(best, c);
  }
  return best;
}

CertificateReport certificate_check(const W1Result& r, const HermitianDifference& x,
                                    double tol) {
  const CompositeSystem& sys = x.system;
  const int m = sys.delta_side();
  const double scale = 1.0 + x.x.cwiseAbs().maxCoeff();
  CertificateReport rep;

  MatC recon = MatC::Zero(m, m);
  MatC eye = MatC::Identity(sys.out_total(), sys.out_total());
  double tsum = 0.0;
  bool factors_valid = true;
  for (const GaugePiece& piece : r.pieces) {
    if (piece.factor < 0 || piece.factor >= sys.n() || piece.y.rows() != m ||
        piece.z.rows() != m) {
      factors_valid = false;
      continue;
    }
    recon += piece.y - piece.z;
    tsum += piece.t;
    rep.psd_floor = std::min({rep.psd_floor, piece.t,
                              hermitian_eig(hermitize(piece.y)).values.minCoeff(),
                              hermitian_eig(hermitize(piece.z)).values.minCoeff()});
    rep.trace_residual = std::max(
        {rep.trace_residual,
         (trace_inputs(sys, piece.y) - piece.t * eye).cwiseAbs().maxCoeff(),
         (trace_inputs(sys, piece.z) - piece.t * eye).cwiseAbs().maxCoeff()});
    MatC hy = drop_factor(sys, piece.factor, piece.y);
    MatC hz = drop_factor(sys, piece.factor, piece.z);
    rep.reduction_residual =
        std::max(rep.reduction_residual, (hy - hz).cwiseAbs().maxCoeff());
  }
  rep.sum_residual = (recon - x.x).cwiseAbs().maxCoeff();
  rep.value_residual = std::abs(tsum - r.value);
  rep.ok = factors_valid && rep.sum_residual <= tol * scale && rep.psd_floor >= -tol &&
           rep.trace_residual <= tol * scale && rep.reduction_residual <= tol * scale &&
           rep.value_residual <= tol * (1.0 + std::abs(r.value));
  return rep;
}

}  // namespace qw1
