#include "qw1/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>

namespace qw1 {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::numerical_failure: return "numerical_failure";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

constexpr double STEP_FRACTION = 0.98;  // fraction-to-boundary factor
constexpr int STALL_WINDOW = 10;        // iterations without 1% progress => stall

void validate(const ConicProgram& p) {
  const int nb = static_cast<int>(p.block_sides.size());
  for (int s : p.block_sides)
    if (s < 1) throw std::invalid_argument("ConicProgram: block sides must be positive");
  if (p.scalar_count < 0) throw std::invalid_argument("ConicProgram: negative scalar count");
  if (!p.block_cost.empty()) {
    if (static_cast<int>(p.block_cost.size()) != nb)
      throw std::invalid_argument("ConicProgram: block cost count mismatch");
    for (int b = 0; b < nb; ++b)
      if (p.block_cost[b].rows() != p.block_sides[b] || p.block_cost[b].cols() != p.block_sides[b])
        throw std::invalid_argument("ConicProgram: block cost dimension mismatch");
  }
  if (p.scalar_cost.size() != 0 && p.scalar_cost.size() != p.scalar_count)
    throw std::invalid_argument("ConicProgram: scalar cost length mismatch");
  if (p.rows.empty()) throw std::invalid_argument("ConicProgram: at least one equality row required");
  for (const ConicRow& row : p.rows) {
    for (const ConicRowBlock& rb : row.blocks) {
      if (rb.block < 0 || rb.block >= nb)
        throw std::invalid_argument("ConicProgram: block index out of range");
      const int s = p.block_sides[rb.block];
      for (const ConicBlockEntry& e : rb.entries) {
        if (e.p < 0 || e.q < 0 || e.p >= s || e.q >= s || e.p > e.q)
          throw std::invalid_argument("ConicProgram: entry indices must satisfy 0 <= p <= q < side");
        if (e.p == e.q && std::abs(e.v.imag()) > 1e-12)
          throw std::invalid_argument("ConicProgram: diagonal entries must be real");
      }
    }
    for (auto [t, v] : row.scalars) {
      (void)v;
      if (t < 0 || t >= p.scalar_count)
        throw std::invalid_argument("ConicProgram: scalar index out of range");
    }
  }
}

// Real inner product of two coefficient rows under the Hermitian pairing.
double row_dot(const ConicRow& a, const ConicRow& b) {
  double acc = 0.0;
  for (const ConicRowBlock& ra : a.blocks)
    for (const ConicRowBlock& rb : b.blocks) {
      if (ra.block != rb.block) continue;
      for (const ConicBlockEntry& ea : ra.entries)
        for (const ConicBlockEntry& eb : rb.entries) {
          if (ea.p != eb.p || ea.q != eb.q) continue;
          if (ea.p == ea.q)
            acc += ea.v.real() * eb.v.real();
          else
            acc += 2.0 * (ea.v * std::conj(eb.v)).real();
        }
    }
  for (auto [ta, va] : a.scalars)
    for (auto [tb, vb] : b.scalars)
      if (ta == tb) acc += va * vb;
  return acc;
}

struct RealEntry {
  int r, c;
  double v;
};

// Expands the upper-triangle Hermitian entries of one row-block into the full
// entry list of embed(A)/2, where embed(Re + i Im) = [[Re, -Im], [Im, Re]].
// The half factor makes <embed(A)/2, embed(X)> equal the Hermitian pairing
// tr(A X), so objective values and multipliers need no rescaling afterwards.
std::vector<RealEntry> embed_entries(const std::vector<ConicBlockEntry>& entries, int side) {
  std::vector<RealEntry> out;
  out.reserve(entries.size() * 8);
  for (const ConicBlockEntry& e : entries) {
    const double a = 0.5 * e.v.real();
    const double b = 0.5 * e.v.imag();
    if (e.p == e.q) {
      out.push_back({e.p, e.p, a});
      out.push_back({e.p + side, e.p + side, a});
      continue;
    }
    out.push_back({e.p, e.q, a});
    out.push_back({e.q, e.p, a});
    out.push_back({e.p + side, e.q + side, a});
    out.push_back({e.q + side, e.p + side, a});
    out.push_back({e.p, e.q + side, -b});
    out.push_back({e.q + side, e.p, -b});
    out.push_back({e.q, e.p + side, b});
    out.push_back({e.p + side, e.q, b});
  }
  return out;
}

MatD embed_half(const MatC& h) {
  const int s = static_cast<int>(h.rows());
  MatD out(2 * s, 2 * s);
  out.topLeftCorner(s, s) = 0.5 * h.real();
  out.bottomRightCorner(s, s) = 0.5 * h.real();
  out.topRightCorner(s, s) = -0.5 * h.imag();
  out.bottomLeftCorner(s, s) = 0.5 * h.imag();
  return out;
}

MatD embed_full(const MatC& h) {
  const int s = static_cast<int>(h.rows());
  MatD out(2 * s, 2 * s);
  out.topLeftCorner(s, s) = h.real();
  out.bottomRightCorner(s, s) = h.real();
  out.topRightCorner(s, s) = -h.imag();
  out.bottomLeftCorner(s, s) = h.imag();
  return out;
}

// Inverse of embed_full; averages the two real copies and re-Hermitizes.
MatC unembed(const MatD& m) {
  const int s = static_cast<int>(m.rows()) / 2;
  MatC out(s, s);
  out.real() = 0.5 * (m.topLeftCorner(s, s) + m.bottomRightCorner(s, s));
  out.imag() = 0.5 * (m.bottomLeftCorner(s, s) - m.topRightCorner(s, s));
  return Complex(0.5, 0.0) * (out + out.adjoint()).eval();
}

// Row data in embedded real form, organized both row-major (for residuals and
// A^T y) and block-major (for the Schur complement assembly).
struct Internal {
  int nb = 0;
  std::vector<int> side;  // embedded sides (twice the Hermitian side)
  std::vector<MatD> cost;
  int ns = 0;
  VecD scost;
  int p = 0;
  VecD b;
  struct RowBlock {
    int block;
    std::vector<RealEntry> e;
  };
  std::vector<std::vector<RowBlock>> rows;
  std::vector<std::vector<std::pair<int, double>>> rscal;
  std::vector<std::vector<std::pair<int, int>>> btouch;  // per block: (row, slot in rows[row])
  std::vector<std::vector<std::pair<int, double>>> stouch;  // per scalar: (row, coefficient)
  double cnorm = 0.0, bnorm = 0.0;
  int cone_dim = 0;
};

Internal build_internal(const ConicProgram& p) {
  Internal in;
  in.nb = static_cast<int>(p.block_sides.size());
  in.side.resize(in.nb);
  in.cost.resize(in.nb);
  for (int b = 0; b < in.nb; ++b) {
    in.side[b] = 2 * p.block_sides[b];
    in.cost[b] = p.block_cost.empty() ? MatD::Zero(in.side[b], in.side[b]).eval()
                                      : embed_half(p.block_cost[b]);
    in.cone_dim += in.side[b];
  }
  in.ns = p.scalar_count;
  in.scost = p.scalar_cost.size() ? p.scalar_cost : VecD::Zero(in.ns).eval();
  in.cone_dim += in.ns;
  in.p = static_cast<int>(p.rows.size());
  in.b.resize(in.p);
  in.rows.resize(in.p);
  in.rscal.resize(in.p);
  in.btouch.resize(in.nb);
  in.stouch.resize(in.ns);
  for (int i = 0; i < in.p; ++i) {
    const ConicRow& row = p.rows[i];
    in.b(i) = row.rhs;
    for (const ConicRowBlock& rb : row.blocks) {
      if (rb.entries.empty()) continue;
      in.btouch[rb.block].push_back({i, static_cast<int>(in.rows[i].size())});
      in.rows[i].push_back({rb.block, embed_entries(rb.entries, p.block_sides[rb.block])});
    }
    in.rscal[i] = row.scalars;
    for (auto [t, v] : row.scalars) in.stouch[t].push_back({i, v});
  }
  double c2 = in.scost.squaredNorm();
  for (const MatD& c : in.cost) c2 += c.squaredNorm();
  in.cnorm = std::sqrt(c2);
  in.bnorm = in.b.norm();
  return in;
}

double dot_entries(const std::vector<RealEntry>& e, const MatD& m) {
  double acc = 0.0;
  for (const RealEntry& t : e) acc += t.v * m(t.r, t.c);
  return acc;
}

VecD apply_A(const Internal& in, const std::vector<MatD>& X, const VecD& u) {
  VecD out(in.p);
  for (int i = 0; i < in.p; ++i) {
    double acc = 0.0;
    for (const auto& rb : in.rows[i]) acc += dot_entries(rb.e, X[rb.block]);
    for (auto [t, v] : in.rscal[i]) acc += v * u(t);
    out(i) = acc;
  }
  return out;
}

void apply_AT(const Internal& in, const VecD& y, std::vector<MatD>& outb, VecD& outs) {
  outb.resize(in.nb);
  for (int b = 0; b < in.nb; ++b) outb[b].setZero(in.side[b], in.side[b]);
  outs.setZero(in.ns);
  for (int i = 0; i < in.p; ++i) {
    const double yi = y(i);
    if (yi == 0.0) continue;
    for (const auto& rb : in.rows[i])
      for (const RealEntry& e : rb.e) outb[rb.block](e.r, e.c) += yi * e.v;
    for (auto [t, v] : in.rscal[i]) outs(t) += yi * v;
  }
}

struct BlockScaling {
  MatD W;        // Nesterov-Todd point: W S W = X
  MatD T, Tinv;  // W^{-1/2} and W^{1/2}
  MatD Qv;       // eigenbasis of V = T X T
  VecD v;        // eigenvalues of V
  MatD Sinv;
  Eigen::LLT<MatD> lltX, lltS;
};

bool compute_scaling(const MatD& X, const MatD& S, BlockScaling& sc) {
  const int n = static_cast<int>(X.rows());
  sc.lltX.compute(X);
  if (sc.lltX.info() != Eigen::Success) return false;
  sc.lltS.compute(S);
  if (sc.lltS.info() != Eigen::Success) return false;
  MatD L = sc.lltX.matrixL();
  MatD M = L.transpose() * S * L;
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatD> es(M);
  if (es.info() != Eigen::Success) return false;
  VecD lam = es.eigenvalues().cwiseMax(1e-300);
  MatD G = L * es.eigenvectors();
  sc.W.noalias() = G * lam.cwiseSqrt().cwiseInverse().asDiagonal() * G.transpose();
  sc.W = 0.5 * (sc.W + sc.W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatD> ew(sc.W);
  if (ew.info() != Eigen::Success) return false;
  VecD wl = ew.eigenvalues().cwiseMax(1e-300);
  sc.T.noalias() = ew.eigenvectors() * wl.cwiseSqrt().cwiseInverse().asDiagonal() *
                   ew.eigenvectors().transpose();
  sc.Tinv.noalias() =
      ew.eigenvectors() * wl.cwiseSqrt().asDiagonal() * ew.eigenvectors().transpose();
  MatD V = sc.T * X * sc.T;
  V = 0.5 * (V + V.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatD> ev(V);
  if (ev.info() != Eigen::Success) return false;
  sc.Qv = ev.eigenvectors();
  sc.v = ev.eigenvalues().cwiseMax(1e-300);
  sc.Sinv = sc.lltS.solve(MatD::Identity(n, n));
  sc.Sinv = 0.5 * (sc.Sinv + sc.Sinv.transpose()).eval();
  return true;
}

// Largest step keeping X + alpha D positive definite, from the smallest
// eigenvalue of L^{-1} D L^{-T}.
double max_step(const Eigen::LLT<MatD>& llt, const MatD& D) {
  MatD G = llt.matrixL().solve(D);
  G = llt.matrixL().solve(G.transpose()).transpose().eval();
  G = 0.5 * (G + G.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatD> es(G, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-300) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_step_orthant(const VecD& u, const VecD& du) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < u.size(); ++k)
    if (du(k) < 0.0) a = std::min(a, -u(k) / du(k));
  return a;
}

}  // namespace

std::pair<ConicProgram, PresolveReport> presolve(const ConicProgram& prog) {
  validate(prog);
  const int p = static_cast<int>(prog.rows.size());
  PresolveReport rep;

  MatD G(p, p);
  for (int i = 0; i < p; ++i)
    for (int k = i; k < p; ++k) {
      const double v = row_dot(prog.rows[i], prog.rows[k]);
      G(i, k) = v;
      G(k, i) = v;
    }
  const MatD G0 = G;
  const double thr = 1e-12 * std::max(1.0, G.diagonal().maxCoeff());

  // Greedy diagonally pivoted Cholesky of the Gram matrix; rows beyond the
  // numerical rank are exactly dependent on the pivot prefix.
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  int rank = 0;
  for (int k = 0; k < p; ++k) {
    int piv = k;
    for (int j = k + 1; j < p; ++j)
      if (G(j, j) > G(piv, piv)) piv = j;
    if (G(piv, piv) <= thr) break;
    if (piv != k) {
      G.row(k).swap(G.row(piv));
      G.col(k).swap(G.col(piv));
      std::swap(perm[k], perm[piv]);
    }
    const double d = std::sqrt(G(k, k));
    G(k, k) = d;
    for (int j = k + 1; j < p; ++j) G(j, k) /= d;
    for (int j = k + 1; j < p; ++j)
      for (int l = k + 1; l <= j; ++l) G(j, l) -= G(j, k) * G(l, k);
    for (int j = k + 1; j < p; ++j)
      for (int l = j + 1; l < p; ++l) G(j, l) = G(l, j);
    ++rank;
  }
  rep.rank = rank;

  std::vector<int> kept(perm.begin(), perm.begin() + rank);
  std::vector<int> removed(perm.begin() + rank, perm.end());
  std::sort(removed.begin(), removed.end());
  rep.removed_rows = removed;

  if (!removed.empty()) {
    // Each removed row is a combination of kept rows; its right-hand side
    // must match the same combination of kept right-hand sides.
    auto lower = G.topLeftCorner(rank, rank).triangularView<Eigen::Lower>();
    double bmax = 1.0;
    for (const ConicRow& r : prog.rows) bmax = std::max(bmax, std::abs(r.rhs));
    for (int m : removed) {
      VecD g(rank);
      for (int t = 0; t < rank; ++t) g(t) = G0(perm[t], m);
      VecD z = lower.solve(g);
      VecD coeff = lower.transpose().solve(z);
      double implied = 0.0;
      for (int t = 0; t < rank; ++t) implied += coeff(t) * prog.rows[perm[t]].rhs;
      if (std::abs(implied - prog.rows[m].rhs) > 1e-9 * bmax) {
        rep.inconsistent = true;
        break;
      }
    }
  }

  ConicProgram reduced = prog;
  if (!removed.empty()) {
    reduced.rows.clear();
    std::vector<char> drop(p, 0);
    for (int m : removed) drop[m] = 1;
    for (int i = 0; i < p; ++i)
      if (!drop[i]) reduced.rows.push_back(prog.rows[i]);
  }
  return {std::move(reduced), std::move(rep)};
}

ConicSolution solve(const ConicProgram& prog, const ConicOptions& opt) {
  validate(prog);
  ConicSolution sol;

  ConicProgram reduced;
  std::vector<int> kept;
  if (opt.assume_full_rank) {
    reduced = prog;
    kept.resize(prog.rows.size());
    std::iota(kept.begin(), kept.end(), 0);
    sol.presolve.rank = static_cast<int>(prog.rows.size());
  } else {
    auto [red, rep] = presolve(prog);
    sol.presolve = rep;
    if (rep.inconsistent) {
      sol.status = SolveStatus::infeasible;
      sol.message = "presolve: equality rows are inconsistent";
      return sol;
    }
    reduced = std::move(red);
    std::vector<char> drop(prog.rows.size(), 0);
    for (int m : rep.removed_rows) drop[m] = 1;
    for (size_t i = 0; i < prog.rows.size(); ++i)
      if (!drop[i]) kept.push_back(static_cast<int>(i));
  }

  Internal in = build_internal(reduced);
  const int nb = in.nb, ns = in.ns, p = in.p;

  std::vector<MatD> X(nb), S(nb);
  VecD u(ns), s(ns), y = VecD::Zero(p);

  const double tau_p = std::max(1.0, in.bnorm / std::sqrt(double(std::max(1, in.cone_dim))));
  const double tau_d = std::max(1.0, in.cnorm);
  for (int b = 0; b < nb; ++b) {
    X[b] = tau_p * MatD::Identity(in.side[b], in.side[b]);
    S[b] = tau_d * MatD::Identity(in.side[b], in.side[b]);
  }
  u.setConstant(tau_p);
  s.setConstant(tau_d);

  if (opt.use_primal_start) {
    bool ok = static_cast<int>(opt.x0_blocks.size()) == nb && opt.x0_scalars.size() == ns;
    std::vector<MatD> cand(nb);
    for (int b = 0; ok && b < nb; ++b) {
      if (opt.x0_blocks[b].rows() != reduced.block_sides[b] ||
          opt.x0_blocks[b].cols() != reduced.block_sides[b]) {
        ok = false;
        break;
      }
      cand[b] = embed_full(opt.x0_blocks[b]);
      Eigen::LLT<MatD> test(cand[b]);
      if (test.info() != Eigen::Success) ok = false;
    }
    for (int t = 0; ok && t < ns; ++t)
      if (!(opt.x0_scalars(t) > 0.0)) ok = false;
    if (ok) {
      X = std::move(cand);
      u = opt.x0_scalars;
    }
  }
  if (opt.use_dual_start && opt.y0.size() == static_cast<Eigen::Index>(prog.rows.size())) {
    VecD ycand(p);
    for (int i = 0; i < p; ++i) ycand(i) = opt.y0(kept[i]);
    std::vector<MatD> aty;
    VecD atyscal(ns);
    apply_AT(in, ycand, aty, atyscal);
    bool ok = true;
    std::vector<MatD> scand(nb);
    for (int b = 0; ok && b < nb; ++b) {
      scand[b] = in.cost[b] - aty[b];
      scand[b] = 0.5 * (scand[b] + scand[b].transpose()).eval();
      Eigen::LLT<MatD> test(scand[b]);
      if (test.info() != Eigen::Success) ok = false;
    }
    VecD sscand = in.scost - atyscal;
    for (int t = 0; ok && t < ns; ++t)
      if (!(sscand(t) > 0.0)) ok = false;
    if (ok) {
      y = ycand;
      S = std::move(scand);
      s = sscand;
    }
  }

  // Persistent per-iteration state and scratch.
  std::vector<BlockScaling> sc(nb);
  std::vector<MatD> Rd(nb), Rc(nb), WRW(nb), dXa(nb), dSa(nb), dX(nb), dS(nb);
  std::vector<MatD> atyb;
  VecD atys(ns), rd_orth(ns), rp(p), w2(ns), ref_r(p);
  MatD M(p, p);
  MatD Mcopy(p, p);  // unfactored Schur complement, kept for refinement

  auto eval_state = [&](double& pobj, double& dobj, double& pinf, double& dinf) {
    pobj = in.scost.dot(u);
    for (int b = 0; b < nb; ++b) pobj += (in.cost[b].array() * X[b].array()).sum();
    dobj = in.b.dot(y);
    rp = in.b - apply_A(in, X, u);
    apply_AT(in, y, atyb, atys);
    rd_orth = in.scost - s - atys;
    double d2 = rd_orth.squaredNorm();
    for (int b = 0; b < nb; ++b) {
      Rd[b] = in.cost[b] - S[b] - atyb[b];
      Rd[b] = 0.5 * (Rd[b] + Rd[b].transpose()).eval();
      d2 += Rd[b].squaredNorm();
    }
    pinf = rp.norm() / (1.0 + in.bnorm);
    dinf = std::sqrt(d2) / (1.0 + in.cnorm);
  };

  auto finish = [&](SolveStatus st, const std::string& msg, double pobj, double dobj, double pinf,
                    double dinf, int iter) -> ConicSolution& {
    sol.status = st;
    sol.message = msg;
    sol.iterations = iter;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.primal_residual = pinf;
    sol.dual_residual = dinf;
    sol.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    sol.x_blocks.resize(nb);
    sol.dual_blocks.resize(nb);
    for (int b = 0; b < nb; ++b) {
      sol.x_blocks[b] = unembed(X[b]);
      // The embedded program's slack carries the same half factor as the
      // embedded cost and rows; undo it for the Hermitian-world slack.
      sol.dual_blocks[b] = 2.0 * unembed(S[b]);
    }
    sol.x_scalars = u;
    sol.dual_scalars = s;
    sol.y = VecD::Zero(static_cast<Eigen::Index>(prog.rows.size()));
    for (int i = 0; i < p; ++i) sol.y(kept[i]) = y(i);
    return sol;
  };

  // Assembles M[i,k] = <A_i, W A_k W> + sum_t a_it w2_t a_kt (upper triangle,
  // mirrored at the end).
  auto assemble_M = [&]() {
    M.setZero();
    MatD Pb;
    for (int b = 0; b < nb; ++b) {
      const MatD& W = sc[b].W;
      Pb.resize(in.side[b], in.side[b]);
      const auto& touch = in.btouch[b];
      for (size_t ti = 0; ti < touch.size(); ++ti) {
        const auto [i, ei] = touch[ti];
        Pb.setZero();
        for (const RealEntry& e : in.rows[i][ei].e)
          Pb.noalias() += e.v * (W.col(e.r) * W.row(e.c));
        for (size_t tk = ti; tk < touch.size(); ++tk) {
          const auto [k, ek] = touch[tk];
          M(i, k) += dot_entries(in.rows[k][ek].e, Pb);
        }
      }
    }
    for (int t = 0; t < ns; ++t) {
      const auto& touch = in.stouch[t];
      for (size_t ti = 0; ti < touch.size(); ++ti)
        for (size_t tk = ti; tk < touch.size(); ++tk) {
          const auto [i, vi] = touch[ti];
          const auto [k, vk] = touch[tk];
          if (i <= k)
            M(i, k) += vi * w2(t) * vk;
          else
            M(k, i) += vi * w2(t) * vk;
        }
    }
    M.triangularView<Eigen::StrictlyLower>() = M.transpose();
  };

  // Solves one Newton system for the given complementarity targets Rc / Rco,
  // reusing the factored Schur complement.
  std::vector<MatD> datyb;
  VecD datys(ns);
  auto newton = [&](const Eigen::LLT<Eigen::Ref<MatD>>& llt, const VecD& Rco,
                    std::vector<MatD>& outX, VecD& outu, std::vector<MatD>& outS, VecD& outss,
                    VecD& outy) {
    VecD rhs = rp;
    for (int b = 0; b < nb; ++b) WRW[b].noalias() = sc[b].W * Rd[b] * sc[b].W;
    for (int i = 0; i < p; ++i) {
      double acc = 0.0;
      for (const auto& rb : in.rows[i])
        acc += dot_entries(rb.e, WRW[rb.block]) - dot_entries(rb.e, Rc[rb.block]);
      for (auto [t, v] : in.rscal[i]) acc += v * (w2(t) * rd_orth(t) - Rco(t));
      rhs(i) += acc;
    }
    outy = llt.solve(rhs);
    // One round of iterative refinement against the unfactored Schur
    // complement: near convergence the factorization is ill-conditioned and
    // the raw solve loses enough accuracy to corrupt primal feasibility.
    ref_r.noalias() = rhs - Mcopy * outy;
    outy += llt.solve(ref_r);
    apply_AT(in, outy, datyb, datys);
    for (int b = 0; b < nb; ++b) {
      outS[b] = Rd[b] - datyb[b];
      outS[b] = 0.5 * (outS[b] + outS[b].transpose()).eval();
      outX[b].noalias() = sc[b].W * outS[b] * sc[b].W;
      outX[b] = (Rc[b] - outX[b]).eval();
      outX[b] = 0.5 * (outX[b] + outX[b].transpose()).eval();
    }
    outss = rd_orth - datys;
    outu = Rco - w2.cwiseProduct(outss);
  };

  double pobj = 0, dobj = 0, pinf = 1, dinf = 1;
  std::vector<double> hist;
  int tiny_steps = 0;

  for (int iter = 0;; ++iter) {
    eval_state(pobj, dobj, pinf, dinf);
    double mu = s.dot(u);
    for (int b = 0; b < nb; ++b) mu += (X[b].array() * S[b].array()).sum();
    mu /= std::max(1, in.cone_dim);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (opt.record_trace) sol.trace.push_back({pobj, dobj, pinf, dinf, mu});
    if (opt.verbosity >= 1)
      std::fprintf(stderr,
                   "iter %3d  pobj % .9e  dobj % .9e  gap %.2e  pinf %.2e  dinf %.2e  mu %.2e\n",
                   iter, pobj, dobj, relgap, pinf, dinf, mu);

    if (pinf <= opt.tol && dinf <= opt.tol && relgap <= opt.tol)
      return finish(SolveStatus::optimal, "", pobj, dobj, pinf, dinf, iter);
    if (iter >= opt.max_iter)
      return finish(SolveStatus::max_iterations, "iteration limit reached", pobj, dobj, pinf,
                    dinf, iter);
    if (!(mu > 0.0) || !std::isfinite(mu))
      return finish(SolveStatus::numerical_failure, "complementarity collapsed", pobj, dobj, pinf,
                    dinf, iter);

    hist.push_back(std::max({relgap, pinf, dinf}));
    if (static_cast<int>(hist.size()) > STALL_WINDOW) {
      const double before = hist[hist.size() - 1 - STALL_WINDOW];
      if (hist.back() > 0.99 * before)
        return finish(SolveStatus::numerical_failure,
                      "stall: convergence measure stopped improving", pobj, dobj, pinf, dinf,
                      iter);
    }

    bool ok = true;
    for (int b = 0; b < nb && ok; ++b) ok = compute_scaling(X[b], S[b], sc[b]);
    if (!ok)
      return finish(SolveStatus::numerical_failure, "scaling factorization failed", pobj, dobj,
                    pinf, dinf, iter);
    for (int t = 0; t < ns; ++t) w2(t) = u(t) / s(t);

    assemble_M();
    Mcopy = M;  // refinement target: the true, unregularized matrix
    std::optional<Eigen::LLT<Eigen::Ref<MatD>>> llt;
    llt.emplace(M);  // factors in place; M's storage now holds the factor
    if (llt->info() != Eigen::Success) {
      double reg = 1e-13;
      bool done = false;
      for (int attempt = 0; attempt < 4 && !done; ++attempt, reg *= 1e3) {
        assemble_M();
        Mcopy = M;
        M.diagonal().array() += reg * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
        llt.emplace(M);
        done = llt->info() == Eigen::Success;
      }
      if (!done)
        return finish(SolveStatus::numerical_failure, "Schur complement factorization failed",
                      pobj, dobj, pinf, dinf, iter);
    }

    // Predictor: pure affine direction.
    for (int b = 0; b < nb; ++b) Rc[b] = -X[b];
    VecD Rco = -u;
    VecD dua(ns), dsa(ns), dya(p);
    newton(*llt, Rco, dXa, dua, dSa, dsa, dya);

    double ap = 1.0, ad = 1.0;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(sc[b].lltX, dXa[b]));
      ad = std::min(ad, max_step(sc[b].lltS, dSa[b]));
    }
    ap = std::min(ap, max_step_orthant(u, dua));
    ad = std::min(ad, max_step_orthant(s, dsa));

    double mu_aff = (s + ad * dsa).dot(u + ap * dua);
    for (int b = 0; b < nb; ++b)
      mu_aff += ((X[b] + ap * dXa[b]).array() * (S[b] + ad * dSa[b]).array()).sum();
    mu_aff /= std::max(1, in.cone_dim);
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // Corrector: recenters and subtracts the Mehrotra second-order term,
    // evaluated in the scaled space where both cone variables meet at V.
    for (int b = 0; b < nb; ++b) {
      const BlockScaling& k = sc[b];
      MatD dXt = k.T * dXa[b] * k.T;
      MatD dSt = k.Tinv * dSa[b] * k.Tinv;
      MatD H = 0.5 * (dXt * dSt + dSt * dXt);
      MatD Ht = k.Qv.transpose() * H * k.Qv;
      for (Eigen::Index r = 0; r < Ht.rows(); ++r)
        for (Eigen::Index c = 0; c < Ht.cols(); ++c) Ht(r, c) *= 2.0 / (k.v(r) + k.v(c));
      MatD K = k.Qv * Ht * k.Qv.transpose();
      Rc[b] = sigma * mu * k.Sinv - X[b] - k.Tinv * K * k.Tinv;
      Rc[b] = 0.5 * (Rc[b] + Rc[b].transpose()).eval();
    }
    for (int t = 0; t < ns; ++t) Rco(t) = (sigma * mu - dua(t) * dsa(t)) / s(t) - u(t);

    VecD du(ns), ds(ns), dy(p);
    newton(*llt, Rco, dX, du, dS, ds, dy);

    ap = std::numeric_limits<double>::infinity();
    ad = std::numeric_limits<double>::infinity();
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(sc[b].lltX, dX[b]));
      ad = std::min(ad, max_step(sc[b].lltS, dS[b]));
    }
    ap = std::min(ap, max_step_orthant(u, du));
    ad = std::min(ad, max_step_orthant(s, ds));
    ap = std::min(1.0, STEP_FRACTION * ap);
    ad = std::min(1.0, STEP_FRACTION * ad);

    if (std::max(ap, ad) < 1e-8) {
      if (++tiny_steps >= 2)
        return finish(SolveStatus::numerical_failure, "step lengths collapsed", pobj, dobj, pinf,
                      dinf, iter);
    } else {
      tiny_steps = 0;
    }

    for (int b = 0; b < nb; ++b) {
      X[b] += ap * dX[b];
      S[b] += ad * dS[b];
    }
    u += ap * du;
    s += ad * ds;
    y += ad * dy;
  }
}

}  // namespace qw1
