#pragma once

// Dense tensor-factor operations on Eigen matrices: Kronecker products,
// factor permutations, partial traces, and single-factor contractions against
// a fixed state, all written with composite index arithmetic (no permutation
// matrices are ever materialized). Functions are expression-friendly free
// functions templated on the Eigen expression type.

#include <algorithm>
#include <vector>

#include "qw1/types.hpp"

namespace qw1 {

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Kronecker product with the leftmost factor slowest, matching
// FactorShape::rank digit ordering.
template <typename DerivedA, typename DerivedB>
Mat<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                    const Eigen::MatrixBase<DerivedB>& b) {
  Mat<typename DerivedA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Reorders tensor factors. new_order[k] names the old factor that occupies
// slot k afterwards; it must be a permutation of 0..n-1.
template <typename Derived>
Mat<typename Derived::Scalar> permute_factors(const Eigen::MatrixBase<Derived>& m,
                                              const FactorShape& shape,
                                              const std::vector<int>& new_order) {
  const int n = shape.factor_count();
  if (static_cast<int>(new_order.size()) != n)
    throw std::invalid_argument("permute_factors: order length mismatch");
  std::vector<int> seen(n, 0);
  for (int v : new_order) {
    if (v < 0 || v >= n || seen[v]) throw std::invalid_argument("permute_factors: not a permutation");
    seen[v] = 1;
  }
  const int d = shape.total();
  if (m.rows() != d || m.cols() != d)
    throw std::invalid_argument("permute_factors: matrix does not match shape");

  FactorShape new_shape;
  new_shape.dims.resize(n);
  for (int k = 0; k < n; ++k) new_shape.dims[k] = shape.dims[new_order[k]];

  // Map every new composite index to its old counterpart once, then gather.
  std::vector<int> old_of(d);
  std::vector<int> nd(n), od(n);
  for (int i = 0; i < d; ++i) {
    new_shape.unrank(i, nd.data());
    for (int k = 0; k < n; ++k) od[new_order[k]] = nd[k];
    old_of[i] = shape.rank(od.data());
  }
  Mat<typename Derived::Scalar> out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = m(old_of[i], old_of[j]);
  return out;
}

// Partial trace over the listed factors (strictly increasing indices).
// The result lives on the remaining factors in their original order.
template <typename Derived>
Mat<typename Derived::Scalar> partial_trace(const Eigen::MatrixBase<Derived>& m,
                                            const FactorShape& shape,
                                            const std::vector<int>& traced) {
  const int n = shape.factor_count();
  const int d = shape.total();
  if (m.rows() != d || m.cols() != d)
    throw std::invalid_argument("partial_trace: matrix does not match shape");
  std::vector<int> keep;
  {
    std::vector<int> flag(n, 0);
    for (size_t i = 0; i < traced.size(); ++i) {
      int f = traced[i];
      if (f < 0 || f >= n) throw std::invalid_argument("partial_trace: factor out of range");
      if (flag[f]) throw std::invalid_argument("partial_trace: repeated factor");
      if (i > 0 && traced[i] <= traced[i - 1])
        throw std::invalid_argument("partial_trace: factors must be strictly increasing");
      flag[f] = 1;
    }
    for (int f = 0; f < n; ++f)
      if (!flag[f]) keep.push_back(f);
  }
  FactorShape keep_shape = shape.subset(keep);
  FactorShape lost_shape = shape.subset(traced);
  const int dk = keep_shape.total();
  const int dl = lost_shape.total();

  // Composite index of (kept digits, lost digits) interleaved back into the
  // original factor order.
  std::vector<int> digits(n), kd(std::max<size_t>(keep.size(), 1)), ld(std::max<size_t>(traced.size(), 1));
  auto fuse = [&](int ki, int li) {
    keep_shape.unrank(ki, kd.data());
    lost_shape.unrank(li, ld.data());
    for (size_t t = 0; t < keep.size(); ++t) digits[keep[t]] = kd[t];
    for (size_t t = 0; t < traced.size(); ++t) digits[traced[t]] = ld[t];
    return shape.rank(digits.data());
  };

  Mat<typename Derived::Scalar> out = Mat<typename Derived::Scalar>::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      typename Derived::Scalar acc(0);
      for (int l = 0; l < dl; ++l) acc += m(fuse(i, l), fuse(j, l));
      out(i, j) = acc;
    }
  return out;
}

// Contracts one factor against a fixed state: on elementary tensors the
// selected factor block b is replaced by the scalar trace(state * b). The
// result lives on the remaining factors in their original order.
template <typename Derived, typename DerivedS>
Mat<typename Derived::Scalar> state_contract(const Eigen::MatrixBase<Derived>& m,
                                             const FactorShape& shape,
                                             int factor,
                                             const Eigen::MatrixBase<DerivedS>& state) {
  const int n = shape.factor_count();
  const int d = shape.total();
  if (factor < 0 || factor >= n) throw std::invalid_argument("state_contract: factor out of range");
  if (m.rows() != d || m.cols() != d)
    throw std::invalid_argument("state_contract: matrix does not match shape");
  const int df = shape.dims[factor];
  if (state.rows() != df || state.cols() != df)
    throw std::invalid_argument("state_contract: state does not match factor dimension");

  FactorShape rest = shape.dropped(factor);
  const int dr = rest.total();
  std::vector<int> digits(n), rd(std::max(n - 1, 1));
  auto fuse = [&](int ri, int beta) {
    rest.unrank(ri, rd.data());
    int t = 0;
    for (int f = 0; f < n; ++f) digits[f] = (f == factor) ? beta : rd[t++];
    return shape.rank(digits.data());
  };

  Mat<typename Derived::Scalar> out = Mat<typename Derived::Scalar>::Zero(dr, dr);
  for (int i = 0; i < dr; ++i)
    for (int j = 0; j < dr; ++j) {
      typename Derived::Scalar acc(0);
      // trace(state * b) weights entry (row digit br, col digit bc) of the
      // factor block by state(bc, br).
      for (int br = 0; br < df; ++br)
        for (int bc = 0; bc < df; ++bc)
          acc += static_cast<typename Derived::Scalar>(state(bc, br)) * m(fuse(i, br), fuse(j, bc));
      out(i, j) = acc;
    }
  return out;
}

struct HermitianEig {
  VecD values;   // ascending
  MatC vectors;  // columns are the matching eigenvectors
};

// Eigendecomposition of a Hermitian matrix; rejects visibly non-Hermitian
// input rather than silently symmetrizing it.
template <typename Derived>
HermitianEig hermitian_eig(const Eigen::MatrixBase<Derived>& m) {
  if (!is_hermitian(m, EIG_INPUT_HERM_TOL))
    throw std::invalid_argument("hermitian_eig: input is not Hermitian");
  MatC h = m.template cast<Complex>();
  h = Complex(0.5, 0.0) * (h + h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatC> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
  return HermitianEig{es.eigenvalues(), es.eigenvectors()};
}

// Trace norm (sum of absolute eigenvalues) of a Hermitian matrix.
template <typename Derived>
double trace_norm(const Eigen::MatrixBase<Derived>& m) {
  HermitianEig e = hermitian_eig(m);
  return e.values.cwiseAbs().sum();
}

}  // namespace qw1
