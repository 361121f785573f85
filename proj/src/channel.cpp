#include "qw1/channel.hpp"

#include <algorithm>
#include <random>

#include "qw1/tensor.hpp"

namespace qw1 {

namespace {

MatC maximally_mixed(int d) { return MatC::Identity(d, d) / static_cast<double>(d); }

void check_ref_state(const MatC& nu, int dim) {
  if (nu.rows() != dim || nu.cols() != dim)
    throw std::invalid_argument("CompositeSystem: reference state has wrong dimension");
  if (!is_hermitian(nu, REF_STATE_TOL))
    throw std::invalid_argument("CompositeSystem: reference state is not Hermitian");
  if (std::abs(nu.trace().real() - 1.0) > REF_STATE_TOL)
    throw std::invalid_argument("CompositeSystem: reference state is not normalized");
  Eigen::SelfAdjointEigenSolver<MatC> es(nu);
  if (es.eigenvalues().minCoeff() < -REF_STATE_TOL)
    throw std::invalid_argument("CompositeSystem: reference state is not positive semidefinite");
}

}  // namespace

CompositeSystem::CompositeSystem(std::vector<int> in, std::vector<int> out, std::vector<MatC> refs)
    : in_dims(std::move(in)), out_dims(std::move(out)), ref_states(std::move(refs)) {
  if (in_dims.empty() || in_dims.size() != out_dims.size())
    throw std::invalid_argument("CompositeSystem: need matching nonempty dimension lists");
  for (int d : in_dims)
    if (d < 1) throw std::invalid_argument("CompositeSystem: input dimensions must be positive");
  for (int d : out_dims)
    if (d < 1) throw std::invalid_argument("CompositeSystem: output dimensions must be positive");
  if (ref_states.empty()) {
    ref_states.reserve(out_dims.size());
    for (int d : out_dims) ref_states.push_back(maximally_mixed(d));
  }
  if (ref_states.size() != out_dims.size())
    throw std::invalid_argument("CompositeSystem: one reference state per factor required");
  for (int j = 0; j < n(); ++j) check_ref_state(ref_states[j], out_dims[j]);
}

int CompositeSystem::in_total() const {
  int p = 1;
  for (int d : in_dims) p *= d;
  return p;
}

int CompositeSystem::out_total() const {
  int p = 1;
  for (int d : out_dims) p *= d;
  return p;
}

FactorShape CompositeSystem::delta_shape() const {
  std::vector<int> dims = out_dims;
  dims.insert(dims.end(), in_dims.begin(), in_dims.end());
  return FactorShape(dims);
}

CompositeSystem CompositeSystem::dropped(int factor) const {
  std::vector<int> keep;
  for (int f = 0; f < n(); ++f)
    if (f != factor) keep.push_back(f);
  return subset(keep);
}

CompositeSystem CompositeSystem::subset(const std::vector<int>& keep) const {
  if (keep.empty()) throw std::invalid_argument("CompositeSystem: empty factor subset");
  std::vector<int> in, out;
  std::vector<MatC> refs;
  for (int f : keep) {
    if (f < 0 || f >= n()) throw std::invalid_argument("CompositeSystem: factor out of range");
    in.push_back(in_dims[f]);
    out.push_back(out_dims[f]);
    refs.push_back(ref_states[f]);
  }
  return CompositeSystem(std::move(in), std::move(out), std::move(refs));
}

bool systems_equal(const CompositeSystem& a, const CompositeSystem& b, double tol) {
  if (a.in_dims != b.in_dims || a.out_dims != b.out_dims) return false;
  for (int j = 0; j < a.n(); ++j)
    if ((a.ref_states[j] - b.ref_states[j]).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

SubsetSpec::SubsetSpec(std::vector<int> m) : members(std::move(m)) {
  if (members.empty()) throw std::invalid_argument("SubsetSpec: empty subset");
  for (size_t i = 0; i < members.size(); ++i) {
    if (members[i] < 0) throw std::invalid_argument("SubsetSpec: negative factor index");
    if (i > 0 && members[i] <= members[i - 1])
      throw std::invalid_argument("SubsetSpec: indices must be strictly increasing");
  }
}

Partition::Partition(std::vector<SubsetSpec> p, int n) : parts(std::move(p)) {
  std::vector<int> seen(n, 0);
  for (const auto& part : parts)
    for (int f : part.members) {
      if (f >= n) throw std::invalid_argument("Partition: factor index out of range");
      if (seen[f]++) throw std::invalid_argument("Partition: overlapping parts");
    }
  for (int f = 0; f < n; ++f)
    if (!seen[f]) throw std::invalid_argument("Partition: parts must cover every factor");
}

ChannelDiagnostics is_valid(const CompositeSystem& sys, const MatC& delta) {
  ChannelDiagnostics d;
  const int side = sys.delta_side();
  if (delta.rows() != side || delta.cols() != side) {
    d.herm_residual = std::numeric_limits<double>::infinity();
    return d;
  }
  d.herm_residual = (delta - delta.adjoint()).cwiseAbs().maxCoeff();
  MatC h = 0.5 * (delta + delta.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(h);
  d.min_eig = es.eigenvalues().minCoeff();

  // Trace out all input factors; the result must be the output identity.
  FactorShape shape = sys.delta_shape();
  std::vector<int> in_factors(sys.n());
  for (int j = 0; j < sys.n(); ++j) in_factors[j] = sys.n() + j;
  MatC pt = partial_trace(h, shape, in_factors);
  d.trace_residual = (pt - MatC::Identity(sys.out_total(), sys.out_total())).norm();

  d.valid = d.herm_residual <= 1e-9 && d.min_eig >= CHANNEL_PSD_FLOOR &&
            d.trace_residual <= CHANNEL_TRACE_TOL;
  return d;
}

Channel::Channel(CompositeSystem sys, MatC d) : system(std::move(sys)), delta(std::move(d)) {
  ChannelDiagnostics diag = is_valid(system, delta);
  if (!diag.valid)
    throw std::invalid_argument(
        "Channel: process matrix violates the channel invariants (min eig " +
        std::to_string(diag.min_eig) + ", trace residual " + std::to_string(diag.trace_residual) +
        ", hermiticity " + std::to_string(diag.herm_residual) + ")");
}

KrausSet::KrausSet(CompositeSystem sys, std::vector<MatC> k) : system(std::move(sys)), ops(std::move(k)) {
  if (ops.empty()) throw std::invalid_argument("KrausSet: need at least one operator");
  const int q = system.in_total(), r = system.out_total();
  MatC acc = MatC::Zero(r, r);
  for (const MatC& op : ops) {
    if (op.rows() != q || op.cols() != r)
      throw std::invalid_argument("KrausSet: operator has wrong shape");
    acc += op.adjoint() * op;
  }
  if ((acc - MatC::Identity(r, r)).norm() > KRAUS_UNITAL_TOL)
    throw std::invalid_argument("KrausSet: operators do not satisfy the unitality condition");
}

Channel channel_from_kraus(const KrausSet& k) {
  const int q = k.system.in_total(), r = k.system.out_total();
  const int side = q * r;
  MatC delta = MatC::Zero(side, side);
  // delta = sum_t u_t u_t^dag with u_t[(b, x)] = conj(K_t[x, b]).
  for (const MatC& op : k.ops) {
    Vec<Complex> u(side);
    for (int b = 0; b < r; ++b)
      for (int x = 0; x < q; ++x) u(b * q + x) = std::conj(op(x, b));
    delta.noalias() += u * u.adjoint();
  }
  return Channel(k.system, delta);
}

KrausSet kraus_from_channel(const Channel& c, double cutoff) {
  const int q = c.system.in_total(), r = c.system.out_total();
  HermitianEig e = hermitian_eig(c.delta);
  const double wmax = std::max(e.values.maxCoeff(), 0.0);
  std::vector<MatC> ops;
  for (int t = 0; t < e.values.size(); ++t) {
    const double w = e.values(t);
    if (w <= cutoff * std::max(wmax, 1.0)) continue;
    const double s = std::sqrt(w);
    MatC op(q, r);
    for (int b = 0; b < r; ++b)
      for (int x = 0; x < q; ++x) op(x, b) = s * std::conj(e.vectors(b * q + x, t));
    ops.push_back(std::move(op));
  }
  return KrausSet(c.system, std::move(ops));
}

MatC apply_channel(const Channel& c, const MatC& a) {
  const int q = c.system.in_total(), r = c.system.out_total();
  if (a.rows() != q || a.cols() != q)
    throw std::invalid_argument("apply_channel: observable has wrong dimension");
  // E(a)[b, b'] = sum_{x, z} delta[(b,x),(b',z)] a[x, z]
  MatC out = MatC::Zero(r, r);
  for (int b = 0; b < r; ++b)
    for (int bp = 0; bp < r; ++bp) {
      Complex acc(0);
      for (int x = 0; x < q; ++x)
        for (int z = 0; z < q; ++z) acc += c.delta(b * q + x, bp * q + z) * a(x, z);
      out(b, bp) = acc;
    }
  return out;
}

MatC schrodinger_apply(const Channel& c, const MatC& rho) {
  const int q = c.system.in_total(), r = c.system.out_total();
  if (rho.rows() != r || rho.cols() != r)
    throw std::invalid_argument("schrodinger_apply: state has wrong dimension");
  // E_*(rho)[x, z] = sum_{b, b'} delta[(b,z),(b',x)] rho[b', b]
  MatC out = MatC::Zero(q, q);
  for (int x = 0; x < q; ++x)
    for (int z = 0; z < q; ++z) {
      Complex acc(0);
      for (int b = 0; b < r; ++b)
        for (int bp = 0; bp < r; ++bp) acc += c.delta(b * q + z, bp * q + x) * rho(bp, b);
      out(x, z) = acc;
    }
  return out;
}

MatC choi_state_from_channel(const Channel& c) {
  return c.delta.conjugate() / static_cast<double>(c.system.out_total());
}

Channel channel_from_choi_state(const CompositeSystem& sys, const MatC& kappa) {
  return Channel(sys, static_cast<double>(sys.out_total()) * kappa.conjugate());
}

Channel reduce_hat(const Channel& c, int j) {
  const int n = c.system.n();
  if (n < 2) throw std::invalid_argument("reduce_hat: need at least two factors");
  if (j < 0 || j >= n) throw std::invalid_argument("reduce_hat: factor out of range");
  FactorShape shape = c.system.delta_shape();
  // Trace out input factor j (at shape position n + j), then contract output
  // factor j against its reference state.
  MatC pt = partial_trace(c.delta, shape, {n + j});
  MatC red = state_contract(pt, shape.dropped(n + j), j, c.system.ref_states[j]);
  return Channel(c.system.dropped(j), std::move(red));
}

Channel reduce_to_subset(const Channel& c, const SubsetSpec& keep) {
  const int n = c.system.n();
  std::vector<int> drop;
  {
    std::vector<int> flag(n, 0);
    for (int f : keep.members) {
      if (f >= n) throw std::invalid_argument("reduce_to_subset: factor out of range");
      flag[f] = 1;
    }
    for (int f = n - 1; f >= 0; --f)
      if (!flag[f]) drop.push_back(f);  // descending, so earlier indices stay put
  }
  Channel out = c;
  for (int f : drop) out = reduce_hat(out, f);
  return out;
}

Channel tensor_ordered(const Channel& a, const SubsetSpec& ia, const Channel& b, const SubsetSpec& ib) {
  const int na = a.system.n(), nb = b.system.n();
  if (ia.size() != na || ib.size() != nb)
    throw std::invalid_argument("tensor_ordered: subset sizes must match the channel factor counts");
  const int n = na + nb;
  std::vector<int> owner(n, -1), pos(n, -1);
  for (int k = 0; k < na; ++k) {
    int f = ia.members[k];
    if (f >= n || owner[f] != -1) throw std::invalid_argument("tensor_ordered: subsets must be disjoint and cover the union");
    owner[f] = 0;
    pos[f] = k;
  }
  for (int k = 0; k < nb; ++k) {
    int f = ib.members[k];
    if (f >= n || owner[f] != -1) throw std::invalid_argument("tensor_ordered: subsets must be disjoint and cover the union");
    owner[f] = 1;
    pos[f] = k;
  }

  // kron(delta_a, delta_b) lives on factors (out_a, in_a, out_b, in_b); build
  // the permutation taking them to (out_merged, in_merged) ascending.
  std::vector<int> dims;
  for (int f = 0; f < na; ++f) dims.push_back(a.system.out_dims[f]);
  for (int f = 0; f < na; ++f) dims.push_back(a.system.in_dims[f]);
  for (int f = 0; f < nb; ++f) dims.push_back(b.system.out_dims[f]);
  for (int f = 0; f < nb; ++f) dims.push_back(b.system.in_dims[f]);
  FactorShape kron_shape{dims};

  std::vector<int> new_order(2 * n);
  for (int f = 0; f < n; ++f) {
    const int base_out = owner[f] == 0 ? 0 : 2 * na;
    const int base_in = owner[f] == 0 ? na : 2 * na + nb;
    new_order[f] = base_out + pos[f];
    new_order[n + f] = base_in + pos[f];
  }
  MatC delta = permute_factors(kron(a.delta, b.delta), kron_shape, new_order);

  std::vector<int> in(n), out(n);
  std::vector<MatC> refs(n);
  for (int f = 0; f < n; ++f) {
    const CompositeSystem& source = owner[f] == 0 ? a.system : b.system;
    in[f] = source.in_dims[pos[f]];
    out[f] = source.out_dims[pos[f]];
    refs[f] = source.ref_states[pos[f]];
  }
  return Channel(CompositeSystem(std::move(in), std::move(out), std::move(refs)), std::move(delta));
}

std::optional<int> is_neighbouring(const Channel& a, const Channel& b, double tol) {
  if (!systems_equal(a.system, b.system))
    throw std::invalid_argument("is_neighbouring: channels live on different systems");
  if (a.system.n() == 1) return 0;  // dropping the only factor leaves nothing to compare
  for (int j = 0; j < a.system.n(); ++j) {
    if ((reduce_hat(a, j).delta - reduce_hat(b, j).delta).norm() <= tol) return j;
  }
  return std::nullopt;
}

Channel random_channel(const CompositeSystem& sys, std::uint64_t seed, int rank) {
  const int q = sys.in_total(), r = sys.out_total();
  if (rank == 0) rank = q * r;
  if (rank < 1) throw std::invalid_argument("random_channel: rank must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<MatC> raw(rank, MatC(q, r));
  MatC m = MatC::Zero(r, r);
  for (MatC& op : raw) {
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < r; ++j) op(i, j) = Complex(g(rng), g(rng));
    m.noalias() += op.adjoint() * op;
  }
  // Normalize to unitality: K_t = G_t m^{-1/2}.
  Eigen::SelfAdjointEigenSolver<MatC> es(m);
  MatC mih = es.eigenvectors() *
             es.eigenvalues().cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() *
             es.eigenvectors().adjoint();
  std::vector<MatC> ops;
  ops.reserve(raw.size());
  for (const MatC& op : raw) ops.push_back(op * mih);
  return channel_from_kraus(KrausSet(sys, std::move(ops)));
}

MatC random_state(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  MatC a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
  MatC p = a * a.adjoint() + 1e-9 * MatC::Identity(dim, dim);
  return p / p.trace().real();
}

}  // namespace qw1
