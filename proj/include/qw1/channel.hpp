#pragma once

// Channels on composite finite-dimensional systems, represented throughout by
// their process matrix delta: the unique operator on (output, input) tensor
// factors with E(a) = Tr_in[delta (1_out (x) a^T)] for the unital map E in
// the Heisenberg picture. delta is positive semidefinite exactly when E is
// completely positive, and Tr_in delta = 1_out exactly when E is unital, so
// channels are the set {delta >= 0, Tr_in delta = 1_out}.
//
// Factor ordering of delta: (out_1 .. out_n, in_1 .. in_n). Every reduction
// and product below is index arithmetic over that shape.

#include <cstdint>
#include <optional>
#include <vector>

#include "qw1/types.hpp"

namespace qw1 {

// An n-factor system: per-factor input (q_j) and output (r_j) dimensions and
// a reference state on each output factor (used by the drop-one-factor
// reductions). Reference states default to the maximally mixed state.
struct CompositeSystem {
  std::vector<int> in_dims;
  std::vector<int> out_dims;
  std::vector<MatC> ref_states;

  CompositeSystem() = default;
  CompositeSystem(std::vector<int> in, std::vector<int> out, std::vector<MatC> refs = {});

  int n() const { return static_cast<int>(in_dims.size()); }
  int in_total() const;
  int out_total() const;
  int delta_side() const { return in_total() * out_total(); }
  FactorShape delta_shape() const;  // (out_1..out_n, in_1..in_n)

  CompositeSystem dropped(int factor) const;
  CompositeSystem subset(const std::vector<int>& keep) const;
};

bool systems_equal(const CompositeSystem& a, const CompositeSystem& b, double tol = 1e-12);

// Strictly increasing 0-based factor indices.
struct SubsetSpec {
  std::vector<int> members;
  SubsetSpec() = default;
  explicit SubsetSpec(std::vector<int> m);
  int size() const { return static_cast<int>(members.size()); }
};

// Disjoint subsets covering 0..n-1.
struct Partition {
  std::vector<SubsetSpec> parts;
  Partition() = default;
  explicit Partition(std::vector<SubsetSpec> p, int n);
};

struct ChannelDiagnostics {
  double herm_residual = 0.0;  // max |delta - delta^dag|
  double min_eig = 0.0;        // smallest eigenvalue of the symmetrized delta
  double trace_residual = 0.0; // Frobenius norm of Tr_in delta - 1_out
  bool valid = false;
};

// Non-throwing validity diagnostics for a candidate process matrix.
ChannelDiagnostics is_valid(const CompositeSystem& sys, const MatC& delta);

// A channel: a validated process matrix on a composite system. Construction
// throws std::invalid_argument when the matrix fails the channel invariants
// (hermiticity, eigenvalue floor CHANNEL_PSD_FLOOR, partial trace within
// CHANNEL_TRACE_TOL of the identity).
struct Channel {
  CompositeSystem system;
  MatC delta;
  Channel() = default;
  Channel(CompositeSystem sys, MatC d);
};

// Kraus representation of the same map: E(a) = sum_t K_t^dag a K_t with each
// K_t of shape in_total x out_total; unitality sum_t K_t^dag K_t = 1 is
// enforced within KRAUS_UNITAL_TOL.
struct KrausSet {
  CompositeSystem system;
  std::vector<MatC> ops;
  KrausSet() = default;
  KrausSet(CompositeSystem sys, std::vector<MatC> k);
};

Channel channel_from_kraus(const KrausSet& k);
// Eigendecomposition-based extraction; eigenvalues below cutoff (relative to
// the largest) are dropped.
KrausSet kraus_from_channel(const Channel& c, double cutoff = 1e-12);

// Heisenberg action on an input-side observable: E(a), an out_total matrix.
MatC apply_channel(const Channel& c, const MatC& a);
// Schrodinger (predual) action on an output-side state: a in_total matrix
// with Tr[E(a) rho] = Tr[a schrodinger_apply(c, rho)] for all a, rho.
MatC schrodinger_apply(const Channel& c, const MatC& rho);

// Normalized Choi state of the Schrodinger action; delta = out_total * kappa^T.
MatC choi_state_from_channel(const Channel& c);
Channel channel_from_choi_state(const CompositeSystem& sys, const MatC& kappa);

// Drops factor j: contracts output factor j against its reference state and
// traces out input factor j. Requires n >= 2.
Channel reduce_hat(const Channel& c, int j);
// Iterated reduce_hat down to the given factor subset.
Channel reduce_to_subset(const Channel& c, const SubsetSpec& keep);

// Ordered tensor product: a acts on the factors listed in ia, b on those in
// ib; the result acts on the union with factors in ascending order. ia and ib
// must be disjoint and cover 0..(|ia|+|ib|-1).
Channel tensor_ordered(const Channel& a, const SubsetSpec& ia, const Channel& b, const SubsetSpec& ib);

// Smallest factor index at which the two channels' drop-one-factor reductions
// agree within tol (Frobenius), or nullopt. Single-factor channels are always
// neighbouring (the reduction drops everything).
std::optional<int> is_neighbouring(const Channel& a, const Channel& b, double tol = NEIGHBOUR_TOL);

// Deterministic seeded random channel: Gaussian Kraus operators re-scaled to
// unitality. rank is the number of Kraus operators; 0 selects full rank
// (in_total * out_total).
Channel random_channel(const CompositeSystem& sys, std::uint64_t seed, int rank = 0);

// Deterministic seeded random density matrix (full rank).
MatC random_state(int dim, std::uint64_t seed);

}  // namespace qw1
