#pragma once

// JSON documents for channels, channel differences, and run configuration.
// One JSON document per file; complex entries are two-element [re, im]
// arrays; dimensions are explicit rather than inferred. Reals are emitted
// with round-trip precision, so save/load is lossless.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qw1/channel.hpp"
#include "qw1/gauge.hpp"

namespace qw1 {

// Malformed or internally inconsistent document: bad JSON, missing or
// unknown fields, shape mismatches, reference states that are not density
// matrices. Kept distinct from domain errors so the CLI can map it to its
// parse-error exit code.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// On-disk form of a channel (or of a Hermitian channel difference).
// representation selects how `matrices` is read:
//   kraus            one entry per Kraus operator, each in_total x out_total
//   delta            a single process matrix on (outputs, inputs)
//   choi_state       a single normalized Choi state kappa; delta = r * kappa^T
//   delta_difference a single Hermitian matrix with vanishing input-side
//                    partial trace (input to the norm command)
struct ChannelDocument {
  std::vector<int> in_dims;
  std::vector<int> out_dims;
  std::vector<MatC> ref_states;  // empty -> maximally mixed on every factor
  std::string representation = "delta";
  std::vector<MatC> matrices;
};

ChannelDocument parse_channel_document(const std::string& text);
ChannelDocument load_channel_document(const std::string& path);
std::string format_channel_document(const ChannelDocument& doc);
void save_channel_document(const ChannelDocument& doc, const std::string& path);

// The composite system a document declares, with reference states resolved.
CompositeSystem system_from_document(const ChannelDocument& doc);

// The process matrix a document declares, converted from its representation
// but NOT validated as a channel; pair with is_valid for diagnostics on
// candidate documents.
MatC delta_from_document(const ChannelDocument& doc);

Channel channel_from_document(const ChannelDocument& doc);
ChannelDocument document_from_channel(const Channel& c,
                                      const std::string& representation = "delta");

HermitianDifference difference_from_document(const ChannelDocument& doc);
ChannelDocument document_from_difference(const HermitianDifference& x);

// Solver and output knobs shared by the CLI commands. Loadable from a JSON
// object with the same field names; every field is optional.
struct RunConfig {
  double tol = DEFAULT_SOLVE_TOL;
  int max_iter = DEFAULT_MAX_ITER;
  std::uint64_t seed = 1;
  int verbosity = 0;
  std::string output = "human";  // human | json-lines
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string format_run_config(const RunConfig& cfg);

}  // namespace qw1
