#include "qw1/io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace qw1 {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

json must_parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(e.what());  // includes line/column diagnostics
  }
}

const json& need(const json& obj, const char* key) {
  if (!obj.is_object()) fail("expected a JSON object at the top level");
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("unknown field '" + it.key() + "'");
  }
}

std::vector<int> parse_dims(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) fail(std::string("field '") + key + "' must be a nonempty array");
  std::vector<int> dims;
  for (const json& e : j) {
    if (!e.is_number_integer() || e.get<long long>() < 1)
      fail(std::string("field '") + key + "' must hold positive integers");
    dims.push_back(e.get<int>());
  }
  return dims;
}

Complex parse_entry(const json& e, const std::string& where) {
  if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
    fail(where + ": complex entries must be [re, im] number pairs");
  return Complex(e[0].get<double>(), e[1].get<double>());
}

MatC parse_matrix(const json& jm, const std::string& where) {
  if (!jm.is_array() || jm.empty()) fail(where + ": a matrix is a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(jm.size());
  const json& first = jm[0];
  if (!first.is_array() || first.empty()) fail(where + ": a matrix row is a nonempty array");
  const auto cols = static_cast<Eigen::Index>(first.size());
  MatC m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = jm[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(where + ": rows have inconsistent lengths");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = parse_entry(row[static_cast<size_t>(c)], where);
  }
  return m;
}

json matrix_to_json(const MatC& m) {
  json jm = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    jm.push_back(std::move(row));
  }
  return jm;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

bool known_representation(const std::string& rep) {
  return rep == "kraus" || rep == "delta" || rep == "choi_state" ||
         rep == "delta_difference";
}

// Shape consistency between the declared dimensions and the payload.
void check_document(const ChannelDocument& doc) {
  if (doc.in_dims.empty() || doc.in_dims.size() != doc.out_dims.size())
    fail("in_dims and out_dims must be nonempty and of equal length");
  for (int d : doc.in_dims)
    if (d < 1) fail("in_dims must hold positive integers");
  for (int d : doc.out_dims)
    if (d < 1) fail("out_dims must hold positive integers");
  if (!known_representation(doc.representation))
    fail("representation must be one of kraus | delta | choi_state | delta_difference");

  long long q = 1, r = 1;
  for (int d : doc.in_dims) q *= d;
  for (int d : doc.out_dims) r *= d;
  const long long side = q * r;

  if (!doc.ref_states.empty()) {
    if (doc.ref_states.size() != doc.out_dims.size())
      fail("ref_states must hold one state per factor");
    for (size_t j = 0; j < doc.ref_states.size(); ++j)
      if (doc.ref_states[j].rows() != doc.out_dims[j] ||
          doc.ref_states[j].cols() != doc.out_dims[j])
        fail("ref_states[" + std::to_string(j) + "] has the wrong dimension");
  }

  if (doc.matrices.empty()) fail("matrices must hold at least one matrix");
  if (doc.representation == "kraus") {
    for (size_t t = 0; t < doc.matrices.size(); ++t)
      if (doc.matrices[t].rows() != q || doc.matrices[t].cols() != r)
        fail("matrices[" + std::to_string(t) + "] must be in_total x out_total");
  } else {
    if (doc.matrices.size() != 1)
      fail("representation '" + doc.representation + "' takes exactly one matrix");
    if (doc.matrices[0].rows() != side || doc.matrices[0].cols() != side)
      fail("the matrix must be square of side in_total * out_total");
  }
}

}  // namespace

ChannelDocument parse_channel_document(const std::string& text) {
  json j = must_parse(text);
  check_keys(j, {"in_dims", "out_dims", "ref_states", "representation", "matrices"});
  ChannelDocument doc;
  doc.in_dims = parse_dims(need(j, "in_dims"), "in_dims");
  doc.out_dims = parse_dims(need(j, "out_dims"), "out_dims");
  const json& rep = need(j, "representation");
  if (!rep.is_string()) fail("field 'representation' must be a string");
  doc.representation = rep.get<std::string>();
  const json& mats = need(j, "matrices");
  if (!mats.is_array() || mats.empty()) fail("field 'matrices' must be a nonempty array");
  for (size_t t = 0; t < mats.size(); ++t)
    doc.matrices.push_back(parse_matrix(mats[t], "matrices[" + std::to_string(t) + "]"));
  if (auto it = j.find("ref_states"); it != j.end()) {
    if (!it->is_array()) fail("field 'ref_states' must be an array");
    for (size_t t = 0; t < it->size(); ++t)
      doc.ref_states.push_back(
          parse_matrix((*it)[t], "ref_states[" + std::to_string(t) + "]"));
  }
  check_document(doc);
  return doc;
}

ChannelDocument load_channel_document(const std::string& path) {
  return parse_channel_document(read_file(path));
}

std::string format_channel_document(const ChannelDocument& doc) {
  check_document(doc);
  json j;
  j["in_dims"] = doc.in_dims;
  j["out_dims"] = doc.out_dims;
  j["representation"] = doc.representation;
  if (!doc.ref_states.empty()) {
    json refs = json::array();
    for (const MatC& nu : doc.ref_states) refs.push_back(matrix_to_json(nu));
    j["ref_states"] = std::move(refs);
  }
  json mats = json::array();
  for (const MatC& m : doc.matrices) mats.push_back(matrix_to_json(m));
  j["matrices"] = std::move(mats);
  return j.dump(2) + "\n";
}

void save_channel_document(const ChannelDocument& doc, const std::string& path) {
  write_file(path, format_channel_document(doc));
}

CompositeSystem system_from_document(const ChannelDocument& doc) {
  check_document(doc);
  try {
    return CompositeSystem(doc.in_dims, doc.out_dims, doc.ref_states);
  } catch (const std::invalid_argument& e) {
    fail(e.what());  // e.g. a declared reference state is not a density matrix
  }
}

MatC delta_from_document(const ChannelDocument& doc) {
  CompositeSystem sys = system_from_document(doc);
  const int q = sys.in_total(), r = sys.out_total();
  if (doc.representation == "kraus") {
    const int side = q * r;
    MatC delta = MatC::Zero(side, side);
    // delta = sum_t u_t u_t^dag with u_t[(b, x)] = conj(K_t[x, b]).
    for (const MatC& op : doc.matrices) {
      Vec<Complex> u(side);
      for (int b = 0; b < r; ++b)
        for (int x = 0; x < q; ++x) u(b * q + x) = std::conj(op(x, b));
      delta.noalias() += u * u.adjoint();
    }
    return delta;
  }
  if (doc.representation == "choi_state")
    return static_cast<double>(r) * doc.matrices[0].conjugate();
  return doc.matrices[0];  // delta or delta_difference
}

Channel channel_from_document(const ChannelDocument& doc) {
  if (doc.representation == "delta_difference")
    fail("a delta_difference document does not describe a channel");
  return Channel(system_from_document(doc), delta_from_document(doc));
}

ChannelDocument document_from_channel(const Channel& c, const std::string& representation) {
  ChannelDocument doc;
  doc.in_dims = c.system.in_dims;
  doc.out_dims = c.system.out_dims;
  doc.representation = representation;
  // Emit reference states only when some factor deviates from the default.
  bool default_refs = true;
  for (int j = 0; j < c.system.n(); ++j) {
    const int d = c.system.out_dims[j];
    MatC mixed = MatC::Identity(d, d) / static_cast<double>(d);
    if ((c.system.ref_states[j] - mixed).cwiseAbs().maxCoeff() != 0.0) default_refs = false;
  }
  if (!default_refs) doc.ref_states = c.system.ref_states;

  if (representation == "kraus") {
    doc.matrices = kraus_from_channel(c).ops;
  } else if (representation == "delta") {
    doc.matrices = {c.delta};
  } else if (representation == "choi_state") {
    doc.matrices = {choi_state_from_channel(c)};
  } else {
    fail("representation must be one of kraus | delta | choi_state");
  }
  check_document(doc);
  return doc;
}

HermitianDifference difference_from_document(const ChannelDocument& doc) {
  if (doc.representation != "delta_difference")
    fail("expected a delta_difference document");
  return HermitianDifference(system_from_document(doc), delta_from_document(doc));
}

ChannelDocument document_from_difference(const HermitianDifference& x) {
  ChannelDocument doc;
  doc.in_dims = x.system.in_dims;
  doc.out_dims = x.system.out_dims;
  bool default_refs = true;
  for (int j = 0; j < x.system.n(); ++j) {
    const int d = x.system.out_dims[j];
    MatC mixed = MatC::Identity(d, d) / static_cast<double>(d);
    if ((x.system.ref_states[j] - mixed).cwiseAbs().maxCoeff() != 0.0) default_refs = false;
  }
  if (!default_refs) doc.ref_states = x.system.ref_states;
  doc.representation = "delta_difference";
  doc.matrices = {x.x};
  check_document(doc);
  return doc;
}

RunConfig parse_run_config(const std::string& text) {
  json j = must_parse(text);
  if (!j.is_object()) fail("a run configuration is a JSON object");
  check_keys(j, {"tol", "max_iter", "seed", "verbosity", "output"});
  RunConfig cfg;
  if (auto it = j.find("tol"); it != j.end()) {
    if (!it->is_number()) fail("field 'tol' must be a number");
    cfg.tol = it->get<double>();
  }
  if (auto it = j.find("max_iter"); it != j.end()) {
    if (!it->is_number_integer()) fail("field 'max_iter' must be an integer");
    cfg.max_iter = it->get<int>();
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() &&
                                     it->get<long long>() < 0))
      fail("field 'seed' must be a nonnegative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("verbosity"); it != j.end()) {
    if (!it->is_number_integer()) fail("field 'verbosity' must be an integer");
    cfg.verbosity = it->get<int>();
  }
  if (auto it = j.find("output"); it != j.end()) {
    if (!it->is_string()) fail("field 'output' must be a string");
    cfg.output = it->get<std::string>();
  }
  if (!(cfg.tol > 0)) fail("tol must be positive");
  if (cfg.max_iter < 1) fail("max_iter must be at least 1");
  if (cfg.output != "human" && cfg.output != "json-lines")
    fail("output must be 'human' or 'json-lines'");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

std::string format_run_config(const RunConfig& cfg) {
  json j;
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  j["seed"] = cfg.seed;
  j["verbosity"] = cfg.verbosity;
  j["output"] = cfg.output;
  return j.dump(2) + "\n";
}

}  // namespace qw1
