// qw1: Wasserstein-order-1 distances between quantum channels.
//
// Commands
//   dist A.json B.json     distance between two channels on the same system
//   norm X.json | A B      gauge norm of a channel difference
//   reduce FILE --subset   factor-subset reduction of a channel document
//   validate FILE          channel invariant diagnostics
//   random --dims ...      seeded random channel document
//   verify SUITE           seeded property suites with per-property reports
//
// Exit codes: 0 success (optimal where a solve is involved), 1 failed
// validation or property violation, 2 malformed document or usage error,
// 3 dimension/subset mismatch, 4 solver failure.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qw1/channel.hpp"
#include "qw1/gauge.hpp"
#include "qw1/io.hpp"
#include "qw1/oracles.hpp"

namespace {

using nlohmann::json;
using qw1::Channel;
using qw1::CompositeSystem;
using qw1::MatC;
using qw1::Partition;
using qw1::RunConfig;
using qw1::SubsetSpec;
using qw1::W1Result;

constexpr int kExitInvalid = 1;
constexpr int kExitParse = 2;
constexpr int kExitDimension = 3;
constexpr int kExitSolver = 4;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
  void reset() { t0 = std::chrono::steady_clock::now(); }
};

std::string fmt(double v, int prec = 17) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

qw1::SolveConfig solve_config(const RunConfig& cfg) {
  qw1::SolveConfig s;
  s.tol = cfg.tol;
  s.max_iter = cfg.max_iter;
  s.verbosity = cfg.verbosity;
  return s;
}

json matrix_json(const MatC& m) {
  json jm = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    jm.push_back(std::move(row));
  }
  return jm;
}

// The one json-lines result object every solving command emits.
void emit_result(const RunConfig& cfg, double value, double gap, const std::string& status,
                 double ms, int iterations = -1) {
  if (cfg.output == "json-lines") {
    json j;
    j["value"] = value;
    j["gap"] = gap;
    j["status"] = status;
    j["seed"] = cfg.seed;
    j["elapsed_ms"] = ms;
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "value       " << fmt(value) << "\n";
    std::cout << "gap         " << fmt(gap, 3) << "\n";
    std::cout << "status      " << status << "\n";
    if (iterations >= 0) std::cout << "iterations  " << iterations << "\n";
    std::cout << "elapsed_ms  " << fmt(ms, 4) << "\n";
  }
}

void emit_decomposition(const W1Result& r) {
  json pieces = json::array();
  for (const qw1::GaugePiece& p : r.pieces) {
    json jp;
    jp["factor"] = p.factor;
    jp["t"] = p.t;
    jp["y"] = matrix_json(p.y);
    jp["z"] = matrix_json(p.z);
    pieces.push_back(std::move(jp));
  }
  std::cout << json{{"decomposition", std::move(pieces)}}.dump() << "\n";
}

Channel load_channel(const std::string& path) {
  return qw1::channel_from_document(qw1::load_channel_document(path));
}

// Comma-separated 1-based factor indices -> sorted 0-based members.
std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string tok = text.substr(pos, comma - pos);
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || v < 1)
      throw std::invalid_argument("'" + tok + "' is not a positive factor index");
    out.push_back(v - 1);
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Semicolon-separated index lists, e.g. "1,3;2" -> {{0,2},{1}}.
Partition parse_partition(const std::string& text, int n) {
  std::vector<SubsetSpec> parts;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t semi = text.find(';', pos);
    if (semi == std::string::npos) semi = text.size();
    parts.emplace_back(parse_index_list(text.substr(pos, semi - pos)));
    pos = semi + 1;
  }
  return Partition(std::move(parts), n);
}

int solver_exit(qw1::SolveStatus s) {
  return s == qw1::SolveStatus::optimal ? 0 : kExitSolver;
}

// ---------------------------------------------------------------------------
// dist / norm

int run_dist(const RunConfig& cfg, const std::string& file_a, const std::string& file_b,
             const std::string& partition, bool dump) {
  Channel a, b;
  try {
    a = load_channel(file_a);
    b = load_channel(file_b);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  if (!systems_equal(a.system, b.system)) {
    std::cerr << "error: the two channels live on different systems\n";
    return kExitDimension;
  }

  Timer timer;
  if (!partition.empty()) {
    // Reduction lower bound over the requested partition: the sum of the
    // per-part distances between the reduced channels.
    Partition p;
    try {
      p = parse_partition(partition, a.system.n());
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: --partition: " << e.what() << "\n";
      return kExitDimension;
    }
    double total = 0.0, gap = 0.0;
    qw1::SolveStatus status = qw1::SolveStatus::optimal;
    for (const SubsetSpec& part : p.parts) {
      W1Result r = qw1::w1_distance(qw1::reduce_to_subset(a, part),
                                    qw1::reduce_to_subset(b, part), solve_config(cfg));
      total += r.value;
      gap = std::max(gap, r.duality_gap);
      if (r.status != qw1::SolveStatus::optimal) status = r.status;
    }
    emit_result(cfg, total, gap, to_string(status), timer.ms());
    return solver_exit(status);
  }

  W1Result r = qw1::w1_distance(a, b, solve_config(cfg));
  emit_result(cfg, r.value, r.duality_gap, to_string(r.status), timer.ms(), r.iterations);
  if (dump) emit_decomposition(r);
  return solver_exit(r.status);
}

int run_norm(const RunConfig& cfg, const std::vector<std::string>& files, bool dump) {
  std::optional<qw1::HermitianDifference> x;
  try {
    if (files.size() == 2) {
      Channel a = load_channel(files[0]);
      Channel b = load_channel(files[1]);
      if (!systems_equal(a.system, b.system)) {
        std::cerr << "error: the two channels live on different systems\n";
        return kExitDimension;
      }
      x.emplace(qw1::channel_difference(a, b));
    } else {
      x.emplace(qw1::difference_from_document(qw1::load_channel_document(files[0])));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }

  Timer timer;
  W1Result r = qw1::w1_norm(*x, solve_config(cfg));
  emit_result(cfg, r.value, r.duality_gap, to_string(r.status), timer.ms(), r.iterations);
  if (dump) emit_decomposition(r);
  return solver_exit(r.status);
}

// ---------------------------------------------------------------------------
// reduce / validate / random

int run_reduce(const RunConfig& cfg, const std::string& file, const std::string& subset,
               const std::string& out_file) {
  qw1::ChannelDocument doc;
  Channel c;
  try {
    doc = qw1::load_channel_document(file);
    c = qw1::channel_from_document(doc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  Channel reduced;
  try {
    SubsetSpec keep(parse_index_list(subset));
    if (keep.members.back() >= c.system.n())
      throw std::invalid_argument("subset index exceeds the number of factors");
    reduced = qw1::reduce_to_subset(c, keep);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: --subset: " << e.what() << "\n";
    return kExitDimension;
  }
  std::string text =
      qw1::format_channel_document(qw1::document_from_channel(reduced, doc.representation));
  if (out_file.empty())
    std::cout << text;
  else
    qw1::save_channel_document(qw1::document_from_channel(reduced, doc.representation),
                               out_file);
  (void)cfg;
  return 0;
}

int run_validate(const RunConfig& cfg, const std::string& file) {
  CompositeSystem sys;
  MatC delta;
  try {
    qw1::ChannelDocument doc = qw1::load_channel_document(file);
    sys = qw1::system_from_document(doc);
    delta = qw1::delta_from_document(doc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  qw1::ChannelDiagnostics diag = qw1::is_valid(sys, delta);

  // Unitality probed through the map action on the input identity, as an
  // arithmetic path independent of the partial-trace residual above.
  const int q = sys.in_total(), r = sys.out_total();
  MatC e1 = MatC::Zero(r, r);
  for (int b = 0; b < r; ++b)
    for (int bp = 0; bp < r; ++bp) {
      qw1::Complex acc(0);
      for (int x = 0; x < q; ++x) acc += 0.5 * (delta(b * q + x, bp * q + x) +
                                                std::conj(delta(bp * q + x, b * q + x)));
      e1(b, bp) = acc;
    }
  const double unitality = (e1 - MatC::Identity(r, r)).cwiseAbs().maxCoeff();

  if (cfg.output == "json-lines") {
    json j;
    j["min_eigenvalue"] = diag.min_eig;
    j["partial_trace_residual"] = diag.trace_residual;
    j["unitality_residual"] = unitality;
    j["hermiticity_residual"] = diag.herm_residual;
    j["status"] = diag.valid ? "valid" : "invalid";
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "min_eigenvalue          " << fmt(diag.min_eig, 6) << "\n";
    std::cout << "partial_trace_residual  " << fmt(diag.trace_residual, 6) << "\n";
    std::cout << "unitality_residual      " << fmt(unitality, 6) << "\n";
    std::cout << "hermiticity_residual    " << fmt(diag.herm_residual, 6) << "\n";
    std::cout << "status                  " << (diag.valid ? "valid" : "invalid") << "\n";
  }
  return diag.valid ? 0 : kExitInvalid;
}

int run_random(const RunConfig& cfg, const std::vector<int>& dims,
               const std::vector<int>& out_dims, int rank, const std::string& representation,
               const std::string& out_file) {
  Channel c;
  try {
    CompositeSystem sys(dims, out_dims.empty() ? dims : out_dims);
    c = qw1::random_channel(sys, cfg.seed, rank);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  qw1::ChannelDocument doc = qw1::document_from_channel(c, representation);
  if (out_file.empty())
    std::cout << qw1::format_channel_document(doc);
  else
    qw1::save_channel_document(doc, out_file);
  return 0;
}

// ---------------------------------------------------------------------------
// verify

double value_or_inf(const W1Result& r) {
  return r.status == qw1::SolveStatus::optimal ? r.value
                                               : std::numeric_limits<double>::infinity();
}

Channel random_diagonal_channel(const CompositeSystem& sys, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const int q = sys.in_total(), r = sys.out_total();
  MatC delta = MatC::Zero(q * r, q * r);
  for (int b = 0; b < r; ++b) {
    double sum = 0.0;
    std::vector<double> w(q);
    for (int x = 0; x < q; ++x) sum += (w[x] = u(rng));
    for (int x = 0; x < q; ++x) delta(b * q + x, b * q + x) = w[x] / sum;
  }
  return Channel(sys, delta);
}

struct SuiteContext {
  RunConfig cfg;
  qw1::SolveConfig scfg;
  std::string suite;
  int failures = 0;
  Timer timer;

  void report(const std::string& property, double worst, double tol,
              const std::string& fail_dump) {
    const bool pass = worst <= tol;
    if (cfg.output == "json-lines") {
      json j;
      j["value"] = worst;
      j["gap"] = tol - worst;
      j["status"] = pass ? "pass" : "fail";
      j["seed"] = cfg.seed;
      j["elapsed_ms"] = timer.ms();
      j["suite"] = suite;
      j["property"] = property;
      std::cout << j.dump() << "\n";
    } else {
      std::ostringstream os;
      os << (pass ? "PASS" : "FAIL") << " " << suite << "." << property;
      std::string head = os.str();
      if (head.size() < 44) head.resize(44, ' ');
      std::cout << head << " worst " << fmt(worst, 3) << "  tol " << fmt(tol, 3) << "  seed "
                << cfg.seed << "\n";
    }
    if (!pass) {
      ++failures;
      std::cerr << fail_dump;
    }
    timer.reset();
  }
};

std::string dump_instance(const SuiteContext& ctx, const std::string& property, int index,
                          std::initializer_list<const Channel*> channels) {
  std::ostringstream os;
  os << "# failing instance: suite=" << ctx.suite << " property=" << property
     << " seed=" << ctx.cfg.seed << " index=" << index << "\n";
  int k = 0;
  for (const Channel* c : channels) {
    os << "# channel " << k++ << "\n"
       << qw1::format_channel_document(qw1::document_from_channel(*c));
  }
  return os.str();
}

void suite_metric(SuiteContext& ctx) {
  const std::uint64_t s = ctx.cfg.seed;

  {  // single-factor states reproduce the trace distance
    double worst = 0.0;
    std::string dump;
    const int dims[5] = {2, 2, 2, 3, 3};
    for (int k = 0; k < 5; ++k) {
      const int d = dims[k];
      MatC rho = qw1::random_state(d, s * 100 + 2 * k);
      MatC sigma = qw1::random_state(d, s * 100 + 2 * k + 1);
      W1Result w = qw1::state_w1({d}, rho, sigma, ctx.scfg);
      double dev = std::abs(value_or_inf(w) - qw1::trace_distance_oracle(rho, sigma));
      if (dev > worst) {
        worst = dev;
        Channel ca = qw1::state_channel({d}, rho), cb = qw1::state_channel({d}, sigma);
        dump = dump_instance(ctx, "state-trace-distance", k, {&ca, &cb});
      }
    }
    ctx.report("state-trace-distance", worst, 1e-6, dump);
  }

  CompositeSystem sys({2, 2}, {2, 2});
  {  // self-distance vanishes
    double worst = 0.0;
    std::string dump;
    for (int k = 0; k < 3; ++k) {
      Channel c = qw1::random_channel(sys, s * 200 + k);
      double dev = value_or_inf(qw1::w1_distance(c, c, ctx.scfg));
      if (dev > worst) {
        worst = dev;
        dump = dump_instance(ctx, "self-distance", k, {&c});
      }
    }
    ctx.report("self-distance", worst, 1e-7, dump);
  }
  {  // symmetry and separation on the same pairs
    double worst_sym = 0.0, worst_sep = 0.0;
    std::string dump_sym, dump_sep;
    for (int k = 0; k < 3; ++k) {
      Channel a = qw1::random_channel(sys, s * 300 + 2 * k);
      Channel b = qw1::random_channel(sys, s * 300 + 2 * k + 1);
      double ab = value_or_inf(qw1::w1_distance(a, b, ctx.scfg));
      double ba = value_or_inf(qw1::w1_distance(b, a, ctx.scfg));
      double dev = std::abs(ab - ba);
      if (dev > worst_sym) {
        worst_sym = dev;
        dump_sym = dump_instance(ctx, "symmetry", k, {&a, &b});
      }
      if ((a.delta - b.delta).norm() >= 1e-3) {
        double shortfall = std::max(0.0, 1e-4 - std::min(ab, ba));
        if (shortfall > worst_sep) {
          worst_sep = shortfall;
          dump_sep = dump_instance(ctx, "separation", k, {&a, &b});
        }
      }
    }
    ctx.report("symmetry", worst_sym, 1e-6, dump_sym);
    ctx.report("separation", worst_sep, 0.0, dump_sep);
  }
  {  // triangle inequality
    double worst = 0.0;
    std::string dump;
    for (int k = 0; k < 2; ++k) {
      Channel a = qw1::random_channel(sys, s * 400 + 3 * k);
      Channel b = qw1::random_channel(sys, s * 400 + 3 * k + 1);
      Channel c = qw1::random_channel(sys, s * 400 + 3 * k + 2);
      double dev = value_or_inf(qw1::w1_distance(a, c, ctx.scfg)) -
                   value_or_inf(qw1::w1_distance(a, b, ctx.scfg)) -
                   value_or_inf(qw1::w1_distance(b, c, ctx.scfg));
      if (dev > worst) {
        worst = dev;
        dump = dump_instance(ctx, "triangle", k, {&a, &b, &c});
      }
    }
    ctx.report("triangle", worst, 1e-6, dump);
  }
}

void suite_additivity(SuiteContext& ctx) {
  const std::uint64_t s = ctx.cfg.seed;
  CompositeSystem one({2}, {2});
  double worst = 0.0;
  std::string dump;
  for (int k = 0; k < 3; ++k) {
    Channel d1 = qw1::random_channel(one, s * 500 + 4 * k);
    Channel e1 = qw1::random_channel(one, s * 500 + 4 * k + 1);
    Channel d2 = qw1::random_channel(one, s * 500 + 4 * k + 2);
    Channel e2 = qw1::random_channel(one, s * 500 + 4 * k + 3);
    Channel D = qw1::tensor_ordered(d1, SubsetSpec({0}), d2, SubsetSpec({1}));
    Channel E = qw1::tensor_ordered(e1, SubsetSpec({0}), e2, SubsetSpec({1}));
    double dev = std::abs(value_or_inf(qw1::w1_distance(D, E, ctx.scfg)) -
                          value_or_inf(qw1::w1_distance(d1, e1, ctx.scfg)) -
                          value_or_inf(qw1::w1_distance(d2, e2, ctx.scfg)));
    if (dev > worst) {
      worst = dev;
      dump = dump_instance(ctx, "product-sum", k, {&D, &E});
    }
  }
  ctx.report("product-sum", worst, 1e-5, dump);
}

void suite_stability(SuiteContext& ctx) {
  const std::uint64_t s = ctx.cfg.seed;
  CompositeSystem one({2}, {2});
  double worst_r = 0.0, worst_l = 0.0;
  std::string dump_r, dump_l;
  for (int k = 0; k < 3; ++k) {
    Channel d = qw1::random_channel(one, s * 600 + 3 * k);
    Channel e = qw1::random_channel(one, s * 600 + 3 * k + 1);
    Channel f = qw1::random_channel(one, s * 600 + 3 * k + 2);
    double base = value_or_inf(qw1::w1_distance(d, e, ctx.scfg));

    Channel Dr = qw1::tensor_ordered(d, SubsetSpec({0}), f, SubsetSpec({1}));
    Channel Er = qw1::tensor_ordered(e, SubsetSpec({0}), f, SubsetSpec({1}));
    double dev = std::abs(value_or_inf(qw1::w1_distance(Dr, Er, ctx.scfg)) - base);
    if (dev > worst_r) {
      worst_r = dev;
      dump_r = dump_instance(ctx, "padding-right", k, {&Dr, &Er});
    }

    Channel Dl = qw1::tensor_ordered(f, SubsetSpec({0}), d, SubsetSpec({1}));
    Channel El = qw1::tensor_ordered(f, SubsetSpec({0}), e, SubsetSpec({1}));
    dev = std::abs(value_or_inf(qw1::w1_distance(Dl, El, ctx.scfg)) - base);
    if (dev > worst_l) {
      worst_l = dev;
      dump_l = dump_instance(ctx, "padding-left", k, {&Dl, &El});
    }
  }
  ctx.report("padding-right", worst_r, 1e-5, dump_r);
  ctx.report("padding-left", worst_l, 1e-5, dump_l);
}

void suite_superadditivity(SuiteContext& ctx) {
  const std::uint64_t s = ctx.cfg.seed;
  CompositeSystem sys({2, 2}, {2, 2});
  double worst_split = 0.0, worst_triv = 0.0;
  std::string dump_split, dump_triv;
  for (int k = 0; k < 3; ++k) {
    Channel a = qw1::random_channel(sys, s * 700 + 2 * k);
    Channel b = qw1::random_channel(sys, s * 700 + 2 * k + 1);
    double v = value_or_inf(qw1::w1_distance(a, b, ctx.scfg));

    Partition split({SubsetSpec({0}), SubsetSpec({1})}, 2);
    double dev = qw1::reduction_lower_bound(a, b, split, ctx.scfg) - v;
    if (dev > worst_split) {
      worst_split = dev;
      dump_split = dump_instance(ctx, "split-lower-bound", k, {&a, &b});
    }

    Partition trivial({SubsetSpec({0, 1})}, 2);
    dev = std::abs(qw1::reduction_lower_bound(a, b, trivial, ctx.scfg) - v);
    if (dev > worst_triv) {
      worst_triv = dev;
      dump_triv = dump_instance(ctx, "trivial-partition-exact", k, {&a, &b});
    }
  }
  ctx.report("split-lower-bound", worst_split, 1e-7, dump_split);
  ctx.report("trivial-partition-exact", worst_triv, 1e-7, dump_triv);
}

void suite_bounds(SuiteContext& ctx) {
  const std::uint64_t s = ctx.cfg.seed;
  CompositeSystem sys({2, 2}, {2, 2});
  CompositeSystem one({2}, {2});

  {  // neighbouring channels are at distance <= 1
    double worst = 0.0;
    std::string dump;
    for (int k = 0; k < 2; ++k) {
      Channel shared = qw1::random_channel(one, s * 800 + 3 * k);
      Channel p = qw1::random_channel(one, s * 800 + 3 * k + 1);
      Channel q = qw1::random_channel(one, s * 800 + 3 * k + 2);
      Channel a = qw1::tensor_ordered(shared, SubsetSpec({0}), p, SubsetSpec({1}));
      Channel b = qw1::tensor_ordered(shared, SubsetSpec({0}), q, SubsetSpec({1}));
      double dev = value_or_inf(qw1::w1_distance(a, b, ctx.scfg)) - 1.0;
      if (!qw1::is_neighbouring(a, b).has_value())
        dev = std::numeric_limits<double>::infinity();
      if (dev > worst) {
        worst = dev;
        dump = dump_instance(ctx, "neighbouring-norm", k, {&a, &b});
      }
    }
    ctx.report("neighbouring-norm", worst, 1e-7, dump);
  }

  double worst_n = 0.0, worst_tel = 0.0, worst_samp = 0.0;
  std::string dump_n, dump_tel, dump_samp;
  for (int k = 0; k < 3; ++k) {
    Channel a = qw1::random_channel(sys, s * 900 + 2 * k);
    Channel b = qw1::random_channel(sys, s * 900 + 2 * k + 1);
    double v = value_or_inf(qw1::w1_distance(a, b, ctx.scfg));

    double dev = v - sys.n();
    if (dev > worst_n) {
      worst_n = dev;
      dump_n = dump_instance(ctx, "distance-le-n", k, {&a, &b});
    }

    qw1::TelescopeBound tb = qw1::telescope_bound(a, b, ctx.scfg);
    dev = v - tb.bound;
    if (dev > worst_tel) {
      worst_tel = dev;
      dump_tel = dump_instance(ctx, "telescope-upper", k, {&a, &b});
    }

    dev = v - qw1::sampled_upper_bound(qw1::channel_difference(a, b), 6, s * 900 + k);
    if (dev > worst_samp) {
      worst_samp = dev;
      dump_samp = dump_instance(ctx, "sampled-upper", k, {&a, &b});
    }
  }
  ctx.report("distance-le-n", worst_n, 1e-7, dump_n);
  ctx.report("telescope-upper", worst_tel, 1e-7, dump_tel);
  ctx.report("sampled-upper", worst_samp, 1e-7, dump_samp);

  {  // diagonal instances against the diagonal transport bound
    double worst = 0.0;
    std::string dump;
    for (int k = 0; k < 2; ++k) {
      Channel a = random_diagonal_channel(sys, s * 1000 + 2 * k);
      Channel b = random_diagonal_channel(sys, s * 1000 + 2 * k + 1);
      double v = value_or_inf(qw1::w1_distance(a, b, ctx.scfg));
      double dev = v - qw1::diagonal_gauge_upper_bound(qw1::channel_difference(a, b), ctx.scfg);
      if (dev > worst) {
        worst = dev;
        dump = dump_instance(ctx, "diagonal-upper", k, {&a, &b});
      }
    }
    ctx.report("diagonal-upper", worst, 1e-7, dump);
  }
}

void suite_duality(SuiteContext& ctx) {
  const std::uint64_t s = ctx.cfg.seed;
  CompositeSystem sys({2, 2}, {2, 2});
  CompositeSystem rect({3}, {2});

  {  // every optimal solve carries a verifiable decomposition and a tight gap
    double worst_cert = 0.0, worst_gap = 0.0;
    std::string dump_cert, dump_gap;
    for (int k = 0; k < 3; ++k) {
      Channel a = qw1::random_channel(sys, s * 1100 + 2 * k);
      Channel b = qw1::random_channel(sys, s * 1100 + 2 * k + 1);
      qw1::HermitianDifference d = qw1::channel_difference(a, b);
      W1Result r = qw1::w1_distance(a, b, ctx.scfg);
      double cert = std::numeric_limits<double>::infinity();
      if (r.status == qw1::SolveStatus::optimal) {
        qw1::CertificateReport rep = qw1::certificate_check(r, d);
        cert = std::max({rep.sum_residual, rep.trace_residual, rep.reduction_residual,
                         rep.value_residual, std::max(0.0, -rep.psd_floor)});
        if (!rep.ok) cert = std::numeric_limits<double>::infinity();
      }
      if (cert > worst_cert) {
        worst_cert = cert;
        dump_cert = dump_instance(ctx, "certificate", k, {&a, &b});
      }
      double gap = r.status == qw1::SolveStatus::optimal
                       ? r.duality_gap
                       : std::numeric_limits<double>::infinity();
      if (gap > worst_gap) {
        worst_gap = gap;
        dump_gap = dump_instance(ctx, "relative-gap", k, {&a, &b});
      }
    }
    ctx.report("certificate", worst_cert, 1e-7, dump_cert);
    ctx.report("relative-gap", worst_gap, 1e-7, dump_gap);
  }

  {  // Heisenberg action and its predual agree on full matrix-unit bases
    double worst = 0.0;
    std::string dump;
    for (int k = 0; k < 2; ++k) {
      Channel c = qw1::random_channel(k == 0 ? CompositeSystem({2}, {2}) : rect,
                                      s * 1200 + k);
      const int q = c.system.in_total(), r = c.system.out_total();
      double dev = 0.0;
      for (int x = 0; x < q; ++x)
        for (int z = 0; z < q; ++z) {
          MatC exz = MatC::Zero(q, q);
          exz(x, z) = 1.0;
          MatC img = qw1::apply_channel(c, exz);
          for (int u = 0; u < r; ++u)
            for (int w = 0; w < r; ++w) {
              MatC euw = MatC::Zero(r, r);
              euw(u, w) = 1.0;
              qw1::Complex lhs = (img * euw).trace();
              qw1::Complex rhs = (exz * qw1::schrodinger_apply(c, euw)).trace();
              dev = std::max(dev, std::abs(lhs - rhs));
            }
        }
      if (dev > worst) {
        worst = dev;
        dump = dump_instance(ctx, "heisenberg-schrodinger", k, {&c});
      }
    }
    ctx.report("heisenberg-schrodinger", worst, 1e-9, dump);
  }
}

int run_verify(const RunConfig& cfg, const std::string& suite) {
  SuiteContext ctx;
  ctx.cfg = cfg;
  ctx.scfg = solve_config(cfg);
  ctx.suite = suite;
  if (cfg.output != "json-lines")
    std::cout << "suite " << suite << " (seed " << cfg.seed << ")\n";
  if (suite == "metric")
    suite_metric(ctx);
  else if (suite == "additivity")
    suite_additivity(ctx);
  else if (suite == "stability")
    suite_stability(ctx);
  else if (suite == "superadditivity")
    suite_superadditivity(ctx);
  else if (suite == "bounds")
    suite_bounds(ctx);
  else
    suite_duality(ctx);
  if (cfg.output != "json-lines")
    std::cout << (ctx.failures == 0 ? "all properties passed\n"
                                    : std::to_string(ctx.failures) + " properties FAILED\n");
  return ctx.failures == 0 ? 0 : kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  if (const char* env = std::getenv("QW1_CONFIG")) {
    try {
      cfg = qw1::load_run_config(env);
    } catch (const std::exception& e) {
      std::cerr << "error: QW1_CONFIG: " << e.what() << "\n";
      return kExitParse;
    }
  }

  CLI::App app{"Wasserstein-order-1 distances between quantum channels"};
  app.require_subcommand(1);
  bool json_flag = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--tol", cfg.tol, "solver convergence tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", cfg.max_iter, "solver iteration cap")
        ->check(CLI::Range(1, 100000));
    cmd->add_option("--seed", cfg.seed, "seed recorded in reports and used for randomness");
    cmd->add_flag("--json", json_flag, "emit json-lines output");
  };

  // dist
  std::string dist_a, dist_b, dist_partition;
  bool dist_dump = false;
  CLI::App* dist = app.add_subcommand("dist", "distance between two channel documents");
  dist->add_option("fileA", dist_a, "first channel document")->required();
  dist->add_option("fileB", dist_b, "second channel document")->required();
  dist->add_option("--partition", dist_partition,
                   "semicolon-separated 1-based factor groups, e.g. \"1,3;2\"; computes the "
                   "reduction lower bound over that partition instead of the full distance");
  dist->add_flag("--dump-decomposition", dist_dump,
                 "emit the optimal decomposition as a JSON object");
  add_common(dist);

  // norm
  std::vector<std::string> norm_files;
  bool norm_dump = false;
  CLI::App* norm = app.add_subcommand(
      "norm", "gauge norm of a channel difference (one difference document or two channels)");
  norm->add_option("files", norm_files, "difference document, or two channel documents")
      ->expected(1, 2)
      ->required();
  norm->add_flag("--dump-decomposition", norm_dump,
                 "emit the optimal decomposition as a JSON object");
  add_common(norm);

  // reduce
  std::string reduce_file, reduce_subset, reduce_out;
  CLI::App* reduce = app.add_subcommand("reduce", "reduce a channel to a factor subset");
  reduce->add_option("file", reduce_file, "channel document")->required();
  reduce->add_option("--subset", reduce_subset, "comma-separated 1-based factors to keep")
      ->required();
  reduce->add_option("-o,--output-file", reduce_out, "write the document here instead of stdout");
  add_common(reduce);

  // validate
  std::string validate_file;
  CLI::App* validate = app.add_subcommand("validate", "channel invariant diagnostics");
  validate->add_option("file", validate_file, "channel document")->required();
  add_common(validate);

  // random
  std::vector<int> random_dims, random_out_dims;
  int random_rank = 0;
  std::string random_rep = "delta", random_out;
  CLI::App* random = app.add_subcommand("random", "seeded random channel document");
  random->add_option("--dims", random_dims, "per-factor input dimensions, e.g. 2,2")
      ->delimiter(',')
      ->required()
      ->check(CLI::PositiveNumber);
  random->add_option("--out-dims", random_out_dims,
                     "per-factor output dimensions (default: same as --dims)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  random->add_option("--rank", random_rank, "number of Kraus operators (0 = full rank)")
      ->check(CLI::Range(0, 100000));
  random->add_option("--representation", random_rep, "kraus | delta | choi_state")
      ->check(CLI::IsMember({"kraus", "delta", "choi_state"}));
  random->add_option("-o,--output-file", random_out, "write the document here instead of stdout");
  add_common(random);

  // verify
  std::string verify_suite;
  CLI::App* verify = app.add_subcommand("verify", "run a seeded property suite");
  verify->add_option("suite", verify_suite, "property suite")
      ->required()
      ->check(CLI::IsMember(
          {"metric", "additivity", "stability", "superadditivity", "bounds", "duality"}));
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }
  if (json_flag) cfg.output = "json-lines";

  if (dist->parsed()) return run_dist(cfg, dist_a, dist_b, dist_partition, dist_dump);
  if (norm->parsed()) return run_norm(cfg, norm_files, norm_dump);
  if (reduce->parsed()) return run_reduce(cfg, reduce_file, reduce_subset, reduce_out);
  if (validate->parsed()) return run_validate(cfg, validate_file);
  if (random->parsed())
    return run_random(cfg, random_dims, random_out_dims, random_rank, random_rep, random_out);
  if (verify->parsed()) return run_verify(cfg, verify_suite);
  return kExitParse;  // unreachable: a subcommand is required
}
