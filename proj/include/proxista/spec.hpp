#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxista/error.hpp"
#include "proxista/solver.hpp"

namespace proxista::experiment {

inline constexpr int schema_version = 1;
inline constexpr const char* version = "0.1.0";

enum class ExperimentKind { sparse_deconv, integer_blocks, custom };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::sparse_deconv: return "sparse-deconv";
  case ExperimentKind::integer_blocks: return "integer-blocks";
  case ExperimentKind::custom: return "custom";
  }
  return "?";
}

struct OperatorConfig {
  std::vector<double> filter;  ///< sparse-deconv convolution filter
  Index signal_length = 50;
  Index block_length = 3;      ///< integer-blocks
  Index coefficients = 20;
  std::vector<double> blur;
  std::vector<std::vector<double>> matrix; ///< custom, row-major
  std::string matrix_csv;
};

/// tau_rule: "three-rho-std" (tau = 3 rho noise_std), "match-sigma-min"
/// (scale so the effective weak-convexity equals sigma_m) or "fixed".
/// rho_rule: "sigma-min" or "fixed".
struct PenaltyConfig {
  std::string family = "firm"; ///< firm | l1 | zero | integer-lattice
  std::string tau_rule = "fixed";
  std::string rho_rule = "fixed";
  double tau = 1.0;
  double rho = 0.5;
  double lambda = 0.0;
  int levels = 4;
};

struct NoiseConfig {
  double std = 0.1;
  std::uint64_t seed = 2;
};

struct SignalConfig {
  Index support = 10;
  double amp_lo = 1.0;
  double amp_hi = 2.0;
  int levels = 4;
  std::uint64_t seed = 1;
  std::vector<double> values; ///< explicit truth; overrides the generator
};

struct SolverConfig {
  std::string id;
  std::string method = "ista"; ///< ista | fista | twist
  std::string step = "fb";     ///< mm | fb | contraction | explicit
  double alpha = 0.0;
  double safety = 1.0;
  bool expect_divergence = false;
};

struct VerifyConfig {
  double step_scale = 0.999; ///< alpha = step_scale * 2 / (sigma_M + rho)
  int trials = 1000;
  std::uint64_t seed = 7;
  int iterations = 500;
};

struct GalleryConfig {
  PenaltyConfig penalty;
  std::vector<double> alphas{1.0};
  double lo = -4.0;
  double hi = 4.0;
  int samples = 801;
};

struct ExperimentSpec {
  int schema = schema_version;
  ExperimentKind kind = ExperimentKind::sparse_deconv;
  OperatorConfig op;
  PenaltyConfig penalty;
  NoiseConfig noise;
  SignalConfig signal;
  std::vector<SolverConfig> solvers;
  StopCriteria stop;
  int reference_iters = 10000;
  double reference_tol = 1e-8;
  VerifyConfig verify;
  std::vector<double> data; ///< custom observations
  std::string data_csv;
  std::string output;
  std::string base_dir; ///< directory of the spec file, for relative csv paths
};

inline std::vector<SolverConfig> default_solvers() {
  return {{"ista-a0", "ista", "mm", 0.0, 1.0, false},
          {"ista-a1", "ista", "fb", 0.0, 1.0, false},
          {"fista-a0", "fista", "mm", 0.0, 1.0, false},
          {"fista-a1", "fista", "fb", 0.0, 1.0, true},
          {"twist", "twist", "mm", 0.0, 1.0, false}};
}

inline StopCriteria default_stop() {
  StopCriteria s;
  s.max_iters = 2000;
  s.fp_tol = 1e-12;
  return s;
}

/// Filter h(n) = 0.6^n, n = 0..10: minimum phase, so the 60 x 50 full
/// convolution has a well-conditioned Gram.
inline std::vector<double> default_deconv_filter() {
  return {1.0,       0.6,        0.36,        0.216,        0.1296,      0.07776,
          0.046656,  0.0279936,  0.01679616,  0.010077696,  0.0060466176};
}

inline ExperimentSpec default_sparse_deconv_spec() {
  ExperimentSpec s;
  s.kind = ExperimentKind::sparse_deconv;
  s.op.filter = default_deconv_filter();
  s.op.signal_length = 50;
  s.penalty.family = "firm";
  s.penalty.rho_rule = "sigma-min";
  s.penalty.tau_rule = "three-rho-std";
  s.noise = {0.1, 2};
  s.signal.support = 10;
  s.signal.seed = 1;
  s.solvers = default_solvers();
  s.stop = default_stop();
  s.output = "out/sparse_deconv";
  return s;
}

inline ExperimentSpec default_integer_blocks_spec() {
  ExperimentSpec s;
  s.kind = ExperimentKind::integer_blocks;
  s.op.block_length = 3;
  s.op.coefficients = 20;
  s.op.blur = {1 / 16.0, 2 / 16.0, 3 / 16.0, 4 / 16.0, 3 / 16.0, 2 / 16.0, 1 / 16.0};
  s.penalty.family = "integer-lattice";
  s.penalty.levels = 4;
  s.penalty.tau_rule = "match-sigma-min";
  s.noise = {0.1, 2};
  s.signal.levels = 4;
  s.signal.seed = 1;
  s.solvers = default_solvers();
  s.stop = default_stop();
  s.output = "out/integer_blocks";
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& known,
                           const std::string& where) {
  if (!j.is_object()) throw SpecError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw SpecError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SpecError(where + "." + key + ": " + e.what());
  }
}

inline PenaltyConfig parse_penalty(const json& j, PenaltyConfig p, const std::string& where) {
  reject_unknown(j, {"family", "tau_rule", "rho_rule", "tau", "rho", "lambda", "K"}, where);
  read(j, "family", p.family, where);
  read(j, "tau_rule", p.tau_rule, where);
  read(j, "rho_rule", p.rho_rule, where);
  // An explicit number switches the matching rule to "fixed".
  if (j.contains("tau")) p.tau_rule = "fixed";
  if (j.contains("rho")) p.rho_rule = "fixed";
  read(j, "tau", p.tau, where);
  read(j, "rho", p.rho, where);
  read(j, "lambda", p.lambda, where);
  read(j, "K", p.levels, where);
  static const std::set<std::string> families{"firm", "l1", "zero", "integer-lattice"};
  if (!families.count(p.family)) throw SpecError(where + ".family: unknown family '" + p.family + "'");
  static const std::set<std::string> tau_rules{"fixed", "three-rho-std", "match-sigma-min"};
  if (!tau_rules.count(p.tau_rule)) throw SpecError(where + ".tau_rule: unknown rule '" + p.tau_rule + "'");
  if (p.rho_rule != "fixed" && p.rho_rule != "sigma-min")
    throw SpecError(where + ".rho_rule: unknown rule '" + p.rho_rule + "'");
  return p;
}

inline SolverConfig parse_solver(const json& j, const std::string& where) {
  reject_unknown(j, {"id", "method", "step", "alpha", "safety", "expect_divergence"}, where);
  SolverConfig s;
  read(j, "method", s.method, where);
  if (s.method == "twist") s.step = "mm";
  read(j, "step", s.step, where);
  read(j, "alpha", s.alpha, where);
  read(j, "safety", s.safety, where);
  read(j, "expect_divergence", s.expect_divergence, where);
  if (j.contains("alpha")) s.step = "explicit";
  s.id = s.method + "-" + s.step;
  read(j, "id", s.id, where);
  if (s.method != "ista" && s.method != "fista" && s.method != "twist")
    throw SpecError(where + ".method: unknown solver '" + s.method + "'");
  static const std::set<std::string> steps{"mm", "fb", "contraction", "explicit"};
  if (!steps.count(s.step)) throw SpecError(where + ".step: unknown step rule '" + s.step + "'");
  if (!(s.safety > 0.0)) throw SpecError(where + ".safety: must be > 0");
  return s;
}

} // namespace detail

inline ExperimentSpec parse_spec(const nlohmann::json& j, const std::string& base_dir = "") {
  using detail::read;
  if (!j.is_object()) throw SpecError("spec: top level must be an object");
  detail::reject_unknown(j,
                         {"schema_version", "experiment", "operator", "penalty", "noise",
                          "signal", "solvers", "stop", "reference", "verify", "data",
                          "data_csv", "output", "comment"},
                         "spec");
  if (!j.contains("schema_version")) throw SpecError("spec: missing schema_version");
  int schema = 0;
  read(j, "schema_version", schema, "spec");
  if (schema != schema_version)
    throw SpecError("spec: unsupported schema_version " + std::to_string(schema) +
                    " (expected " + std::to_string(schema_version) + ")");

  std::string tag = "sparse-deconv";
  read(j, "experiment", tag, "spec");
  ExperimentSpec s;
  if (tag == "sparse-deconv") s = default_sparse_deconv_spec();
  else if (tag == "integer-blocks") s = default_integer_blocks_spec();
  else if (tag == "custom") {
    s.kind = ExperimentKind::custom;
    s.solvers = default_solvers();
    s.solvers[3].expect_divergence = false;
    s.stop = default_stop();
    s.output = "out/custom";
  } else
    throw SpecError("spec.experiment: unknown tag '" + tag + "'");
  s.base_dir = base_dir;

  if (j.contains("operator")) {
    const auto& o = j["operator"];
    detail::reject_unknown(o, {"filter", "signal_length", "block_length", "coefficients", "blur",
                               "matrix", "matrix_csv"},
                           "spec.operator");
    read(o, "filter", s.op.filter, "spec.operator");
    read(o, "signal_length", s.op.signal_length, "spec.operator");
    read(o, "block_length", s.op.block_length, "spec.operator");
    read(o, "coefficients", s.op.coefficients, "spec.operator");
    read(o, "blur", s.op.blur, "spec.operator");
    read(o, "matrix", s.op.matrix, "spec.operator");
    read(o, "matrix_csv", s.op.matrix_csv, "spec.operator");
  }
  if (j.contains("penalty")) s.penalty = detail::parse_penalty(j["penalty"], s.penalty, "spec.penalty");
  if (j.contains("noise")) {
    detail::reject_unknown(j["noise"], {"std", "seed"}, "spec.noise");
    read(j["noise"], "std", s.noise.std, "spec.noise");
    read(j["noise"], "seed", s.noise.seed, "spec.noise");
    if (!(s.noise.std >= 0.0)) throw SpecError("spec.noise.std: must be >= 0");
  }
  if (j.contains("signal")) {
    const auto& g = j["signal"];
    detail::reject_unknown(g, {"support", "amplitude", "levels", "seed", "values"}, "spec.signal");
    read(g, "support", s.signal.support, "spec.signal");
    if (g.contains("amplitude")) {
      std::vector<double> amp;
      read(g, "amplitude", amp, "spec.signal");
      if (amp.size() != 2 || !(amp[0] <= amp[1]))
        throw SpecError("spec.signal.amplitude: expected [lo, hi] with lo <= hi");
      s.signal.amp_lo = amp[0];
      s.signal.amp_hi = amp[1];
    }
    read(g, "levels", s.signal.levels, "spec.signal");
    read(g, "seed", s.signal.seed, "spec.signal");
    read(g, "values", s.signal.values, "spec.signal");
  }
  if (j.contains("solvers")) {
    if (!j["solvers"].is_array() || j["solvers"].empty())
      throw SpecError("spec.solvers: expected a non-empty array");
    s.solvers.clear();
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j["solvers"].size(); ++i) {
      auto sc = detail::parse_solver(j["solvers"][i], "spec.solvers[" + std::to_string(i) + "]");
      if (!ids.insert(sc.id).second) throw SpecError("spec.solvers: duplicate id '" + sc.id + "'");
      s.solvers.push_back(std::move(sc));
    }
  }
  if (j.contains("stop")) {
    const auto& t = j["stop"];
    detail::reject_unknown(t, {"max_iters", "fp_tol", "stall_rel_tol", "stall_window"}, "spec.stop");
    read(t, "max_iters", s.stop.max_iters, "spec.stop");
    read(t, "fp_tol", s.stop.fp_tol, "spec.stop");
    read(t, "stall_rel_tol", s.stop.stall_rel_tol, "spec.stop");
    read(t, "stall_window", s.stop.stall_window, "spec.stop");
    if (s.stop.max_iters < 1) throw SpecError("spec.stop.max_iters: must be >= 1");
  }
  if (j.contains("reference")) {
    detail::reject_unknown(j["reference"], {"iterations", "tolerance"}, "spec.reference");
    read(j["reference"], "iterations", s.reference_iters, "spec.reference");
    read(j["reference"], "tolerance", s.reference_tol, "spec.reference");
    if (s.reference_iters < 1) throw SpecError("spec.reference.iterations: must be >= 1");
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    detail::reject_unknown(v, {"step_scale", "trials", "seed", "iterations"}, "spec.verify");
    read(v, "step_scale", s.verify.step_scale, "spec.verify");
    read(v, "trials", s.verify.trials, "spec.verify");
    read(v, "seed", s.verify.seed, "spec.verify");
    read(v, "iterations", s.verify.iterations, "spec.verify");
    if (!(s.verify.step_scale > 0.0)) throw SpecError("spec.verify.step_scale: must be > 0");
    if (s.verify.trials < 1) throw SpecError("spec.verify.trials: must be >= 1");
  }
  read(j, "data", s.data, "spec");
  read(j, "data_csv", s.data_csv, "spec");
  read(j, "output", s.output, "spec");
  return s;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(path + ": " + e.what());
  }
}

inline std::string parent_dir(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? "" : path.substr(0, slash);
}

inline ExperimentSpec load_spec(const std::string& path) {
  return parse_spec(load_json_file(path), parent_dir(path));
}

inline GalleryConfig parse_gallery(const nlohmann::json& j) {
  using detail::read;
  if (!j.is_object()) throw SpecError("gallery spec: top level must be an object");
  detail::reject_unknown(j, {"schema_version", "gallery", "output", "comment"}, "spec");
  int schema = 0;
  read(j, "schema_version", schema, "spec");
  if (schema != schema_version)
    throw SpecError("spec: unsupported schema_version " + std::to_string(schema));
  if (!j.contains("gallery")) throw SpecError("spec: missing 'gallery' section");
  const auto& g = j["gallery"];
  detail::reject_unknown(g, {"penalty", "alphas", "range", "samples"}, "spec.gallery");
  GalleryConfig out;
  if (!g.contains("penalty")) throw SpecError("spec.gallery: missing penalty");
  out.penalty = detail::parse_penalty(g["penalty"], out.penalty, "spec.gallery.penalty");
  if (out.penalty.tau_rule != "fixed" || out.penalty.rho_rule != "fixed")
    throw SpecError("spec.gallery.penalty: galleries take fixed tau and rho");
  read(g, "alphas", out.alphas, "spec.gallery");
  if (g.contains("range")) {
    std::vector<double> r;
    read(g, "range", r, "spec.gallery");
    if (r.size() != 2 || !(r[0] < r[1]))
      throw SpecError("spec.gallery.range: expected [lo, hi] with lo < hi");
    out.lo = r[0];
    out.hi = r[1];
  }
  read(g, "samples", out.samples, "spec.gallery");
  if (out.samples < 2) throw SpecError("spec.gallery.samples: must be >= 2");
  if (out.alphas.empty()) throw SpecError("spec.gallery.alphas: must not be empty");
  return out;
}

} // namespace proxista::experiment
