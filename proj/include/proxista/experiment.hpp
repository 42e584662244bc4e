#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxista/io.hpp"
#include "proxista/linop.hpp"
#include "proxista/penalty.hpp"
#include "proxista/rng.hpp"
#include "proxista/solver.hpp"
#include "proxista/spec.hpp"
#include "proxista/svg.hpp"

namespace proxista::experiment {

/// Smallest accepted sigma_m: below this the minimizer is not unique.
inline constexpr double min_sigma_m = 1e-12;

struct Instance {
  LinearMap op;
  std::optional<LinearMap> synthesis; ///< coefficients -> signal (integer-blocks)
  Vector truth;                       ///< empty for custom instances
  Vector observed;
  SpectralBounds bounds;
  double tau = 0.0;
  double rho = 0.0; ///< weak-convexity modulus of the full penalty
  Penalty penalty;
  SmoothTerm f;
};

/// `support` distinct positions in [0, n), amplitudes +-U[lo, hi].
inline Vector sparse_spikes(Index n, Index support, double lo, double hi, std::uint64_t seed) {
  if (support > n) throw SpecError("spec.signal.support exceeds the signal length");
  SplitMix64 rng(seed);
  std::vector<Index> pos(static_cast<std::size_t>(n));
  std::iota(pos.begin(), pos.end(), Index{0});
  Vector x = Vector::Zero(n);
  for (Index i = 0; i < support; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
    const double sign = rng.below(2) == 0 ? 1.0 : -1.0;
    x[pos[static_cast<std::size_t>(i)]] = sign * rng.uniform(lo, hi);
  }
  return x;
}

inline Vector integer_levels(Index n, int levels, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector c(n);
  for (Index i = 0; i < n; ++i) c[i] = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels) + 1));
  return c;
}

namespace detail {

inline std::string resolve_path(const ExperimentSpec& s, const std::string& p) {
  if (p.empty() || p.front() == '/' || s.base_dir.empty()) return p;
  return s.base_dir + "/" + p;
}

inline Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline ScalarPenalty scalar_penalty(const PenaltyConfig& pc, double tau, double rho) {
  if (pc.family == "zero") return make_zero();
  if (pc.family == "l1") return make_l1(pc.lambda);
  if (pc.family == "firm") {
    // tau = 0 makes the firm penalty vanish identically.
    if (tau == 0.0) return make_zero();
    return make_firm(tau, rho);
  }
  return scale_penalty(make_integer_lattice(pc.levels), tau);
}

} // namespace detail

inline Instance build_instance(const ExperimentSpec& s) {
  try {
    std::optional<LinearMap> op, synthesis;
    Vector truth;
    switch (s.kind) {
    case ExperimentKind::sparse_deconv:
      op = make_convolution(s.op.filter, s.op.signal_length);
      truth = s.signal.values.empty()
                  ? sparse_spikes(s.op.signal_length, s.signal.support, s.signal.amp_lo,
                                  s.signal.amp_hi, s.signal.seed)
                  : detail::from_std(s.signal.values);
      break;
    case ExperimentKind::integer_blocks:
      synthesis = make_block_synthesis(s.op.block_length, s.op.coefficients);
      op = compose(make_convolution(s.op.blur, s.op.block_length * s.op.coefficients), *synthesis);
      truth = s.signal.values.empty() ? integer_levels(s.op.coefficients, s.signal.levels, s.signal.seed)
                                      : detail::from_std(s.signal.values);
      break;
    case ExperimentKind::custom:
      if (!s.op.matrix_csv.empty()) op = io::load_dense_map(detail::resolve_path(s, s.op.matrix_csv));
      else {
        if (s.op.matrix.empty()) throw SpecError("custom spec needs operator.matrix or operator.matrix_csv");
        const auto rows = static_cast<Index>(s.op.matrix.size());
        const auto cols = static_cast<Index>(s.op.matrix.front().size());
        std::vector<double> flat;
        for (const auto& r : s.op.matrix) {
          if (static_cast<Index>(r.size()) != cols) throw SpecError("operator.matrix: ragged rows");
          flat.insert(flat.end(), r.begin(), r.end());
        }
        op = make_dense(flat, rows, cols);
      }
      break;
    }
    if (s.kind != ExperimentKind::custom && truth.size() != op->in_dim())
      throw SpecError("spec.signal.values: expected " + std::to_string(op->in_dim()) + " entries");

    Vector observed;
    if (s.kind == ExperimentKind::custom) {
      if (!s.data_csv.empty()) observed = detail::from_std(io::load_csv_vector(detail::resolve_path(s, s.data_csv)));
      else observed = detail::from_std(s.data);
      if (observed.size() != op->out_dim())
        throw SpecError("custom spec: data has " + std::to_string(observed.size()) +
                        " entries, operator output is " + std::to_string(op->out_dim()));
    } else {
      SplitMix64 noise(s.noise.seed);
      observed = op->apply(truth) + s.noise.std * noise.normal_vector(op->out_dim());
    }

    const SpectralBounds bounds = gram_spectral_bounds(*op);
    if (s.kind != ExperimentKind::custom && bounds.sigma_m <= min_sigma_m)
      throw SpecError("operator Gram is singular (sigma_m = " + io::format_double(bounds.sigma_m) +
                      " <= 1e-12); the minimizer would not be unique");

    const auto& pc = s.penalty;
    double rho = pc.rho_rule == "sigma-min" ? bounds.sigma_m : pc.rho;
    double tau = pc.tau;
    if (pc.tau_rule == "three-rho-std") tau = 3.0 * rho * s.noise.std;
    if (pc.tau_rule == "match-sigma-min") {
      if (pc.family != "integer-lattice")
        throw SpecError("tau_rule match-sigma-min applies to the integer-lattice family");
      tau = bounds.sigma_m / 2.0;
    }
    if (pc.family == "l1") tau = pc.lambda;
    ScalarPenalty scalar = detail::scalar_penalty(pc, tau, rho);
    Penalty penalty(scalar, op->in_dim());
    SmoothTerm f = make_quadratic(*op, observed, bounds);
    return Instance{*op, synthesis, truth, observed, bounds, tau, scalar.rho(), penalty, f};
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(std::string("spec: ") + e.what());
  }
}

/// The step each configured solver will use; rejects alpha * rho >= 1.
inline double resolve_solver_step(const SolverConfig& sc, const Instance& inst) {
  const double rho = inst.rho;
  double alpha = 0.0;
  if (sc.method == "twist") alpha = TwistParams::from_bounds(inst.bounds).step;
  else if (sc.step == "mm") alpha = sc.safety * max_step_mm(inst.bounds);
  else if (sc.step == "fb") alpha = sc.safety * max_step_fb(inst.bounds.sigma_M, rho);
  else if (sc.step == "contraction") {
    if (!(rho < inst.bounds.sigma_m))
      throw SpecError("solver " + sc.id + ": contraction step needs rho < sigma_m (rho = " +
                      io::format_double(rho) + ", sigma_m = " + io::format_double(inst.bounds.sigma_m) + ")");
    alpha = sc.safety * 2.0 / (inst.bounds.sigma_M + inst.bounds.sigma_m);
  } else alpha = sc.alpha;
  if (!(alpha > 0.0)) throw SpecError("solver " + sc.id + ": step must be positive");
  if (alpha * rho >= 1.0)
    throw SpecError("solver " + sc.id + ": step " + io::format_double(alpha) +
                    " times penalty weak-convexity " + io::format_double(rho) + " is " +
                    io::format_double(alpha * rho) + " >= 1; the threshold is undefined. Use a step below 1/rho = " +
                    io::format_double(1.0 / rho));
  return alpha;
}

struct SolverRun {
  SolverConfig config;
  double alpha = 0.0;
  SolveTrace trace;
  bool diverged = false;
  std::string message;
  double elapsed_s = 0.0;
};

struct RunResult {
  RunResult(ExperimentSpec s, Instance i) : spec(std::move(s)), instance(std::move(i)) {}

  ExperimentSpec spec;
  Instance instance;
  double alpha0 = 0.0; ///< 1 / sigma_M
  double alpha1 = 0.0; ///< 2 / (sigma_M + rho)
  std::optional<Vector> reference;
  int reference_iterations = 0;
  double reference_fp = 0.0;
  double reference_cost = 0.0;
  bool reference_certified = false;
  double reference_s = 0.0;
  std::vector<SolverRun> runs;
  Vector least_squares; ///< integer-blocks: unregularized coefficient fit
  Vector rounded;       ///< integer-blocks: reference rounded onto the lattice
  int mismatches = 0;
  double total_s = 0.0;

  const SolverRun* find(const std::string& id) const {
    for (const auto& r : runs)
      if (r.config.id == id) return &r;
    return nullptr;
  }
  bool unexpected_divergence() const {
    return std::any_of(runs.begin(), runs.end(),
                       [](const SolverRun& r) { return r.diverged && !r.config.expect_divergence; });
  }
};

/// Minimizer used for distance traces: `iters` ISTA steps at 1/sigma_M from
/// zero with the early stops disabled.
inline SolveTrace reference_trace(const Instance& inst, int iters) {
  StopCriteria st;
  st.max_iters = iters;
  st.fp_tol = 0.0;
  st.stall_window = 0;
  return solve_ista(inst.f, inst.penalty, Vector::Zero(inst.op.in_dim()),
                    {StepKind::mm, max_step_mm(inst.bounds), 1.0}, st);
}

inline SolverRun run_solver(const SolverConfig& sc, const Instance& inst, const StopCriteria& stop) {
  SolverRun run;
  run.config = sc;
  run.alpha = resolve_solver_step(sc, inst);
  const Vector x0 = Vector::Zero(inst.op.in_dim());
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (sc.method == "ista") {
      run.trace = solve_ista(inst.f, inst.penalty, x0, {StepKind::explicit_step, run.alpha, 1.0}, stop);
    } else if (sc.method == "fista") {
      run.trace = solve_fista(inst.f, inst.penalty, x0, run.alpha, stop);
    } else {
      run.trace = solve_twist(inst.f, inst.penalty, x0, TwistParams::from_bounds(inst.bounds), stop);
    }
  } catch (const DivergenceError& e) {
    run.diverged = true;
    run.message = e.what();
    run.trace = e.trace();
  }
  run.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

/// Builds the instance, validates every solver step, computes the reference
/// minimizer (when asked) and runs the solver list from x0 = 0.
inline RunResult run_experiment(const ExperimentSpec& spec, bool with_reference = true) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res(spec, build_instance(spec));
  const Instance& inst = res.instance;
  res.alpha0 = max_step_mm(inst.bounds);
  res.alpha1 = max_step_fb(inst.bounds.sigma_M, inst.rho);
  for (const auto& sc : spec.solvers) resolve_solver_step(sc, inst);

  StopCriteria stop = spec.stop;
  if (with_reference) {
    const auto r0 = std::chrono::steady_clock::now();
    SolveTrace ref = reference_trace(inst, spec.reference_iters);
    res.reference_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - r0).count();
    res.reference = ref.final_iterate;
    res.reference_iterations = static_cast<int>(ref.iterations());
    res.reference_fp = fixed_point_residual(inst.f, inst.penalty, res.alpha0, ref.final_iterate);
    res.reference_cost = cost(inst.f, inst.penalty, ref.final_iterate);
    res.reference_certified = res.reference_fp < spec.reference_tol;
    stop.reference = res.reference;
  }
  for (const auto& sc : spec.solvers) res.runs.push_back(run_solver(sc, inst, stop));

  if (spec.kind == ExperimentKind::integer_blocks) {
    const Matrix h = inst.op.to_dense();
    res.least_squares = h.colPivHouseholderQr().solve(inst.observed);
    if (res.reference) {
      const double top = static_cast<double>(spec.penalty.levels);
      res.rounded = res.reference->unaryExpr([top](double v) { return std::clamp(std::round(v), 0.0, top); });
      res.mismatches = static_cast<int>((res.rounded.array() != inst.truth.array()).count());
    }
  }
  res.total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline RunResult run_sparse_deconv(const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::sparse_deconv)
    throw SpecError("run_sparse_deconv: spec is tagged " + std::string(to_string(spec.kind)));
  return run_experiment(spec);
}

inline RunResult run_integer_blocks(const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::integer_blocks)
    throw SpecError("run_integer_blocks: spec is tagged " + std::string(to_string(spec.kind)));
  return run_experiment(spec);
}

/// First iteration at which the trace's distance to the reference is <= tol.
inline std::optional<std::size_t> first_within(const SolveTrace& t, double tol) {
  for (std::size_t k = 0; k < t.dist_to_ref.size(); ++k)
    if (t.dist_to_ref[k] <= tol) return k;
  return std::nullopt;
}

/// Earliest k such that `low` has cost <= `high` at every iteration from k on
/// (a finished trace holds its last value). Slack: 1e-12 relative, floored at 1e-12.
inline std::optional<std::size_t> cost_crossover(const SolveTrace& low, const SolveTrace& high) {
  const std::size_t n = std::max(low.cost.size(), high.cost.size());
  std::optional<std::size_t> from;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = low.cost[std::min(k, low.cost.size() - 1)];
    const double b = high.cost[std::min(k, high.cost.size() - 1)];
    if (a <= b + 1e-12 * std::max(1.0, std::abs(b))) {
      if (!from) from = k;
    } else {
      from.reset();
    }
  }
  return from;
}

// ---------------------------------------------------------------------------
// Artifacts

enum class Format { csv, svg, both };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "svg") return Format::svg;
  if (s == "both") return Format::both;
  throw SpecError("--format must be csv, svg or both (got '" + s + "')");
}

inline bool wants_csv(Format f) { return f != Format::svg; }
inline bool wants_svg(Format f) { return f != Format::csv; }

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

inline nlohmann::json spec_to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["schema_version"] = s.schema;
  j["experiment"] = to_string(s.kind);
  auto& o = j["operator"];
  if (s.kind == ExperimentKind::sparse_deconv) {
    o["filter"] = s.op.filter;
    o["signal_length"] = s.op.signal_length;
  } else if (s.kind == ExperimentKind::integer_blocks) {
    o["block_length"] = s.op.block_length;
    o["coefficients"] = s.op.coefficients;
    o["blur"] = s.op.blur;
  } else {
    if (!s.op.matrix_csv.empty()) o["matrix_csv"] = s.op.matrix_csv;
    else o["matrix"] = s.op.matrix;
  }
  j["penalty"] = {{"family", s.penalty.family}, {"tau_rule", s.penalty.tau_rule},
                  {"rho_rule", s.penalty.rho_rule}};
  if (s.penalty.tau_rule == "fixed") j["penalty"]["tau"] = s.penalty.tau;
  if (s.penalty.rho_rule == "fixed") j["penalty"]["rho"] = s.penalty.rho;
  if (s.penalty.family == "l1") j["penalty"]["lambda"] = s.penalty.lambda;
  if (s.penalty.family == "integer-lattice") j["penalty"]["K"] = s.penalty.levels;
  if (s.kind != ExperimentKind::custom) {
    j["noise"] = {{"std", s.noise.std}, {"seed", s.noise.seed}};
    auto& g = j["signal"];
    g["seed"] = s.signal.seed;
    if (!s.signal.values.empty()) g["values"] = s.signal.values;
    else if (s.kind == ExperimentKind::sparse_deconv) {
      g["support"] = s.signal.support;
      g["amplitude"] = {s.signal.amp_lo, s.signal.amp_hi};
    } else g["levels"] = s.signal.levels;
  } else if (!s.data_csv.empty()) j["data_csv"] = s.data_csv;
  else j["data"] = s.data;
  for (const auto& sc : s.solvers) {
    nlohmann::json e{{"id", sc.id}, {"method", sc.method}, {"step", sc.step}};
    if (sc.step == "explicit") e["alpha"] = sc.alpha;
    if (sc.safety != 1.0) e["safety"] = sc.safety;
    if (sc.expect_divergence) e["expect_divergence"] = true;
    j["solvers"].push_back(e);
  }
  j["stop"] = {{"max_iters", s.stop.max_iters}, {"fp_tol", s.stop.fp_tol},
               {"stall_rel_tol", s.stop.stall_rel_tol}, {"stall_window", s.stop.stall_window}};
  j["reference"] = {{"iterations", s.reference_iters}, {"tolerance", s.reference_tol}};
  j["verify"] = {{"step_scale", s.verify.step_scale}, {"trials", s.verify.trials},
                 {"seed", s.verify.seed}, {"iterations", s.verify.iterations}};
  j["output"] = s.output;
  return j;
}

inline nlohmann::json make_manifest(const RunResult& r) {
  const Instance& inst = r.instance;
  nlohmann::json m;
  m["software"] = {{"name", "proxista"}, {"version", version}};
  m["experiment"] = to_string(r.spec.kind);
  m["rng"] = {{"algorithm", SplitMix64::algorithm},
              {"signal_seed", r.spec.signal.seed},
              {"noise_seed", r.spec.noise.seed}};
  m["sigma_m"] = inst.bounds.sigma_m;
  m["sigma_M"] = inst.bounds.sigma_M;
  m["spectral_method"] = inst.bounds.method == SpectralMethod::exact_eig ? "exact-eig" : "power-iteration";
  m["rho"] = inst.rho;
  m["tau"] = inst.tau;
  m["alpha0"] = r.alpha0;
  m["alpha1"] = r.alpha1;
  m["alpha_ratio"] = r.alpha1 / r.alpha0;
  if (r.reference) {
    m["reference"] = {{"iterations", r.reference_iterations},
                      {"fp_residual", r.reference_fp},
                      {"cost", r.reference_cost},
                      {"certified", r.reference_certified},
                      {"tolerance", r.spec.reference_tol}};
  }
  for (const auto& run : r.runs) {
    nlohmann::json e{{"id", run.config.id},
                     {"method", run.config.method},
                     {"step_rule", run.config.method == "twist" ? "twist" : run.config.step},
                     {"alpha", run.alpha},
                     {"iterations", run.trace.iterations()},
                     {"final_cost", io::format_double(run.trace.cost.back())},
                     {"stop", run.diverged ? "diverged" : to_string(run.trace.stop)},
                     {"expect_divergence", run.config.expect_divergence}};
    if (run.config.method == "twist") {
      const auto tp = TwistParams::from_bounds(inst.bounds);
      e["twist"] = {{"kappa", tp.kappa}, {"alpha", tp.alpha}, {"beta", tp.beta}, {"monotone", tp.monotone}};
    }
    if (r.reference) {
      if (auto k = first_within(run.trace, 1e-6)) e["iterations_to_1e-6"] = *k;
    }
    if (run.diverged) e["message"] = run.message;
    m["solvers"].push_back(e);
  }
  if (r.spec.kind == ExperimentKind::integer_blocks && r.reference) {
    m["recovery"] = {{"mismatches", r.mismatches}, {"exact", r.mismatches == 0}};
  }
  nlohmann::json timing{{"total_s", r.total_s}, {"reference_s", r.reference_s}};
  for (const auto& run : r.runs) timing["solvers"][run.config.id] = run.elapsed_s;
  m["timing"] = timing;
  m["spec"] = spec_to_json(r.spec);
  return m;
}

namespace detail {

inline std::vector<double> iota_vec(std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 0.0);
  return v;
}

inline svg::LineChart trace_chart(const RunResult& r, bool distance) {
  svg::LineChart c;
  c.log_y = true;
  c.x_label = "iteration";
  if (distance) {
    c.title = "Distance to the reference minimizer";
    c.y_label = "||x_k - x*||";
  } else {
    c.title = "Cost above the reference minimum";
    c.y_label = "C(x_k) - C(x*)";
  }
  for (const auto& run : r.runs) {
    svg::Series s{run.config.id, iota_vec(run.trace.size()), {}, false};
    if (distance) s.y = run.trace.dist_to_ref;
    else
      for (double c0 : run.trace.cost) s.y.push_back(c0 - r.reference_cost);
    c.series.push_back(std::move(s));
  }
  return c;
}

} // namespace detail

/// Writes manifest.json plus the CSV and/or SVG artifacts; returns the paths written.
inline std::vector<std::string> write_artifacts(const RunResult& r, const std::filesystem::path& dir,
                                                Format fmt) {
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back((dir / name).string());
  };
  const Instance& inst = r.instance;
  const bool blocks = r.spec.kind == ExperimentKind::integer_blocks;

  // Signal-domain vectors for plotting.
  auto to_signal = [&](const Vector& c) -> Vector { return blocks ? inst.synthesis->apply(c) : c; };

  if (wants_csv(fmt)) {
    for (const auto& run : r.runs) {
      std::ostringstream o;
      io::write_trace_csv(o, run.trace, false);
      emit("traces/" + run.config.id + ".csv", o.str());
    }
    std::vector<std::string> header{"index"};
    std::vector<std::vector<double>> cols{detail::iota_vec(static_cast<std::size_t>(inst.op.in_dim()))};
    if (inst.truth.size()) header.push_back("truth"), cols.push_back(io::to_std(inst.truth));
    if (r.reference) header.push_back("estimate"), cols.push_back(io::to_std(*r.reference));
    if (blocks) {
      header.push_back("least_squares"), cols.push_back(io::to_std(r.least_squares));
      if (r.rounded.size()) header.push_back("rounded"), cols.push_back(io::to_std(r.rounded));
    }
    std::ostringstream sig;
    io::write_vector_csv(sig, header, cols);
    emit(blocks ? "coefficients.csv" : "signal.csv", sig.str());
    std::ostringstream obs;
    io::write_vector_csv(obs, {"index", "observed"},
                         {detail::iota_vec(static_cast<std::size_t>(inst.observed.size())),
                          io::to_std(inst.observed)});
    emit("observed.csv", obs.str());
    for (const auto& run : r.runs) {
      std::ostringstream fin;
      io::write_vector_csv(fin, {"index", "x"},
                           {detail::iota_vec(static_cast<std::size_t>(run.trace.final_iterate.size())),
                            io::to_std(run.trace.final_iterate)});
      emit("final/" + run.config.id + ".csv", fin.str());
    }
  }
  if (wants_svg(fmt)) {
    if (r.reference) {
      emit("cost.svg", detail::trace_chart(r, false).render());
      emit("distance.svg", detail::trace_chart(r, true).render());
    }
    svg::LineChart c;
    c.title = blocks ? "Clean signal, estimate and least squares" : "True signal and estimate";
    c.x_label = "n";
    c.y_label = "amplitude";
    if (inst.truth.size()) {
      const Vector t = to_signal(inst.truth);
      c.series.push_back({"truth", detail::iota_vec(static_cast<std::size_t>(t.size())), io::to_std(t), true});
    }
    if (r.reference) {
      const Vector e = to_signal(*r.reference);
      c.series.push_back({"estimate", detail::iota_vec(static_cast<std::size_t>(e.size())), io::to_std(e), false});
    }
    if (blocks) {
      const Vector ls = to_signal(r.least_squares);
      c.series.push_back({"least squares", detail::iota_vec(static_cast<std::size_t>(ls.size())), io::to_std(ls), true});
    }
    emit("signal.svg", c.render());
  }
  if (blocks && r.reference) {
    nlohmann::json rep{{"truth", io::to_std(inst.truth)},
                       {"rounded", io::to_std(r.rounded)},
                       {"mismatches", r.mismatches},
                       {"exact", r.mismatches == 0}};
    emit("recovery.json", rep.dump(2) + "\n");
  }
  emit("manifest.json", make_manifest(r).dump(2) + "\n");
  return written;
}

// ---------------------------------------------------------------------------
// Penalty gallery

struct Gallery {
  std::string name;
  std::vector<double> alphas;
  std::vector<double> s;
  std::vector<double> penalty;
  std::vector<std::vector<double>> thresholds; ///< one column per alpha
  std::vector<double> breakpoints;             ///< inside the plotted range
};

/// Samples P and T_alpha on [lo, hi]. Rejects any alpha with alpha * rho >= 1.
inline Gallery plot_penalty_gallery(const ScalarPenalty& p, const std::vector<double>& alphas,
                                    double lo, double hi, int samples) {
  if (samples < 2 || !(lo < hi)) throw SpecError("gallery: need samples >= 2 and lo < hi");
  for (double a : alphas) {
    if (!(a > 0.0)) throw SpecError("gallery: step must be positive");
    if (a * p.rho() >= 1.0)
      throw SpecError("gallery: step " + io::format_double(a) + " violates alpha * rho < 1 (rho = " +
                      io::format_double(p.rho()) + ", so alpha must stay below " +
                      io::format_double(1.0 / p.rho()) + ")");
  }
  Gallery g;
  g.name = p.name();
  g.alphas = alphas;
  g.thresholds.resize(alphas.size());
  for (int i = 0; i < samples; ++i) {
    const double s = lo + (hi - lo) * i / (samples - 1);
    g.s.push_back(s);
    g.penalty.push_back(p.eval(s));
    for (std::size_t a = 0; a < alphas.size(); ++a) g.thresholds[a].push_back(p.prox(s, alphas[a]));
  }
  for (double a : alphas)
    for (double b : p.breakpoints(a))
      if (b >= lo && b <= hi) g.breakpoints.push_back(b);
  std::sort(g.breakpoints.begin(), g.breakpoints.end());
  g.breakpoints.erase(std::unique(g.breakpoints.begin(), g.breakpoints.end()), g.breakpoints.end());
  return g;
}

inline ScalarPenalty gallery_penalty(const PenaltyConfig& pc) {
  try {
    if (pc.family == "integer-lattice") {
      auto base = make_integer_lattice(pc.levels);
      return pc.tau == 1.0 ? base : scale_penalty(base, pc.tau);
    }
    return detail::scalar_penalty(pc, pc.tau, pc.rho);
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(std::string("gallery: ") + e.what());
  }
}

inline std::vector<std::string> write_gallery(const Gallery& g, const std::filesystem::path& dir,
                                              Format fmt) {
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back((dir / name).string());
  };
  if (wants_csv(fmt)) {
    std::ostringstream pen;
    io::write_vector_csv(pen, {"s", "penalty"}, {g.s, g.penalty});
    emit("penalty.csv", pen.str());
    std::vector<std::string> header{"s"};
    std::vector<std::vector<double>> cols{g.s};
    for (std::size_t a = 0; a < g.alphas.size(); ++a) {
      header.push_back("threshold_alpha_" + io::format_double(g.alphas[a]));
      cols.push_back(g.thresholds[a]);
    }
    std::ostringstream thr;
    io::write_vector_csv(thr, header, cols);
    emit("threshold.csv", thr.str());
    std::ostringstream bp;
    io::write_vector_csv(bp, {"breakpoint"}, {g.breakpoints});
    emit("breakpoints.csv", bp.str());
  }
  if (wants_svg(fmt)) {
    svg::LineChart pc;
    pc.title = "Penalty: " + g.name;
    pc.x_label = "s";
    pc.y_label = "P(s)";
    pc.series.push_back({"P", g.s, g.penalty, false});
    pc.x_markers = g.breakpoints;
    emit("penalty.svg", pc.render());
    svg::LineChart tc;
    tc.title = "Threshold: " + g.name;
    tc.x_label = "s";
    tc.y_label = "T(s)";
    for (std::size_t a = 0; a < g.alphas.size(); ++a)
      tc.series.push_back({"alpha " + io::format_double(g.alphas[a]), g.s, g.thresholds[a], false});
    tc.x_markers = g.breakpoints;
    emit("threshold.svg", tc.render());
  }
  return written;
}

} // namespace proxista::experiment
