#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "proxista/analysis.hpp"
#include "proxista/experiment.hpp"
#include "proxista/io.hpp"

namespace proxista::experiment {

struct VerifyResult {
  double alpha = 0.0;
  std::vector<PropertyReport> reports;
  bool all_pass = false;
  nlohmann::json bundle;

  const PropertyReport* find(const std::string& property) const {
    for (const auto& r : reports)
      if (r.property == property) return &r;
    return nullptr;
  }
};

namespace detail {

inline PropertyReport failed_report(const std::string& property, const std::string& why) {
  PropertyReport r;
  r.property = property;
  r.worst = infinity;
  r.pass = false;
  r.detail = why;
  return r;
}

inline SolveTrace traced_ista(const Instance& inst, double alpha, int iters) {
  StopCriteria st;
  st.max_iters = iters;
  st.fp_tol = 0.0;
  st.stall_window = 0;
  st.record_iterates = true;
  try {
    return solve_ista(inst.f, inst.penalty, Vector::Zero(inst.op.in_dim()),
                      {StepKind::explicit_step, alpha, 1.0}, st);
  } catch (const DivergenceError& e) {
    return e.trace();
  }
}

} // namespace detail

/// Runs the operator-property suite on the configured instance at
/// alpha = step_scale * 2 / (sigma_M + rho). Every report lands in the bundle;
/// all_pass is true only when each one passes.
inline VerifyResult verify_claims(const ExperimentSpec& spec) {
  const Instance inst = build_instance(spec);
  const auto& cfg = spec.verify;
  const double sigma = inst.bounds.sigma_M, rho = inst.rho;
  const double alpha = cfg.step_scale * max_step_fb(sigma, rho);
  if (alpha * rho >= 1.0)
    throw SpecError("verify: step " + io::format_double(alpha) + " gives alpha * rho >= 1");
  const double alpha_mm = 0.999 * max_step_mm(inst.bounds);
  const int trials = cfg.trials;
  const std::uint64_t seed = cfg.seed;

  VerifyResult out;
  out.alpha = alpha;
  auto& reps = out.reports;
  auto add = [&](PropertyReport r, const std::string& name) {
    r.property = name;
    reps.push_back(std::move(r));
  };

  add(empirical_lipschitz(threshold_probe(inst.penalty, alpha), trials, seed, 1.0 / (1.0 - alpha * rho)),
      "threshold-lipschitz");
  add(check_averaged(scaled_threshold_probe(inst.penalty, alpha), 0.5, trials, seed + 1),
      "scaled-threshold-half-averaged");
  add(cocoercivity_check(inst.f, trials, seed + 2), "cocoercivity");
  add(shifted_gradient_check(inst.f, rho, trials, seed + 3), "shifted-gradient-lipschitz");
  add(descent_lemma_check(inst.f, trials, seed + 4), "descent-lemma");

  const double beta = alpha * (sigma + rho) / 2.0;
  if (beta > 0.0 && beta < 1.0)
    add(check_averaged(scaled_forward_probe(inst.f, alpha, rho), beta, trials, seed + 5),
        "scaled-forward-averaged");
  else
    add(detail::failed_report("", "beta = alpha (sigma + rho) / 2 = " + io::format_double(beta) +
                                      " lies outside (0, 1)"),
        "scaled-forward-averaged");

  {
    const auto a = affine_averaged_interval(scaled_forward_matrix(inst.op, alpha, rho));
    PropertyReport r;
    r.worst = a.eig_min;
    r.pass = a.averaged;
    r.tolerance = 1e-12;
    r.detail = "eig_min " + io::format_double(a.eig_min) + ", eig_max " + io::format_double(a.eig_max);
    add(r, "scaled-forward-affine-interval");
  }
  {
    auto comp = composition_averaged_check(threshold_probe(inst.penalty, alpha),
                                           forward_probe(inst.f, alpha), trials, seed + 6);
    PropertyReport r = comp.report;
    if (comp.beta) r.detail = "beta " + io::format_double(*comp.beta);
    else r.detail = "no beta on the 0.05 grid passed";
    add(r, "ista-operator-averaged");
  }

  const SolveTrace run = detail::traced_ista(inst, alpha, cfg.iterations);
  add(descent_check(run), "ista-monotone-descent");
  add(iterate_inequality_check(inst.f, inst.penalty, alpha, run.iterates), "ista-iterate-inequality");

  add(majorization_check(inst.f, inst.penalty, alpha_mm, trials, seed + 7), "mm-majorization");
  const SolveTrace mm_run = detail::traced_ista(inst, alpha_mm, std::min(cfg.iterations, 200));
  add(surrogate_gap_check(inst.f, inst.penalty, alpha_mm, mm_run.iterates, 5, seed + 8),
      "mm-surrogate-gap");

  const SolveTrace ref = reference_trace(inst, spec.reference_iters);
  {
    const auto cert = certify_minimizer(inst.f, inst.penalty, ref.final_iterate,
                                        max_step_mm(inst.bounds), spec.reference_tol);
    PropertyReport r;
    r.trials = static_cast<int>(ref.iterations());
    r.worst = cert.residual;
    r.pass = cert.pass;
    r.tolerance = spec.reference_tol;
    r.witness_a = ref.final_iterate;
    r.detail = "fixed-point residual of the reference minimizer";
    add(r, "reference-minimizer");
  }
  {
    const double bound = contraction_rate(inst.bounds, rho, alpha);
    PropertyReport r = distance_ratio_check(run.iterates, ref.final_iterate, bound);
    r.detail = "contraction rate " + io::format_double(bound);
    add(r, "fixed-point-distance-ratio");
  }

  out.all_pass = std::all_of(reps.begin(), reps.end(), [](const PropertyReport& r) { return r.pass; });
  nlohmann::json b;
  b["software"] = {{"name", "proxista"}, {"version", version}};
  b["experiment"] = to_string(spec.kind);
  b["sigma_m"] = inst.bounds.sigma_m;
  b["sigma_M"] = sigma;
  b["rho"] = rho;
  b["tau"] = inst.tau;
  b["alpha"] = alpha;
  b["step_scale"] = cfg.step_scale;
  b["alpha_fb"] = max_step_fb(sigma, rho);
  b["alpha_mm"] = alpha_mm;
  for (const auto& r : reps) b["reports"].push_back(io::to_json(r));
  b["all_pass"] = out.all_pass;
  b["spec"] = spec_to_json(spec);
  out.bundle = std::move(b);
  return out;
}

} // namespace proxista::experiment
