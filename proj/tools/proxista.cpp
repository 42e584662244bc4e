// proxista command-line front end: galleries, solver runs, experiments and
// property verification driven by JSON spec files.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "proxista/proxista.hpp"

namespace {

namespace px = proxista;
namespace ex = proxista::experiment;

enum Exit : int { ok = 0, spec_error = 1, divergence = 2, verification_failed = 3 };

struct Options {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "both";
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--spec", o.spec, "JSON spec file")->required();
  cmd->add_option("--out", o.out, "output directory (default: the spec's output field)");
  cmd->add_option("--seed", o.seed,
                  "override seeds: signal uses SEED, noise uses SEED + 1, property sampling uses SEED");
  cmd->add_option("--format", o.format, "artifacts to write")->check(CLI::IsMember({"csv", "svg", "both"}));
}

ex::ExperimentSpec load(const Options& o) {
  ex::ExperimentSpec s = ex::load_spec(o.spec);
  if (o.seed) {
    s.signal.seed = *o.seed;
    s.noise.seed = *o.seed + 1;
    s.verify.seed = *o.seed;
  }
  if (!o.out.empty()) s.output = o.out;
  return s;
}

void print_runs(const ex::RunResult& r) {
  const auto& b = r.instance.bounds;
  std::printf("sigma_m %.6g  sigma_M %.6g  rho %.6g  tau %.6g  alpha0 %.6g  alpha1 %.6g  ratio %.6g\n",
              b.sigma_m, b.sigma_M, r.instance.rho, r.instance.tau, r.alpha0, r.alpha1,
              r.alpha1 / r.alpha0);
  if (r.reference)
    std::printf("reference: %d iterations, fixed-point residual %.3g (%s)\n", r.reference_iterations,
                r.reference_fp, r.reference_certified ? "certified" : "NOT certified");
  for (const auto& run : r.runs) {
    std::printf("  %-10s alpha %-10.6g iters %-6zu cost %-14.10g %s", run.config.id.c_str(), run.alpha,
                run.trace.iterations(), run.trace.cost.back(),
                run.diverged ? "diverged" : px::to_string(run.trace.stop));
    if (r.reference) {
      if (auto k = ex::first_within(run.trace, 1e-6)) std::printf("  dist<=1e-6 at %zu", *k);
    }
    std::printf("\n");
  }
  if (r.spec.kind == ex::ExperimentKind::integer_blocks && r.reference)
    std::printf("rounded recovery: %d mismatches\n", r.mismatches);
}

int finish_runs(const ex::RunResult& r) {
  for (const auto& run : r.runs)
    if (run.diverged && !run.config.expect_divergence) {
      std::fprintf(stderr, "error: %s\n", run.message.c_str());
      return divergence;
    }
  return ok;
}

int cmd_experiment(const Options& o, bool with_reference) {
  const ex::ExperimentSpec s = load(o);
  const ex::RunResult r = ex::run_experiment(s, with_reference);
  ex::write_artifacts(r, s.output, ex::parse_format(o.format));
  print_runs(r);
  std::printf("artifacts in %s\n", s.output.c_str());
  return finish_runs(r);
}

int cmd_verify(const Options& o) {
  const ex::ExperimentSpec s = load(o);
  const ex::VerifyResult v = ex::verify_claims(s);
  ex::write_text(std::filesystem::path(s.output) / "verify.json", v.bundle.dump(2) + "\n");
  std::printf("alpha %.6g\n", v.alpha);
  for (const auto& r : v.reports)
    std::printf("  %-34s %s  worst %.6g  %s\n", r.property.c_str(), r.pass ? "PASS" : "FAIL", r.worst,
                r.detail.c_str());
  std::printf("bundle in %s/verify.json\n", s.output.c_str());
  return v.all_pass ? ok : verification_failed;
}

int cmd_gallery(const Options& o) {
  const auto j = ex::load_json_file(o.spec);
  const ex::GalleryConfig g = ex::parse_gallery(j);
  const std::string out = !o.out.empty() ? o.out : j.value("output", std::string("out/gallery"));
  const auto penalty = ex::gallery_penalty(g.penalty);
  const auto gal = ex::plot_penalty_gallery(penalty, g.alphas, g.lo, g.hi, g.samples);
  for (const auto& f : ex::write_gallery(gal, out, ex::parse_format(o.format)))
    std::printf("wrote %s\n", f.c_str());
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"proxista: forward-backward splitting with weakly convex penalties"};
  app.require_subcommand(1);
  Options o;
  auto* gallery = app.add_subcommand("gallery", "penalty and threshold curves");
  auto* solve = app.add_subcommand("solve", "run the spec's solvers (no reference minimizer)");
  auto* experiment = app.add_subcommand("experiment", "full experiment with reference and charts");
  auto* verify = app.add_subcommand("verify", "operator-property checks; exit 3 on any failure");
  for (auto* c : {gallery, solve, experiment, verify}) add_common(c, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : spec_error;
  }

  try {
    if (*gallery) return cmd_gallery(o);
    if (*solve) return cmd_experiment(o, false);
    if (*experiment) return cmd_experiment(o, true);
    return cmd_verify(o);
  } catch (const px::SpecError& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return spec_error;
  } catch (const px::StepTooLarge& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return spec_error;
  } catch (const px::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return divergence;
  } catch (const px::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return spec_error;
  }
}
