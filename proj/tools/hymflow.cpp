// hymflow: command-line front end for the flow lab.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "hymflow/pipeline.hpp"

using namespace hymflow;

namespace {

struct Overrides {
  double dt = -1.0;
  double t_end = -1.0;
  std::string out;
  long long seed = -1;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--dt", o.dt, "time step (0 = CFL)");
  cmd->add_option("--t-end", o.t_end, "final time");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "seed of the initial perturbation");
}

RunConfig load(const std::string& path, const Overrides& o) {
  RunConfig c = load_config(path);
  if (o.dt >= 0.0) c.flow.dt = o.dt;
  if (o.t_end >= 0.0) c.flow.t_end = o.t_end;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  validate(c);
  return c;
}

int verify_metric(const RunConfig& c) {
  const MetricField metric = make_config_metric(c);
  const MetricCertificate cert = certify_metric(metric);
  const auto& m = cert.conditions;
  std::printf("metric: %s  n=%d  N=%d  amplitude=%g\n", to_string(c.metric_kind).c_str(), c.n,
              c.N, c.metric_amplitude);
  std::printf("|omega|            %.3e\n", m.omega_norm);
  std::printf("|d omega|          %.3e  kahler: %s\n", m.kahler_residual, cert.kahler ? "yes" : "no");
  std::printf("|ddbar omega^n-1|  %.3e  gauduchon: %s\n", m.gauduchon_residual,
              cert.gauduchon ? "yes" : "no");
  std::printf("|ddbar omega^n-2|  %.3e  astheno-kahler: %s\n", m.astheno_residual,
              cert.astheno ? "yes" : "no");
  std::printf("volume             %.15g\n", volume(metric));
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hermitian-Yang-Mills flow on flat complex tori"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path;
  Overrides o;

  auto* verify = app.add_subcommand("verify-metric", "certify the metric hypotheses of a config");
  verify->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  add_overrides(verify, o);

  auto* run = app.add_subcommand("run", "integrate a flow and check its invariants");
  run->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  add_overrides(run, o);

  DiagnoseOptions dopt;
  auto* diag = app.add_subcommand("diagnose", "report observables of a checkpoint");
  diag->add_option("checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);
  diag->add_flag("--phi", dopt.phi, "monotonicity quantity from the stored states");
  diag->add_flag("--sigma-scan", dopt.sigma_scan, "energy-density scan over dyadic radii");
  diag->add_option("--eps1", dopt.eps1, "density threshold");

  auto* compare = app.add_subcommand("compare-flows", "metric flow vs connection flow");
  compare->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  add_overrides(compare, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*verify) return verify_metric(load(config_path, o));
    if (*run) {
      const RunReport report = run_pipeline(load(config_path, o), std::cerr);
      std::cout << report.summary();
      return report.exit_code;
    }
    if (*diag) {
      std::cout << diagnose(checkpoint_path, dopt);
      return exit_ok;
    }
    if (*compare) {
      const CompareReport r = compare_flows(load(config_path, o));
      std::printf("t,discrepancy\n");
      for (size_t k = 0; k < r.times.size(); ++k) std::printf("%.17g,%.17g\n", r.times[k], r.discrepancy[k]);
      std::printf("# dt=%.6g worst=%.6g bound=%.6g %s\n", r.dt, r.worst(), 5.0 * r.dt,
                  r.passed() ? "PASS" : "FAIL");
      return r.passed() ? exit_ok : exit_verdict_failed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_usage;
  } catch (const FlowAborted& e) {
    std::cerr << "flow aborted: " << e.what() << '\n';
    return exit_flow_aborted;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}
