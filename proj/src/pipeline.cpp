#include "hymflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace hymflow {

namespace {

namespace fs = std::filesystem;

constexpr cplx I(0.0, 1.0);

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Random real combination of the low Fourier modes, scaled to sup = 1.
Eigen::ArrayXd random_conformal_factor(const GridGeometry& grid, int top, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int d = grid.real_dim();
  const int width = 2 * top + 1;
  int count = 1;
  for (int a = 0; a < d; ++a) count *= width;
  std::vector<Eigen::ArrayXd> x;
  for (int a = 0; a < d; ++a) x.push_back(grid.coordinate(a) / grid.periods[a]);
  Eigen::ArrayXd phi = Eigen::ArrayXd::Zero(grid.sites());
  for (int code = 0; code < count; ++code) {
    Eigen::ArrayXd arg = Eigen::ArrayXd::Zero(grid.sites());
    bool zero = true;
    int c = code;
    for (int a = 0; a < d; ++a) {
      const int m = c % width - top;
      c /= width;
      if (m != 0) zero = false;
      arg += 2.0 * std::numbers::pi * m * x[a];
    }
    if (zero) continue;
    const double amp = normal(rng);
    const double shift = phase(rng);
    phi += amp * (arg + shift).cos();
  }
  const double sup = phi.abs().maxCoeff();
  return sup > 0.0 ? Eigen::ArrayXd(phi / sup) : phi;
}

Trajectory<ConnectionState> as_connections(const Trajectory<BundleState>& traj,
                                           const GridGeometry& grid) {
  Trajectory<ConnectionState> out;
  out.dt = traj.dt;
  for (size_t k = 0; k < traj.states.size(); ++k) {
    out.push(traj.times[k], unitary_connection(grid, traj.states[k]));
  }
  return out;
}

std::string state_name(size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%06zu.hymf", k);
  return buf;
}

}  // namespace

GridGeometry make_geometry(const RunConfig& c) {
  return build_torus_geometry(c.n, c.N, c.periods);
}

MetricField make_config_metric(const RunConfig& c) {
  return make_test_metric(make_geometry(c), c.metric_kind, c.metric_amplitude);
}

BundleState make_config_bundle(const RunConfig& c, const GridGeometry& grid) {
  BundleState b = make_test_bundle(grid, c.bundle);
  if (c.perturbation > 0.0) {
    const Eigen::ArrayXd phi = c.perturbation * random_conformal_factor(grid, c.perturbation_mode, c.seed);
    b.H.scale(phi.exp().cast<cplx>());
    b.H0 = b.H;
  }
  return b;
}

MetricCertificate certify_metric(const MetricField& metric) {
  MetricCertificate cert;
  cert.conditions = metric_condition_check(metric);
  const double tol = MetricCertificate::tolerance * (1.0 + cert.conditions.omega_norm);
  cert.kahler = cert.conditions.kahler_residual <= tol;
  cert.gauduchon = cert.conditions.gauduchon_residual <= tol;
  cert.astheno = metric.grid.n < 2 || cert.conditions.astheno_residual <= tol;
  return cert;
}

std::string RunReport::summary() const {
  std::ostringstream out;
  out << "status: " << (failure.empty() ? "completed" : "aborted (" + failure + ")") << '\n';
  out << "dt: " << fmt(dt) << '\n';
  out << "lambda: " << fmt(lambda) << '\n';
  if (!records.empty()) {
    const auto& last = records.back();
    out << "t_final: " << fmt(last.t) << '\n';
    out << "he_resid: " << fmt(last.he_resid) << '\n';
    out << "ym: " << fmt(last.ym) << '\n';
    out << "sup_lambda_f: " << fmt(last.sup_lambda_f) << '\n';
  }
  out << "clusters: " << clusters.size() << '\n';
  for (const auto& c : clusters) {
    out << "  value " << fmt(c.value) << " multiplicity " << c.multiplicity << " spread "
        << fmt(c.spread) << '\n';
  }
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  for (const auto& v : verdicts) {
    out << "verdict " << v.name << ": " << (v.passed ? "PASS" : "FAIL");
    if (!v.detail.empty()) out << " (" << v.detail << ")";
    out << '\n';
  }
  out << "exit_code: " << exit_code << '\n';
  return out.str();
}

RunReport run_pipeline(const RunConfig& config, std::ostream& log) {
  validate(config);
  RunReport report;
  const MetricField metric = make_config_metric(config);
  const GridGeometry& grid = metric.grid;
  const MetricCertificate cert = certify_metric(metric);
  log << "metric " << to_string(config.metric_kind) << ": kahler=" << cert.kahler
      << " gauduchon=" << cert.gauduchon << " astheno=" << cert.astheno << '\n';

  auto gate = [&](bool enabled, bool hypothesis, const std::string& what) {
    if (enabled && !hypothesis) {
      const std::string w = what + " check disabled: metric is not certified Gauduchon" +
                            std::string(grid.n > 1 ? " and astheno-Kahler" : "");
      report.warnings.push_back(w);
      log << "warning: " << w << '\n';
      return false;
    }
    return enabled;
  };
  const bool torsion_on = gate(config.torsion_check, cert.gauduchon, "torsion-cancellation");
  bool energy_on = gate(config.energy_check, cert.gauduchon && cert.astheno, "energy-identity");
  if (energy_on && config.flow.record_every != 1) {
    // The time integral is a trapezoid over records; sparse records measure quadrature error.
    const std::string w = "energy-identity check disabled: needs flow.record_every = 1";
    report.warnings.push_back(w);
    log << "warning: " << w << '\n';
    energy_on = false;
  }
  const bool max_on = gate(config.max_principle_check, cert.gauduchon, "maximum-principle");

  const BundleState bundle = make_config_bundle(config, grid);
  const double lambda = degree_slope_lambda(bundle, metric).lambda;
  report.lambda = lambda;

  std::vector<double> torsion_ratio;
  auto record = [&](double t, const DiagnosticsRecord& r, const TorsionPairing& tp) {
    report.records.push_back(r);
    report.records.back().t = t;
    torsion_ratio.push_back(tp.ratio());
  };

  Trajectory<ConnectionState> conn_traj;
  Trajectory<BundleState> bundle_traj;
  const fs::path out_dir(config.out_dir);
  try {
    report.dt = plan_steps(config.flow, metric).dt;
    if (config.formulation == Formulation::metric) {
      integrate(bundle, config.flow, metric, lambda, bundle_traj,
                [&](int, double t, const BundleState& s) {
                  TorsionPairing tp;
                  const DiagnosticsRecord r = flow_observables(s, metric, lambda, t, &tp);
                  record(t, r, tp);
                });
      conn_traj = as_connections(bundle_traj, grid);
    } else {
      integrate(to_unitary_frame(grid, bundle), config.flow, metric, conn_traj,
                [&](int, double t, const ConnectionState& s) {
                  TorsionPairing tp;
                  const DiagnosticsRecord r = flow_observables(s, metric, lambda, t, &tp);
                  record(t, r, tp);
                });
    }
  } catch (const FlowAborted& e) {
    report.failure = to_string(e.kind()) + " at t=" + fmt(e.time()) + ": " + e.what();
    log << "flow aborted: " << report.failure << '\n';
    if (config.formulation == Formulation::metric && !bundle_traj.states.empty()) {
      conn_traj = as_connections(bundle_traj, grid);
    }
  }

  energy_identity_residual(report.records);
  const bool aborted = !report.failure.empty();

  // Persist what we have before judging it.
  if (config.write_checkpoint) {
    const std::string name = aborted ? "last_good.hymf" : "final.hymf";
    if (config.formulation == Formulation::metric && !bundle_traj.states.empty()) {
      write_checkpoint((out_dir / name).string(),
                       make_checkpoint(metric, bundle_traj.states.back(), bundle_traj.times.back()));
      if (config.flow.checkpoint_every > 0) {
        for (size_t k = 0; k < bundle_traj.states.size(); ++k) {
          write_checkpoint((out_dir / "states" / state_name(k)).string(),
                           make_checkpoint(metric, bundle_traj.states[k], bundle_traj.times[k]));
        }
      }
    } else if (!conn_traj.states.empty()) {
      write_checkpoint((out_dir / name).string(),
                       make_checkpoint(metric, conn_traj.states.back(), conn_traj.times.back()));
      if (config.flow.checkpoint_every > 0) {
        for (size_t k = 0; k < conn_traj.states.size(); ++k) {
          write_checkpoint((out_dir / "states" / state_name(k)).string(),
                           make_checkpoint(metric, conn_traj.states[k], conn_traj.times[k]));
        }
      }
    }
    if (aborted) log << "last good checkpoint: " << (out_dir / name).string() << '\n';
  }
  if (config.write_csv) {
    write_text_file((out_dir / "diagnostics.csv").string(), format_csv(report.records));
  }

  auto verdict = [&](const std::string& name, bool ok, const std::string& detail) {
    report.verdicts.push_back({name, ok, detail});
  };
  if (aborted) verdict("flow_completed", false, report.failure);

  const auto& recs = report.records;
  if (!recs.empty()) {
    if (energy_on) {
      double worst = 0.0;
      for (const auto& r : recs) worst = std::max(worst, r.energy_ident_resid);
      verdict("energy_identity", worst <= 1e-3, "max residual " + fmt(worst));
    }
    if (torsion_on) {
      const double worst = *std::max_element(torsion_ratio.begin(), torsion_ratio.end());
      verdict("torsion_cancellation", worst <= 1e-4, "max ratio " + fmt(worst));
    }
    if (max_on) {
      const double sup0 = recs.front().sup_lambda_f;
      const double l2_scale = std::max(1.0, recs.front().l2_lambda_f);
      bool sup_ok = true, l2_ok = true;
      for (size_t k = 0; k < recs.size(); ++k) {
        if (recs[k].sup_lambda_f > sup0 * (1.0 + 1e-6)) sup_ok = false;
        if (k > 0 && recs[k].l2_lambda_f > recs[k - 1].l2_lambda_f + 1e-8 * l2_scale) l2_ok = false;
      }
      verdict("maximum_principle", sup_ok && l2_ok,
              std::string("sup ") + (sup_ok ? "ok" : "grew") + ", L2 " +
                  (l2_ok ? "ok" : "grew"));
    }
    if (config.he_target > 0.0) {
      const double target = config.he_target * std::max(recs.front().sup_lambda_f, 1e-300);
      verdict("hermitian_einstein", recs.back().he_resid <= target,
              "he_resid " + fmt(recs.back().he_resid) + " target " + fmt(target));
    }
  }

  if (!conn_traj.states.empty()) {
    const ConnectionState& last = conn_traj.states.back();
    report.clusters = eigenvalue_clustering(last, metric);
    if (config.sigma_check && !aborted) {
      const double r = config.sigma_radius > 0.0 ? config.sigma_radius
                                                 : grid.injectivity_radius / 8.0;
      const DensityMap map = density_scan(last, metric, r, config.eps1);
      verdict("sigma_empty", map.marked() == 0,
              std::to_string(map.marked()) + " sites at or above eps1=" + fmt(config.eps1) +
                  ", max density " + fmt(map.values.maxCoeff()));
    }
    if (!config.phi_radii.empty() && !aborted) {
      for (const auto& x0 : config.phi_points) {
        PhiOptions opt;
        opt.x0 = x0;
        opt.t0 = config.phi_t0 > 0.0 ? config.phi_t0 : conn_traj.times.back();
        opt.radii = config.phi_radii;
        opt.R = config.phi_R > 0.0 ? config.phi_R : grid.injectivity_radius;
        opt.C = config.phi_C;
        opt.kernel_exponent = config.kernel_exponent;
        try {
          const PhiResult phi = phi_monotonicity(conn_traj, metric, opt);
          std::string values;
          for (double v : phi.values) values += (values.empty() ? "" : " ") + fmt(v);
          verdict("phi_monotonicity", phi.verdict, "Phi = [" + values + "]");
        } catch (const std::invalid_argument& e) {
          verdict("phi_monotonicity", false, e.what());
        }
      }
    }
  }

  report.exit_code = aborted ? exit_flow_aborted : exit_ok;
  for (const auto& v : report.verdicts)
    if (!v.passed && report.exit_code == exit_ok) report.exit_code = exit_verdict_failed;
  if (config.write_summary) write_text_file((out_dir / "summary.txt").string(), report.summary());
  return report;
}

double CompareReport::worst() const {
  return discrepancy.empty() ? 0.0 : *std::max_element(discrepancy.begin(), discrepancy.end());
}

CompareReport compare_flows(const RunConfig& config) {
  validate(config);
  const MetricField metric = make_config_metric(config);
  const GridGeometry& grid = metric.grid;
  const BundleState bundle = make_config_bundle(config, grid);
  const double lambda = degree_slope_lambda(bundle, metric).lambda;

  FlowConfig flow = config.flow;
  flow.checkpoint_every = flow.record_every;
  Trajectory<BundleState> traj_H;
  Trajectory<ConnectionState> traj_A;
  integrate(bundle, flow, metric, lambda, traj_H);
  integrate(to_unitary_frame(grid, bundle), flow, metric, traj_A);

  std::vector<Index> sites;
  const Index stride = std::max<Index>(1, grid.sites() / 7);
  for (Index s = 0; s < grid.sites(); s += stride) sites.push_back(s);

  CompareReport report;
  report.dt = traj_H.dt;
  report.times = traj_H.times;
  report.discrepancy = trajectory_equivalence(traj_H, traj_A, metric, sites);
  return report;
}

std::string diagnose(const std::string& path, const DiagnoseOptions& options) {
  const Checkpoint cp = read_checkpoint(path);
  const MetricField metric = make_metric(cp.grid, cp.g);
  const GridGeometry& grid = metric.grid;
  const ConnectionState& state = cp.connection;
  const double lambda =
      degree_slope_lambda(curvature(grid, state), state.rank(), metric).lambda;

  std::ostringstream out;
  out << "checkpoint: " << path << '\n';
  out << "n: " << grid.n << "  N: " << grid.N << "  rank: " << state.rank() << "  t: " << fmt(cp.t)
      << '\n';
  out << "formulation: " << (cp.H ? "metric" : "connection") << '\n';
  const DiagnosticsRecord r = flow_observables(state, metric, lambda, cp.t);
  const auto& names = DiagnosticsRecord::field_names();
  const auto values = r.values();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "energy_ident_resid") continue;  // needs the whole history
    out << names[i] << ": " << fmt(values[i]) << '\n';
  }
  out << "lambda: " << fmt(lambda) << '\n';
  const auto clusters = eigenvalue_clustering(state, metric);
  out << "clusters: " << clusters.size() << '\n';
  for (const auto& c : clusters) {
    out << "  value " << fmt(c.value) << " multiplicity " << c.multiplicity << " spread "
        << fmt(c.spread) << '\n';
  }

  if (options.sigma_scan) {
    const Eigen::ArrayXd e = energy_density(state, metric);
    for (double r = grid.injectivity_radius; r >= 1.5 * grid.min_spacing(); r *= 0.5) {
      const DensityMap map = density_scan(e, metric, r, options.eps1);
      out << "sigma r=" << fmt(r) << ": marked " << map.marked() << " max " << fmt(map.values.maxCoeff())
          << '\n';
    }
  }

  if (options.phi) {
    // Stored states live next to the checkpoint or in its states/ directory.
    fs::path dir = fs::path(path).parent_path();
    if (dir.empty()) dir = ".";
    if (fs::is_directory(dir / "states")) dir /= "states";
    std::vector<std::pair<double, ConnectionState>> stored;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".hymf") continue;
      Checkpoint other = read_checkpoint(entry.path().string(), &grid);
      if (other.t <= cp.t + 1e-12) stored.emplace_back(other.t, std::move(other.connection));
    }
    std::sort(stored.begin(), stored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Trajectory<ConnectionState> traj;
    for (auto& [t, s] : stored)
      if (traj.times.empty() || t > traj.times.back() + 1e-12) traj.push(t, s);

    PhiOptions opt;
    opt.x0.assign(grid.real_dim(), 0.0);
    opt.t0 = cp.t;
    opt.R = grid.injectivity_radius;
    const double r_cap = std::min(0.5 * opt.R, 0.5 * std::sqrt(cp.t));
    for (double r = r_cap; r >= r_cap / 8.0 * (1 - 1e-12); r *= 0.5) opt.radii.push_back(r);
    std::reverse(opt.radii.begin(), opt.radii.end());
    try {
      const PhiResult phi = phi_monotonicity(traj, metric, opt);
      for (size_t i = 0; i < phi.radii.size(); ++i) {
        out << "phi r=" << fmt(phi.radii[i]) << ": " << fmt(phi.values[i]) << '\n';
      }
      out << "phi verdict: " << (phi.verdict ? "holds" : "violated") << '\n';
    } catch (const std::invalid_argument& e) {
      out << "phi: unavailable (" << e.what() << ")\n";
    }
  }
  return out.str();
}

}  // namespace hymflow
