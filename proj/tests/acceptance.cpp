// Acceptance suite: one PASS/FAIL line per criterion, desk-scale grids
// (n = 1 at N = 32, n = 2 at N = 16). Arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "hymflow/checkpoint.hpp"
#include "hymflow/config.hpp"
#include "hymflow/pipeline.hpp"

using namespace hymflow;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("criterion %2d  %-30s %s  %s\n", id, title, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void note(const std::string& text) {
  std::printf("              %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "hymflow_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig config(const std::string& text, const std::string& name) {
  RunConfig c = parse_config(text);
  c.out_dir = scratch(name).string();
  return c;
}

RunReport run(const RunConfig& c) {
  std::ostringstream log;
  return run_pipeline(c, log);
}

const Verdict* find(const RunReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return &v;
  return nullptr;
}

bool verdict_ok(const RunReport& r, const std::string& name) {
  const Verdict* v = find(r, name);
  return v && v->passed;
}

double max_energy_residual(const RunReport& r) {
  double worst = 0.0;
  for (const auto& rec : r.records) worst = std::max(worst, rec.energy_ident_resid);
  return worst;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* reference =
    "geometry.n = 1\ngeometry.N = 32\n"
    "bundle.kind = conformal_line\nbundle.amplitude = 0.1\nbundle.mode = 1\n"
    "flow.cfl = 0.5\nflow.t_end = 0.5\nflow.record_every = 1\nflow.checkpoint_every = 4\n"
    "diagnostics.he_target = 1e-6\n"
    "diagnostics.phi_radii = 0.2, 0.1, 0.05, 0.025\n"
    "diagnostics.phi_points = 0, 0; 0.25, 0.5\n";

// 1. Single conformal mode against the exact decay rate (2 pi m)^2.
void heat_oracle() {
  const GridGeometry g = build_torus_geometry(1, 32);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  double worst = 0.0;
  std::string detail;
  for (int mode : {1, 2}) {
    BundleSpec s;
    s.kind = BundleKind::conformal_line;
    s.amplitude = 1e-2;
    s.mode = mode;
    FlowConfig c;
    c.t_end = 0.02;
    c.cfl = 0.4;
    Trajectory<BundleState> traj;
    integrate(make_test_bundle(g, s), c, m, 0.0, traj);
    auto norm = [&](const BundleState& b) {
      const Eigen::ArrayXd phi = log_hermitian(b.H).entry(0, 0).real();
      return std::sqrt(integrate(Eigen::ArrayXd(phi.square()), m));
    };
    const double rate = -std::log(norm(traj.states.back()) / norm(traj.states.front())) / c.t_end;
    const double exact = 4.0 * pi * pi * mode * mode;
    worst = std::max(worst, std::abs(rate / exact - 1.0));
    detail += "m=" + std::to_string(mode) + " rate " + fmt(rate) + " exact " + fmt(exact) + "; ";
  }
  report(1, "heat-equation oracle", worst <= 1e-2, detail + "max rel err " + fmt(worst));
}

// 2. Energy identity on the reference run, and its decrease under refinement.
void energy_identity(const RunReport& ref) {
  const double base = max_energy_residual(ref);
  const bool ok = verdict_ok(ref, "energy_identity") && base <= 1e-3;
  // Refinement pair at a fixed explicit dt: (N, dt) -> (2N, dt/2).
  double resid[2];
  for (int k = 0; k < 2; ++k) {
    RunConfig c = config(
        "geometry.n = 1\nbundle.kind = conformal_line\nbundle.amplitude = 0.1\nbundle.mode = 1\n"
        "bundle.perturbation = 0.05\nbundle.perturbation_mode = 3\n"
        "flow.t_end = 0.05\nflow.record_every = 1\n",
        "energy" + std::to_string(k));
    c.N = k == 0 ? 32 : 64;
    c.flow.dt = k == 0 ? 6.4e-5 : 3.2e-5;
    c.write_checkpoint = false;
    resid[k] = max_energy_residual(run(c));
  }
  const double gain = resid[0] / resid[1];
  report(2, "energy identity", ok && gain >= 3.0,
         "reference max residual " + fmt(base) + "; refinement " + fmt(resid[0]) + " -> " +
             fmt(resid[1]) + " (x" + fmt(gain) + ")");
}

// 3. Torsion pairing: cancels on the certified Gauduchon metric, not on the bump.
void torsion() {
  const RunReport r = run(config(
      "geometry.n = 2\ngeometry.N = 16\nmetric.kind = gauduchon_nonkahler\nmetric.amplitude = 0.3\n"
      "bundle.kind = extension\nbundle.amplitude = 0.3\nflow.cfl = 0.3\nflow.t_end = 0.005\n"
      "flow.record_every = 4\n",
      "torsion"));
  const Verdict* v = find(r, "torsion_cancellation");

  const GridGeometry g = build_torus_geometry(2, 16);
  BundleSpec s;
  s.kind = BundleKind::extension;
  s.amplitude = 0.3;
  const ConnectionState c = unitary_connection(g, make_test_bundle(g, s));
  const double bump = torsion_pairing(c, make_test_metric(g, MetricKind::nongauduchon_bump, 0.3)).ratio();
  const double gaud = torsion_pairing(c, make_test_metric(g, MetricKind::gauduchon_nonkahler, 0.3)).ratio();
  report(3, "torsion-pairing cancellation", v && v->passed && gaud <= 1e-4 && bump > 1e-2,
         "gauduchon run " + (v ? v->detail : std::string("unchecked")) + ", initial " + fmt(gaud) +
             "; bump ratio " + fmt(bump));
}

// 4. Both forms of the connection-flow velocity agree.
void cross_check() {
  double worst = 0.0;
  std::string where;
  for (int n : {1, 2}) {
    const GridGeometry g = build_torus_geometry(n, n == 1 ? 32 : 16);
    std::vector<BundleSpec> bundles(5);
    bundles[0].kind = BundleKind::trivial_line;
    bundles[1].kind = BundleKind::conformal_line;
    bundles[1].amplitude = 0.3;
    bundles[2].kind = BundleKind::flux_line;
    bundles[2].flux = {1, 0};
    BundleSpec minus = bundles[2];
    minus.flux = {-1, 0};
    bundles[3].kind = BundleKind::direct_sum;
    bundles[3].parts = {bundles[2], minus};
    bundles[4].kind = BundleKind::extension;
    bundles[4].amplitude = 0.3;
    for (MetricKind kind : {MetricKind::kahler_flat, MetricKind::kahler_warped,
                            MetricKind::gauduchon_nonkahler, MetricKind::nongauduchon_bump}) {
      if (n == 1 && kind == MetricKind::gauduchon_nonkahler) continue;
      const MetricField m = make_test_metric(g, kind, kind == MetricKind::kahler_flat ? 0.0 : 0.3);
      for (const BundleSpec& b : bundles) {
        const double r = rhs_cross_check(unitary_connection(g, make_test_bundle(g, b)), m);
        if (r > worst) {
          worst = r;
          where = "n=" + std::to_string(n) + " " + to_string(kind) + " " + to_string(b.kind);
        }
      }
    }
  }
  report(4, "velocity cross-check", worst <= 1e-5, "max residual " + fmt(worst) + " (" + where + ")");
}

// 5. Maximum principle and decay of I on the reference run.
void maximum_principle(const RunReport& ref) {
  const auto& recs = ref.records;
  const double ratio = recs.back().i_func / recs.front().i_func;
  report(5, "maximum principle", verdict_ok(ref, "maximum_principle") && ratio <= 1e-6,
         (find(ref, "maximum_principle") ? find(ref, "maximum_principle")->detail : "unchecked") +
             "; I(final)/I(0) " + fmt(ratio));
}

// 6. Perturbed flux line converges to the constant 2 pi k / Vol.
RunReport hermitian_einstein(bool judge) {
  RunReport r = run(config(
      "geometry.n = 1\ngeometry.N = 32\nbundle.kind = flux_line\nbundle.flux = 1\n"
      "bundle.perturbation = 0.1\nbundle.perturbation_mode = 2\n"
      "flow.cfl = 0.5\nflow.t_end = 0.5\nflow.record_every = 8\ndiagnostics.he_target = 1e-6\n",
      "flux_line"));
  const double level = r.clusters.size() == 1 ? r.clusters[0].value : NAN;
  const double err = std::abs(level - 2.0 * pi) + r.clusters[0].spread;
  const bool ok = verdict_ok(r, "hermitian_einstein") && std::abs(r.lambda - 2.0 * pi) <= 1e-6 && err <= 1e-6;
  if (judge)
    report(6, "Hermitian-Einstein convergence", ok,
         find(r, "hermitian_einstein")->detail + "; lambda " + fmt(r.lambda) + ", |i Lambda F - 2 pi| " +
             fmt(err));
  return r;
}

// 7. Split bundle gives two eigenvalue clusters, the extension one.
std::vector<RunReport> splitting(bool judge) {
  std::vector<RunReport> runs;
  runs.push_back(run(config(
      "geometry.n = 1\ngeometry.N = 32\nbundle.kind = direct_sum\nbundle.summands = 1; -1\n"
      "bundle.perturbation = 0.1\nbundle.perturbation_mode = 2\n"
      "flow.cfl = 0.5\nflow.t_end = 0.5\nflow.record_every = 8\n",
      "direct_sum")));
  runs.push_back(run(config(
      "geometry.n = 1\ngeometry.N = 32\nbundle.kind = extension\nbundle.amplitude = 0.3\n"
      "flow.cfl = 0.5\nflow.t_end = 0.5\nflow.record_every = 8\n",
      "extension")));
  const auto& split = runs[0].clusters;
  bool ok = split.size() == 2;
  std::string detail = "direct sum:";
  for (const auto& c : split) detail += " " + fmt(c.value) + "(spread " + fmt(c.spread) + ")";
  if (ok) {
    ok = std::abs(split[0].value - 2.0 * pi) <= 1e-4 && std::abs(split[1].value + 2.0 * pi) <= 1e-4 &&
         split[0].spread <= 1e-5 && split[1].spread <= 1e-5;
  }
  detail += "; extension: " + std::to_string(runs[1].clusters.size()) + " cluster(s)";
  ok = ok && runs[1].clusters.size() == 1;
  if (judge) report(7, "splitting detector", ok, detail);
  return runs;
}

// 8. Metric and connection flows agree through the gauge link, to first order in dt.
void gauge_equivalence() {
  const char* text =
      "geometry.n = 1\ngeometry.N = 32\nmetric.kind = kahler_warped\nmetric.amplitude = 0.2\n"
      "bundle.kind = conformal_line\nbundle.amplitude = 0.1\nbundle.mode = 1\n"
      "flow.t_end = 0.02\nflow.record_every = 10\n";
  RunConfig c = config(text, "compare");
  c.flow.cfl = 0.5;
  const CompareReport rk4 = compare_flows(c);
  c.flow.scheme = Scheme::euler;
  c.flow.cfl = 0.2;
  const CompareReport coarse = compare_flows(c);
  c.flow.cfl = 0.1;
  c.flow.record_every = 20;
  const CompareReport fine = compare_flows(c);
  const double ratio = coarse.worst() / fine.worst();
  report(8, "gauge equivalence", rk4.passed() && coarse.passed() && fine.passed() && ratio >= 1.8,
         "rk4 " + fmt(rk4.worst()) + " (5dt " + fmt(5 * rk4.dt) + "); euler " + fmt(coarse.worst()) +
             " -> " + fmt(fine.worst()) + " under dt/2 (x" + fmt(ratio) + ")");
}

PhiResult constant_curvature_phi(int n, int exponent) {
  const GridGeometry g = build_torus_geometry(n, n == 1 ? 32 : 16);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  BundleSpec s;
  s.kind = BundleKind::flux_line;
  s.flux = {1, 0};
  FlowConfig fc;
  fc.t_end = 0.04;
  fc.cfl = 0.5;
  fc.checkpoint_every = 1;
  Trajectory<ConnectionState> traj;
  integrate(unitary_connection(g, make_test_bundle(g, s)), fc, m, traj);
  PhiOptions opt;
  opt.x0.assign(2 * n, 0.5);
  opt.t0 = fc.t_end;
  opt.R = g.injectivity_radius;
  opt.radii = {0.05, 0.025, 0.0125};
  opt.kernel_exponent = exponent;
  return phi_monotonicity(traj, m, opt);
}

// 9. Phi verdict on the stored smooth runs; near scale invariance at constant curvature.
void monotonicity(const RunReport& ref) {
  bool verdicts = true;
  int count = 0;
  for (const auto& v : ref.verdicts)
    if (v.name == "phi_monotonicity") {
      verdicts = verdicts && v.passed;
      ++count;
    }
  const PhiResult flat = constant_curvature_phi(1, 0);
  verdicts = verdicts && count > 0 && flat.verdict;
  const double variation = flat.variation();
  std::string values;
  for (double v : flat.values) values += " " + fmt(v);
  report(9, "monotonicity formula", verdicts && variation < 0.2,
         "verdicts " + std::string(verdicts ? "hold" : "violated") + " (" + std::to_string(count + 1) +
             " base points); constant-curvature Phi" + values + ", variation " + fmt(variation));
  // The kernel exponent n + 2 is the one that makes Phi scale invariant for constant energy density.
  for (int n : {1, 2}) {
    const PhiResult alt = constant_curvature_phi(n, n + 2);
    note("informational: n=" + std::to_string(n) + " kernel exponent " + std::to_string(n + 2) +
         " variation " + fmt(alt.variation()) + ", verdict " + (alt.verdict ? "holds" : "violated"));
  }
}

// 10. Sigma detector: empty on converged runs, localized on a synthetic bump.
void sigma(const std::vector<const RunReport*>& converged) {
  bool empty = true;
  for (const RunReport* r : converged) empty = empty && verdict_ok(*r, "sigma_empty");
  const GridGeometry g = build_torus_geometry(2, 16);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  Eigen::ArrayXd e = Eigen::ArrayXd::Constant(g.sites(), 1e-3);
  const Index bump = g.site_index({5, 9, 3, 12});
  e(bump) = 1e4;
  const DensityMap map = density_scan(e, m, 1.5 * g.min_spacing(), 1e-2);
  const auto b = g.site_coords(bump);
  bool local = map.marked() > 0 && map.mask(bump);
  for (Index s = 0; s < g.sites(); ++s) {
    if (!map.mask(s)) continue;
    const auto x = g.site_coords(s);
    for (int a = 0; a < g.real_dim(); ++a) {
      const int d = std::abs(x[a] - b[a]);
      local = local && std::min(d, g.N - d) <= 2;
    }
  }
  report(10, "singular-set detector", empty && local,
         std::to_string(converged.size()) + " converged runs " + (empty ? "empty" : "NOT empty") +
             "; bump marks " + std::to_string(map.marked()) + " sites, " +
             (local ? "all within 2 cells" : "outside 2 cells"));
}

// 11. Checkpoint round trip, CSV determinism, RK4 self-convergence.
void infrastructure(const fs::path& ref_dir, const RunReport&) {
  const fs::path final_path = ref_dir / "final.hymf";
  const Checkpoint cp = read_checkpoint(final_path.string());
  const fs::path again = scratch("roundtrip") / "again.hymf";
  write_checkpoint(again.string(), cp);
  const bool roundtrip = slurp(final_path) == slurp(again);

  RunConfig c = config(reference, "reference_again");
  c.flow.t_end = 0.05;
  c.phi_radii.clear();
  c.phi_points.clear();
  run(c);
  const std::string first = slurp(fs::path(c.out_dir) / "diagnostics.csv");
  c.out_dir = scratch("reference_again2").string();
  run(c);
  const bool deterministic = !first.empty() && first == slurp(fs::path(c.out_dir) / "diagnostics.csv");

  // Self-convergence of the metric flow at a fixed final time.
  const GridGeometry g = build_torus_geometry(1, 16);
  const MetricField m = make_test_metric(g, MetricKind::kahler_warped, 0.2);
  BundleSpec s;
  s.kind = BundleKind::extension;
  s.amplitude = 0.5;
  const BundleState b0 = make_test_bundle(g, s);
  const double lambda = degree_slope_lambda(b0, m).lambda;
  const double dt0 = 0.5 * cfl_timestep(m, 1.0);
  std::vector<MatrixField> finals;
  for (int k = 0; k < 3; ++k) {
    FlowConfig fc;
    fc.dt = dt0 / (1 << k);
    fc.t_end = 64 * dt0;
    Trajectory<BundleState> traj;
    integrate(b0, fc, m, lambda, traj);
    finals.push_back(traj.states.back().H);
  }
  const double e1 = (finals[0].raw() - finals[1].raw()).abs().maxCoeff();
  const double e2 = (finals[1].raw() - finals[2].raw()).abs().maxCoeff();
  const double order = std::log2(e1 / e2);
  report(11, "infrastructure", roundtrip && deterministic && order >= 3.5,
         std::string("roundtrip ") + (roundtrip ? "bit-exact" : "DIFFERS") + "; CSV " +
             (deterministic ? "identical" : "DIFFERS") + "; RK4 order " + fmt(order) + " (" + fmt(e1) +
             ", " + fmt(e2) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number; default runs all of them.
  std::vector<bool> want(12, argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k >= 1 && k <= 11) want[k] = true;
  }
  const auto start = std::chrono::steady_clock::now();

  RunConfig ref_config = config(reference, "reference");
  std::optional<RunReport> ref_run;
  auto ref = [&]() -> const RunReport& {
    if (!ref_run) {
      ref_run = run(ref_config);
      if (ref_run->exit_code != exit_ok) note("reference run exit code " + std::to_string(ref_run->exit_code));
    }
    return *ref_run;
  };
  std::optional<RunReport> flux;
  std::vector<RunReport> split;

  if (want[1]) heat_oracle();
  if (want[2]) energy_identity(ref());
  if (want[3]) torsion();
  if (want[4]) cross_check();
  if (want[5]) maximum_principle(ref());
  if (want[6] || want[10]) flux = hermitian_einstein(want[6]);
  if (want[7] || want[10]) split = splitting(want[7]);
  if (want[8]) gauge_equivalence();
  if (want[9]) monotonicity(ref());
  if (want[10]) sigma({&ref(), &*flux, &split[0], &split[1]});
  if (want[11]) infrastructure(ref_config.out_dir, ref());

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed (%.0f s)\n", failures, seconds);
  return failures == 0 ? 0 : 1;
}
