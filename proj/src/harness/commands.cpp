#include "mfga/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>
#include <sstream>

#include "mfga/certify.hpp"
#include "mfga/errors.hpp"
#include "mfga/monotonicity.hpp"
#include "mfga/seeds.hpp"
#include "mfga/solver.hpp"

namespace mfga::harness {

namespace {

std::string num(double v) { return fmt17(v); }

SolverOptions solver_options(const ExperimentConfig &e, PicardInit init) {
  SolverOptions o;
  o.t_steps = e.t_steps;
  o.grid.dx = e.dx;
  o.grid.lo = e.x_lo;
  o.grid.hi = e.x_hi;
  o.tol = e.tol;
  o.max_picard = e.max_picard;
  o.relaxation = e.relaxation;
  o.init = init;
  return o;
}

std::vector<double> make_eta(const ExperimentConfig &e, const EmpiricalMeasure &mu) {
  const std::size_t n = mu.size();
  std::vector<double> eta(n, 1.0);
  if (e.eta_kind == "linear") {
    const double m = mu.mean();
    for (std::size_t i = 0; i < n; ++i)
      eta[i] = mu.points()[i] - m;
  } else if (e.eta_kind == "normal") {
    std::mt19937_64 rng(derive_seed(e.seed, "eta"));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double &v : eta)
      v = normal(rng);
  }
  double e2 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    e2 += mu.weights()[i] * eta[i] * eta[i];
  if (e2 > 0.0)
    for (double &v : eta)
      v /= std::sqrt(e2);
  return eta;
}

bool quadratic(const ModelSpec &m) {
  return m.h0_family == Family::Quadratic && m.g_family == Family::Quadratic && m.dim == 1 && m.beta == 0.0;
}

void solution_checks(RunReport &r, const ModelSpec &model, const MfgSolution &sol, const std::string &prefix) {
  double mass_err = 0.0;
  for (std::size_t k = 0; k < sol.levels(); ++k)
    mass_err = std::max(mass_err, std::abs(sol.total_mass(k) - 1.0));
  r.check(prefix + "mass_conservation", mass_err <= 1e-8, mass_err, 1e-8, "<=");
  const BoundG G(model, sol.mass.back(), sol.grid);
  double term = 0.0;
  for (std::size_t i = 0; i < sol.grid.n; ++i)
    term = std::max(term, std::abs(sol.u.back()[i] - G.g(sol.grid.x(i))));
  r.check(prefix + "terminal_consistency", term == 0.0, term, 0.0, "==");
  bool decreasing = true;
  for (std::size_t k = 1; k < sol.picard_residuals.size(); ++k)
    decreasing = decreasing && sol.picard_residuals[k] < sol.picard_residuals[k - 1];
  r.check(prefix + "picard_strictly_decreasing", decreasing, static_cast<double>(sol.picard_residuals.size()), 0.0,
          "iterations");
}

double sup_w1(const MfgSolution &a, const MfgSolution &b) {
  double w = 0.0;
  for (std::size_t k = 0; k < a.levels(); ++k)
    w = std::max(w, wq_distance(a.measure(k), b.measure(k), 1));
  return w;
}

void run_certify(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const ConstantLedger l = certify_wellposedness(rm.model, rm.lam, cfg.experiment.seed);
  r.ledger(l);
  r.metrics()["lambda"] = {rm.lam.l0, rm.lam.l1, rm.lam.l2, rm.lam.l3};
  if (std::isfinite(rm.m0))
    r.metrics()["m0"] = rm.m0;
}

void run_construct(RunReport &r, const RunConfig &cfg) {
  const auto &x = cfg.ex72;
  Example72Options opt;
  opt.m0_start = x.m0_start;
  opt.max_doublings = x.max_doublings;
  opt.horizon = cfg.model.horizon;
  const auto res = construct_example72(x.alpha_lo, x.alpha_hi, x.gamma_lo, x.gamma_hi, cfg.lambda[1], cfg.lambda[2],
                                       cfg.lambda[3], x.l2_g, x.l2_h0, opt);
  r.ledger(res.ledger);
  const double lvxx = Theta3Lxx(x.l2_h0, 1.0, x.alpha_hi * res.m0).lvxx();
  const double formula =
      (x.gamma_hi * x.gamma_hi * (1.0 + lvxx) * (1.0 + lvxx) - 8.0 * cfg.lambda[3]) / (4.0 * x.gamma_lo) + 1.0;
  r.metrics()["m0"] = res.m0;
  r.metrics()["lambda0"] = res.lambda0;
  r.metrics()["lvxx"] = lvxx;
  r.check("example72.lambda0_formula", std::abs(res.lambda0 - formula) <= 1e-12, std::abs(res.lambda0 - formula),
          1e-12, "<=");
  const auto doubled = example72_at(2.0 * res.m0, x.alpha_lo, x.alpha_hi, x.gamma_lo, x.gamma_hi, cfg.lambda[1],
                                    cfg.lambda[2], cfg.lambda[3], x.l2_g, x.l2_h0, cfg.model.horizon);
  r.metrics()["doubled_failing"] = doubled.ledger.failing();
  r.check("example72.doubled_m0_passes", doubled.ledger.passed(), 2.0 * res.m0, 0.0, "ledger passes");
}

void run_solve(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const auto &e = cfg.experiment;
  const EmpiricalMeasure mu0 = initial_measure(e);
  const PicardInit first = e.init == "terminal" ? PicardInit::Terminal : PicardInit::Zero;
  const MfgSolution sol = solve_mfg(rm.model, mu0, solver_options(e, first));
  solution_checks(r, rm.model, sol, "solve.");
  r.metrics()["picard_residuals"] = sol.picard_residuals;
  r.metrics()["grid"] = {{"lo", sol.grid.lo}, {"hi", sol.grid.hi()}, {"dx", sol.grid.dx}, {"n", sol.grid.n}};
  r.metrics()["mean_T"] = sol.mean(sol.levels() - 1);
  if (e.init == "both") {
    const MfgSolution other = solve_mfg(rm.model, mu0, solver_options(e, PicardInit::Terminal));
    const double w = sup_w1(sol, other);
    r.metrics()["uniqueness_sup_w1"] = w;
    r.check("solve.uniqueness_sup_w1", w <= 1e-4, w, 1e-4, "<=");
  }
  std::vector<double> xi(mu0.points());
  const FbsdeResult fb = simulate_fbsde(rm.model, sol, xi, e.fbsde_steps, derive_seed(e.seed, "solve-fbsde"));
  r.metrics()["fbsde_y_check"] = fb.y_check;
  if (cfg.output.write_csv) {
    std::ostringstream ss;
    write_solution_csv(ss, sol, static_cast<std::size_t>(cfg.output.t_stride),
                       static_cast<std::size_t>(cfg.output.x_stride));
    r.attach("solution.csv", ss.str());
  }
}

void run_antimono(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const auto &e = cfg.experiment;
  McOptions mo;
  mo.test = MonotonicityTest::Anti;
  mo.radius = e.mc_radius;
  mo.jobs = e.jobs;
  auto &t = r.table("antimono.csv", {"t", "value", "std_error", "verdict"});
  {
    const auto est = mc_certify(terminal_field(rm.model), rm.lam, derive_seed(e.seed, "antimono-terminal"),
                                e.mc_trials, e.mc_atoms, mo);
    r.check("antimono.terminal", est.verdict == Verdict::Holds, est.value, 3.0 * est.std_error, "<= 3 sigma");
  }
  SolvedFieldOptions so;
  so.dx = e.field_dx;
  so.dt = e.field_dt;
  so.eps = e.fd_eps;
  so.tol = std::min(e.tol, 1e-10);
  so.max_picard = std::max(e.max_picard, 200);
  for (std::size_t i = 0; i < e.mc_times.size(); ++i) {
    const double time = e.mc_times[i];
    const auto est = mc_certify(solved_field(rm.model, time, so), rm.lam,
                                derive_seed(e.seed, static_cast<std::uint64_t>(i)), e.mc_trials, e.mc_atoms, mo);
    t.rows.push_back({num(time), num(est.value), num(est.std_error), verdict_name(est.verdict)});
    r.check("antimono.t=" + num(time), est.verdict == Verdict::Holds, est.value, 3.0 * est.std_error,
            "<= 3 sigma");
  }
}

void run_gamma(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const auto &e = cfg.experiment;
  const EmpiricalMeasure mu0 = initial_measure(e);
  const std::vector<double> eta = make_eta(e, mu0);
  const MfgSolution sol = solve_mfg(rm.model, mu0, solver_options(e, PicardInit::Zero));
  FlowOptions fo;
  fo.paths_per_atom = e.paths_per_atom;
  fo.eps = e.fd_eps;
  fo.tol = std::min(e.tol, 1e-10);
  fo.max_picard = std::max(e.max_picard, 200);
  const FlowTrace tr = simulate_linearized_flow(rm.model, sol, rm.lam, mu0, eta, e.flow_steps,
                                                derive_seed(e.seed, "gamma-flow"), fo);
  const double dt = tr.t_grid.size() > 1 ? tr.t_grid[1] - tr.t_grid[0] : 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < tr.t_grid.size(); ++k)
    worst = std::min(worst, tr.gamma_series[k + 1] - tr.gamma_series[k] + 3.0 * tr.increment_se[k] + e.gamma_c * dt);
  if (!std::isfinite(worst))
    worst = 0.0;
  r.check("gamma.nondecreasing", worst >= 0.0, worst, 0.0, "min(dGamma + 3se + C dt) >= 0");
  r.check("gamma.terminal_nonpositive", tr.gamma_series.back() <= 0.0, tr.gamma_series.back(), 0.0, "<=");
  double cons = 0.0;
  for (std::size_t k = 0; k < tr.t_grid.size(); ++k)
    cons = std::max(cons, std::abs(tr.gamma_series[k] - tr.gamma_from_components(k)));
  r.check("gamma.component_consistency", cons <= 1e-12, cons, 1e-12, "<=");
  r.metrics()["gamma_0"] = tr.gamma_series.front();
  r.metrics()["gamma_T"] = tr.gamma_series.back();
  std::ostringstream ss;
  write_flow_csv(ss, tr);
  r.attach("gamma_trace.csv", ss.str());
}

void run_lipschitz(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const auto &e = cfg.experiment;
  const EmpiricalMeasure mu0 = initial_measure(e);
  LipschitzOptions lo;
  lo.dx = e.dx;
  lo.dt = rm.model.horizon / e.t_steps;
  lo.tol = e.tol;
  lo.max_picard = std::max(e.max_picard, 200);
  lo.random_directions = e.lipschitz_directions;
  lo.seed = e.seed;
  const auto est = estimate_xmu_lipschitz(rm.model, mu0, e.x_probes, e.bump_scales,
                                          e.lipschitz_mode == "W1" ? WassersteinMode::W1 : WassersteinMode::W2, lo);
  auto &t = r.table("lipschitz.csv", {"scale", "direction", "wq", "ratio"});
  for (const auto &row : est.per_bump)
    t.rows.push_back({num(row.scale), row.direction, num(row.wq), num(row.ratio)});
  const double hi = *std::max_element(est.per_scale_max.begin(), est.per_scale_max.end());
  const double lo_v = *std::min_element(est.per_scale_max.begin(), est.per_scale_max.end());
  const double variation = hi > 0.0 ? (hi - lo_v) / hi : 0.0;
  r.metrics()["lipschitz_estimate"] = est.lipschitz_estimate;
  r.metrics()["per_scale_max"] = est.per_scale_max;
  r.check("lipschitz.scale_variation", variation < 0.2, variation, 0.2, "<");
  if (quadratic(rm.model) && e.lipschitz_mode == "W2") {
    const double q0 = std::abs(riccati_oracle(rm.model).q_curve(0.0));
    r.metrics()["riccati_abs_q0"] = q0;
    const double rel = q0 > 0.0 ? std::abs(est.lipschitz_estimate - q0) / q0 : est.lipschitz_estimate;
    r.check("lipschitz.riccati_q0", q0 > 0.0 ? rel <= 0.05 : est.lipschitz_estimate <= 1e-6, rel, 0.05, "<=");
  }
}

void run_hessian(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const auto &e = cfg.experiment;
  const MfgSolution sol = solve_mfg(rm.model, initial_measure(e), solver_options(e, PicardInit::Zero));
  const ConstantLedger l = certify_wellposedness(rm.model, rm.lam, e.seed);
  const HessianCheck hc = hessian_bound_check(sol, l);
  r.metrics()["sup_uxx"] = hc.sup_uxx;
  r.metrics()["lxx_u_theta3"] = hc.bound;
  r.check("hessian.bound", hc.pass, hc.sup_uxx, hc.bound * 1.05, "<=");
  if (quadratic(rm.model)) {
    const RiccatiSolution ric = riccati_oracle(rm.model);
    double pmax = 0.0;
    for (double p : ric.p_nodes())
      pmax = std::max(pmax, std::abs(p));
    const double rel = pmax > 0.0 ? std::abs(hc.sup_uxx - pmax) / pmax : hc.sup_uxx;
    r.metrics()["riccati_max_abs_p"] = pmax;
    r.check("hessian.riccati_max_p", rel <= 0.02, rel, 0.02, "<=");
  }
}

double oracle_error(const MfgSolution &sol, const RiccatiSolution &ric, double m0) {
  const std::vector<double> mf = ric.mean_flow(m0);
  double err = 0.0;
  for (std::size_t k = 0; k < sol.levels(); ++k) {
    const double t = sol.t_grid[k];
    const double P = ric.p_curve(t), Q = ric.q_curve(t);
    const double s = (t - ric.t0()) / ric.dt();
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(s), mf.size() - 2);
    const double r = s - static_cast<double>(j);
    const double m = (1.0 - r) * mf[j] + r * mf[j + 1];
    for (std::size_t i = 0; i < sol.grid.n; ++i)
      err = std::max(err, std::abs(sol.ux[k][i] - (P * sol.grid.x(i) + Q * m)));
  }
  return err;
}

void run_lq(RunReport &r, const RunConfig &cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  if (!quadratic(rm.model))
    throw ConfigError("lq-validate needs a one-dimensional Quadratic model with beta = 0");
  const auto &e = cfg.experiment;
  const EmpiricalMeasure mu0 = initial_measure(e);
  const RiccatiSolution ric = riccati_oracle(rm.model);
  auto &t = r.table("lq_validation.csv", {"level", "dt", "dx", "max_error"});
  std::vector<double> errs;
  for (int level = 0; level < 2; ++level) {
    ExperimentConfig ee = e;
    ee.t_steps = e.t_steps << level;
    ee.dx = e.dx / (1 << level);
    const MfgSolution sol = solve_mfg(rm.model, mu0, solver_options(ee, PicardInit::Zero));
    errs.push_back(oracle_error(sol, ric, mu0.mean()));
    t.rows.push_back({std::to_string(level), num(rm.model.horizon / ee.t_steps), num(ee.dx), num(errs.back())});
  }
  r.check("lq.coarse_error", errs[0] <= 5e-3, errs[0], 5e-3, "<=");
  r.check("lq.refinement_ratio", errs[1] <= 0.6 * errs[0], errs[1] / errs[0], 0.6, "<=");
  double res = 0.0;
  for (int k = 1; k < 10; ++k)
    for (double x = -2.0; x <= 2.0; x += 0.5)
      res = std::max(res, std::abs(master_residual(ric, rm.model, rm.model.horizon * k / 10.0, x, mu0)));
  r.check("lq.oracle_master_residual", res < 1e-6, res, 1e-6, "<");
  r.metrics()["riccati_p0"] = ric.p_curve(0.0);
  r.metrics()["riccati_q0"] = ric.q_curve(0.0);
}

void run_sweep(RunReport &r, const RunConfig &cfg) {
  const auto &e = cfg.experiment;
  if (e.sweep_key.empty())
    throw ConfigError("sweep needs 'sweep_key' and 'sweep_values' in [experiment]");
  auto &t = r.table("sweep.csv", {"value", "passed", "theta1", "theta3", "lxx_u_theta3", "failing"});
  for (double v : e.sweep_values) {
    RunConfig c = cfg;
    set_parameter(c, e.sweep_key, v);
    ConstantLedger l;
    try {
      const ResolvedModel rm = resolve_model(c);
      l = certify_wellposedness(rm.model, rm.lam, e.seed);
    } catch (const ConstructionFailed &f) {
      l = f.ledger;
    } catch (const InvalidArgument &err) {
      t.rows.push_back({num(v), "false", "", "", "", std::string("invalid: ") + err.what()});
      continue;
    }
    std::string failing;
    for (const auto &name : l.failing())
      failing += (failing.empty() ? "" : ";") + name;
    t.rows.push_back({num(v), l.passed() ? "true" : "false", num(l.theta1), num(l.theta3), num(l.lxx_u_theta3),
                      failing});
  }
}

} // namespace

const std::vector<std::string> &subcommands() {
  static const std::vector<std::string> s{"certify",   "construct-example", "solve",       "check-antimono", "gamma-flow",
                                          "lipschitz", "hessian",           "lq-validate", "sweep"};
  return s;
}

std::string output_dir(const Invocation &inv, const RunConfig &cfg) {
  if (inv.out)
    return *inv.out;
  if (!cfg.output.dir.empty())
    return cfg.output.dir;
  if (const char *env = std::getenv("MFG_ANTIMONO_OUT"); env && *env)
    return env;
  return "mfga-out";
}

RunReport run_pipeline(const std::string &command, const RunConfig &cfg) {
  RunReport r(command, cfg);
  if (command == "certify")
    run_certify(r, cfg);
  else if (command == "construct-example")
    run_construct(r, cfg);
  else if (command == "solve")
    run_solve(r, cfg);
  else if (command == "check-antimono")
    run_antimono(r, cfg);
  else if (command == "gamma-flow")
    run_gamma(r, cfg);
  else if (command == "lipschitz")
    run_lipschitz(r, cfg);
  else if (command == "hessian")
    run_hessian(r, cfg);
  else if (command == "lq-validate")
    run_lq(r, cfg);
  else if (command == "sweep")
    run_sweep(r, cfg);
  else
    throw ConfigError("unknown subcommand '" + command + "'");
  return r;
}

int dispatch(const Invocation &inv, std::ostream &out, std::ostream &err) {
  RunConfig cfg;
  try {
    cfg = inv.config_path ? load_config(*inv.config_path) : parse_config("");
    if (inv.seed)
      cfg.experiment.seed = *inv.seed;
    if (inv.jobs)
      cfg.experiment.jobs = std::max(1, *inv.jobs);
    for (auto &[section, keys] : cfg.echo)
      if (section == "experiment") {
        keys["seed"] = std::to_string(cfg.experiment.seed);
        keys["jobs"] = std::to_string(cfg.experiment.jobs);
      }
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string dir = output_dir(inv, cfg);
  const auto start = std::chrono::steady_clock::now();
  try {
    RunReport r = run_pipeline(inv.command, cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(r, dir, wall);
    for (const auto &c : r.checks())
      out << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << num(c.value) << " threshold=" << num(c.threshold)
          << " (" << c.relation << ")\n";
    out << "report: " << dir << "/report.json\n";
    if (!r.passed()) {
      err << "failing checks:";
      for (const auto &n : r.failing())
        err << ' ' << n;
      err << '\n';
      return kChecksFailed;
    }
    return kOk;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument &e) {
    err << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConstructionFailed &e) {
    RunReport r(inv.command, cfg);
    r.ledger(e.ledger);
    write_report(r, dir, -1.0);
    err << "construction failed; failing checks:";
    for (const auto &n : e.ledger.failing())
      err << ' ' << n;
    err << '\n';
    return kChecksFailed;
  } catch (const Error &e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
}

} // namespace mfga::harness
