#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "nullctrl/config.hpp"
#include "nullctrl/errors.hpp"
#include "nullctrl/parallel.hpp"
#include "nullctrl/verify.hpp"

namespace nullctrl {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup {
  GridSpec grid;
  WeightBundle weights;
  std::unique_ptr<StepKernel> kernel;
  TrajectoryBar bar;
};

WeightBundle weights_for(const RunConfig& cfg, double s) {
  const NodeGrid nodes = NodeGrid::make(cfg.domain, {cfg.nx, cfg.ny, 1});
  const EtaField eta = build_eta(cfg.domain, nodes);
  return build_weights(eta, build_time_profile(cfg.domain.T, cfg.nt), s, cfg.lambda);
}

ScalarField theta_bar_profile(const GridSpec& g, double amplitude) {
  ScalarField f(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) f(i, j) = amplitude * std::sin(kPi * g.yc(j) / g.ly);
  }
  return f;
}

ScalarField sine_bump(const GridSpec& g, double amplitude) {
  ScalarField f(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      f(i, j) = amplitude * std::sin(kPi * g.xc(i) / g.lx) * std::sin(kPi * g.yc(j) / g.ly);
    }
  }
  return f;
}

Setup make_setup(const RunConfig& cfg, double s, bool with_bar) {
  Setup st;
  st.grid = cfg.grid();
  st.weights = weights_for(cfg, s);
  st.kernel = std::make_unique<StepKernel>(st.grid, make_mask(st.grid, cfg.domain.omega));
  st.bar = solve_trajectory(with_bar ? theta_bar_profile(st.grid, cfg.theta_bar_amplitude) : scalar_zeros(st.grid),
                            st.grid);
  return st;
}

class Outputs {
 public:
  explicit Outputs(const fs::path& dir) : dir_(dir) { fs::create_directories(dir); }

  fs::path path(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }
  void note(const std::string& key, const std::string& value) { results_.emplace_back(key, value); }
  void note(const std::string& key, double value) { note(key, format_number(value)); }

  const fs::path& dir() const { return dir_; }
  std::vector<std::string> files() const { return files_; }
  const Manifest& results() const { return results_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
  Manifest results_;
};

bool write_weight_report(const WeightBundle& w, Outputs& out) {
  const WeightReport rep = check_weight_inequalities(w);
  {
    std::ofstream os(out.path("weights.csv"));
    os << std::setprecision(17);
    write_weights_csv(os, w);
  }
  {
    std::ofstream os(out.path("inequalities.csv"));
    os << std::setprecision(17);
    write_weight_report_csv(os, rep);
  }
  out.note("weight_inequalities", rep.all_passed() ? "pass" : "fail");
  return rep.all_passed();
}

int run_weight_report(const RunConfig& cfg, Outputs& out) {
  return write_weight_report(weights_for(cfg, cfg.s), out) ? 0 : 4;
}

int run_trajectory(const RunConfig& cfg, Outputs& out) {
  const GridSpec g = cfg.grid();
  const TrajectoryBar bar = solve_trajectory(theta_bar_profile(g, cfg.theta_bar_amplitude), g);
  CsvWriter csv(out.path("trajectory.csv"),
                {"n", "t", "theta_bar_max", "oracle_max_error", "p_bar_max", "hydrostatic_residual"});
  double worst = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    const double t = g.time(n);
    const double decay = std::exp(-kPi * kPi * t / (g.ly * g.ly));
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      const double exact = cfg.theta_bar_amplitude * decay * std::sin(kPi * g.yc(j) / g.ly);
      err = std::max(err, std::abs(bar.theta_bar[n](0, j) - exact));
    }
    worst = std::max(worst, err);
    // ∇p̄ − θ̄ e_N on interior faces.
    VectorField res = gradient(g, bar.p_bar[n]);
    VectorField buoy = vector_zeros(g);
    buoy.v = cells_to_vfaces(g, bar.theta_bar[n]);
    axpy(-1.0, buoy, res);
    csv.cell(n).cell(t).cell(max_abs(bar.theta_bar[n])).cell(err).cell(max_abs(bar.p_bar[n])).cell(max_abs(res));
    csv.end_row();
    if (n % cfg.save_every == 0 || n == g.nt) {
      std::ostringstream name;
      name << "fields/theta_bar_n" << std::setw(5) << std::setfill('0') << n;
      write_field(out.dir() / name.str(), bar.theta_bar[n], g.hx, g.hy, "theta_bar");
      out.path(name.str() + ".csv");
      out.path(name.str() + ".hdr");
    }
  }
  out.note("oracle_max_error", worst);
  out.note("w3_proxy", bar.w3_proxy);
  out.note("grad_t_proxy", bar.grad_t_proxy);
  return 0;
}

void write_cg_log(const HumResult& r, const fs::path& path) {
  CsvWriter csv(path, {"iter", "J", "grad_norm"});
  for (const auto& row : r.cg_log) {
    csv.cell(row.iter).cell(row.J).cell(row.grad_norm);
    csv.end_row();
  }
}

void write_enorm(const ENormReport& e, const fs::path& path) {
  CsvWriter csv(path, {"component", "log_norm"});
  for (const auto& c : e.components) {
    csv.cell(c.name).cell(c.log_norm);
    csv.end_row();
  }
  csv.cell("terminal_weighted").cell(e.terminal_weighted_log);
  csv.end_row();
}

int run_linear_control(const RunConfig& cfg, Outputs& out) {
  const Setup st = make_setup(cfg, cfg.s, true);
  const GridSpec& g = st.grid;
  const ControlData data{vector_zeros(g), sine_bump(g, cfg.theta0_amplitude), {}};
  const ControlWeights cw = calibrate_gramian(*st.kernel, st.bar, control_weights(st.weights));
  const std::vector<double> eps = cfg.epsilons.empty() ? std::vector<double>{cfg.dual.epsilon} : cfg.epsilons;

  const auto results = parallel_map<HumResult>(static_cast<int>(eps.size()), worker_threads(), [&](int i) {
    DualConfig d = cfg.dual;
    d.epsilon = eps[i];
    return hum_solve(*st.kernel, data, st.bar, st.weights, cw, d);
  });

  CsvWriter csv(out.path("sweep_summary.csv"), {"epsilon", "terminal_norm", "kkt_residual", "cg_iters", "kkt_scale",
                                                "converged", "dual_value", "control_leak", "velocity_control"});
  bool all_converged = true;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const HumResult& r = results[i];
    all_converged = all_converged && r.converged;
    csv.cell(eps[i]).cell(r.terminal_norm).cell(r.kkt_residual).cell(r.cg_iters).cell(r.kkt_scale);
    csv.cell(r.converged ? "true" : "false").cell(r.dual_value);
    csv.cell(control_leak_outside(g, r.controls, st.kernel->mask()));
    csv.cell(r.controls.has_velocity_control() ? "true" : "false");
    csv.end_row();
    write_cg_log(r, out.path("cg_log_" + std::to_string(i) + ".csv"));
    write_enorm(r.e_norm, out.path("enorm_" + std::to_string(i) + ".csv"));
  }
  out.note("initial_norm", std::sqrt(inner(g, data.theta0, data.theta0)));
  out.note("gramian_scale", cw.gramian_scale);
  out.note("log_w0_offset", cw.log_w0_offset);
  out.note("log_wj_offset", cw.log_wj_offset);
  out.note("cg_converged", all_converged ? "true" : "false");
  return all_converged ? 0 : 3;
}

int run_nonlinear_control(const RunConfig& cfg, Outputs& out) {
  const Setup st = make_setup(cfg, cfg.s, true);
  const GridSpec& g = st.grid;
  ScalarField theta0 = st.bar.theta_bar0;
  axpy(1.0, sine_bump(g, cfg.picard.delta), theta0);
  const ControlWeights cw = calibrate_gramian(*st.kernel, st.bar, control_weights(st.weights));
  const PicardResult res =
      picard_control(*st.kernel, vector_zeros(g), theta0, st.bar, st.weights, cw, cfg.dual, cfg.picard);

  CsvWriter csv(out.path("history.csv"), {"outer_iter", "terminal_norm_linear", "terminal_norm_nonlinear", "diff",
                                          "f_norm_weighted", "f0_norm_weighted", "cg_iters"});
  for (const auto& row : res.history) {
    csv.cell(row.outer_iter).cell(row.terminal_norm_linear).cell(row.terminal_norm_nonlinear).cell(row.diff);
    csv.cell(row.f_norm_weighted).cell(row.f0_norm_weighted).cell(row.cg_iters);
    csv.end_row();
  }
  write_enorm(res.last_linear.e_norm, out.path("enorm.csv"));
  out.note("picard_status", res.status);
  out.note("outer_iterations", std::to_string(res.history.size()));
  out.note("data_norm", res.data_norm);
  out.note("delta_exceeded", res.delta_exceeded ? "true" : "false");
  out.note("control_leak", control_leak_outside(g, res.controls, st.kernel->mask()));
  out.note("gramian_scale", cw.gramian_scale);
  return res.converged ? 0 : 3;
}

int run_carleman(const RunConfig& cfg, Outputs& out) {
  const std::vector<double> sweep = cfg.s_sweep.empty() ? std::vector<double>{cfg.s} : cfg.s_sweep;
  CsvWriter samples(out.path("samples.csv"), {"seed", "lhs", "rhs", "ratio", "s", "lambda", "grid"});
  CsvWriter summary(out.path("carleman_summary.csv"), {"s", "max_ratio", "median_ratio", "all_finite"});
  const std::string grid = std::to_string(cfg.nx) + "x" + std::to_string(cfg.ny) + "x" + std::to_string(cfg.nt);
  bool finite = true;
  for (double s : sweep) {
    const Setup st = make_setup(cfg, s, true);
    CarlemanConfig cc;
    cc.samples = cfg.samples;
    cc.seed = cfg.seed;
    cc.use_alpha_family = cfg.alpha_family;
    cc.threads = worker_threads();
    const CarlemanReport rep = carleman_ratio(*st.kernel, st.bar, st.weights, cc);
    for (const auto& smp : rep.samples) {
      samples.cell(static_cast<long long>(smp.seed)).cell(smp.lhs).cell(smp.rhs).cell(smp.ratio);
      samples.cell(s).cell(cfg.lambda).cell(grid);
      samples.end_row();
    }
    summary.cell(s).cell(rep.max_ratio).cell(rep.median_ratio).cell(rep.all_finite ? "true" : "false");
    summary.end_row();
    finite = finite && rep.all_finite;
  }
  out.note("all_finite", finite ? "true" : "false");
  return 0;
}

int run_neumann(const RunConfig& cfg, Outputs& out) {
  const GridSpec g = cfg.grid();
  const FactorizedOperators ops(g, g.T / cfg.neumann_steps);
  const double area = g.lx * g.ly;
  ScalarField theta0(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      theta0(i, j) = cfg.neumann_mass / area + 0.5 * std::cos(kPi * g.xc(i) / g.lx) * std::cos(kPi * g.yc(j) / g.ly);
    }
  }
  VectorField y = vector_zeros(g);
  if (cfg.neumann_advect) {
    y = curl_of_streamfunction(g, [&](double x, double z) {
      const double a = std::sin(kPi * x / g.lx);
      const double b = std::sin(kPi * z / g.ly);
      return 0.1 * a * a * b * b;
    });
  }
  const NeumannReport rep = neumann_obstruction(ops, theta0, y, cfg.neumann_steps);
  CsvWriter csv(out.path("neumann.csv"), {"step", "t", "mass", "drift"});
  for (int n = 0; n <= rep.steps; ++n) {
    csv.cell(n).cell(n * ops.coefficient()).cell(rep.mass_history[n]).cell(rep.mass_history[n] - rep.mass_initial);
    csv.end_row();
  }
  out.note("mass_initial", rep.mass_initial);
  out.note("mass_final", rep.mass_final);
  out.note("max_drift", rep.max_drift);
  out.note("l1_final", rep.l1_final);
  out.note("lower_bound", rep.lower_bound);
  out.note("obstruction", rep.statement);
  return 0;
}

}  // namespace

RunOutcome run(const RunConfig& cfg, bool check_only) {
  validate(cfg);
  Outputs out(cfg.output_dir);
  int code = 0;
  if (check_only) {
    code = run_weight_report(cfg, out);
  } else {
    switch (cfg.experiment) {
      case Experiment::WeightReport: code = run_weight_report(cfg, out); break;
      case Experiment::Trajectory: code = run_trajectory(cfg, out); break;
      case Experiment::LinearControl: code = run_linear_control(cfg, out); break;
      case Experiment::NonlinearControl: code = run_nonlinear_control(cfg, out); break;
      case Experiment::CarlemanRatio: code = run_carleman(cfg, out); break;
      case Experiment::NeumannDemo: code = run_neumann(cfg, out); break;
    }
  }

  RunOutcome res;
  res.exit_code = code;
  res.status = code == 0 ? "ok" : (code == 3 ? "no_converge" : "check_failed");
  Manifest m = cfg.entries();
  m.emplace_back("mode", check_only ? "check" : "run");
  m.emplace_back("status", res.status);
  for (const auto& kv : out.results()) m.emplace_back("result." + kv.first, kv.second);
  write_manifest(out.path("manifest.txt"), m);
  res.files = out.files();
  return res;
}

std::string write_error_record(const fs::path& dir, const std::string& kind, const std::string& message, int line,
                               int exit_code) {
  nlohmann::ordered_json j;
  j["status"] = "error";
  j["kind"] = kind;
  j["message"] = message;
  if (line > 0) j["line"] = line;
  j["exit_code"] = exit_code;
  const std::string text = j.dump();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!ec) {
    std::ofstream os(dir / "error.json");
    if (os) os << text << '\n';
  }
  return text;
}

}  // namespace nullctrl
