#include "nullctrl/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nullctrl/errors.hpp"

namespace nullctrl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& v, int line, const std::string& key) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ParseError(line, "key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& v, int line, const std::string& key) {
  long long out = 0;
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ParseError(line, "key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v, int line, const std::string& key) {
  const long long n = to_integer(v, line, key);
  if (n < -1000000000LL || n > 1000000000LL) throw ParseError(line, "key '" + key + "' is out of range");
  return static_cast<int>(n);
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError(line, "key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(item, line, key));
  if (out.empty()) throw ParseError(line, "key '" + key + "' expects a comma-separated list");
  return out;
}

Box to_box(const std::string& v, int line, const std::string& key) {
  const auto xs = to_list(v, line, key);
  if (xs.size() != 4) throw ParseError(line, "key '" + key + "' expects x_lo,x_hi,y_lo,y_hi");
  Box b;
  b.lo = {xs[0], xs[2], 0.0};
  b.hi = {xs[1], xs[3], 1.0};
  return b;
}

Experiment to_experiment(const std::string& v, int line) {
  static const std::map<std::string, Experiment> names = {
      {"trajectory", Experiment::Trajectory},
      {"linear-control", Experiment::LinearControl},
      {"nonlinear-control", Experiment::NonlinearControl},
      {"carleman-ratio", Experiment::CarlemanRatio},
      {"neumann-demo", Experiment::NeumannDemo},
      {"weight-report", Experiment::WeightReport},
  };
  const auto it = names.find(v);
  if (it == names.end()) throw ParseError(line, "unknown experiment '" + v + "'");
  return it->second;
}

std::string list_string(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_number(xs[i]);
  return out;
}

std::string box_string(const Box& b) {
  return list_string({b.lo[0], b.hi[0], b.lo[1], b.hi[1]});
}

std::string bool_string(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(RunConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["experiment"] = [](RunConfig& c, const std::string& v, int l) { c.experiment = to_experiment(v, l); };
    t["seed"] = [](RunConfig& c, const std::string& v, int l) {
      const long long n = to_integer(v, l, "seed");
      if (n < 0) throw ParseError(l, "seed must be nonnegative");
      c.seed = static_cast<std::uint64_t>(n);
    };
    t["output_dir"] = [](RunConfig& c, const std::string& v, int) { c.output_dir = v; };
    t["samples"] = [](RunConfig& c, const std::string& v, int l) { c.samples = to_int(v, l, "samples"); };

    t["domain.lx"] = [](RunConfig& c, const std::string& v, int l) { c.domain.length[0] = to_double(v, l, "domain.lx"); };
    t["domain.ly"] = [](RunConfig& c, const std::string& v, int l) { c.domain.length[1] = to_double(v, l, "domain.ly"); };
    t["domain.T"] = [](RunConfig& c, const std::string& v, int l) { c.domain.T = to_double(v, l, "domain.T"); };
    t["domain.omega"] = [](RunConfig& c, const std::string& v, int l) { c.domain.omega = to_box(v, l, "domain.omega"); };
    t["domain.omega0"] = [](RunConfig& c, const std::string& v, int l) { c.domain.omega0 = to_box(v, l, "domain.omega0"); };

    t["grid.nx"] = [](RunConfig& c, const std::string& v, int l) { c.nx = to_int(v, l, "grid.nx"); };
    t["grid.ny"] = [](RunConfig& c, const std::string& v, int l) { c.ny = to_int(v, l, "grid.ny"); };
    t["grid.nt"] = [](RunConfig& c, const std::string& v, int l) { c.nt = to_int(v, l, "grid.nt"); };

    t["weights.s"] = [](RunConfig& c, const std::string& v, int l) { c.s = to_double(v, l, "weights.s"); };
    t["weights.lambda"] = [](RunConfig& c, const std::string& v, int l) { c.lambda = to_double(v, l, "weights.lambda"); };

    t["dual.epsilon"] = [](RunConfig& c, const std::string& v, int l) { c.dual.epsilon = to_double(v, l, "dual.epsilon"); };
    t["dual.epsilons"] = [](RunConfig& c, const std::string& v, int l) { c.epsilons = to_list(v, l, "dual.epsilons"); };
    t["dual.cg_tol"] = [](RunConfig& c, const std::string& v, int l) { c.dual.cg_tol = to_double(v, l, "dual.cg_tol"); };
    t["dual.cg_max_iters"] = [](RunConfig& c, const std::string& v, int l) {
      c.dual.cg_max_iters = to_int(v, l, "dual.cg_max_iters");
    };
    t["dual.observe_velocity"] = [](RunConfig& c, const std::string& v, int l) {
      c.dual.observe_velocity = to_bool(v, l, "dual.observe_velocity");
    };
    t["dual.j_index"] = [](RunConfig& c, const std::string& v, int l) { c.dual.j_index = to_int(v, l, "dual.j_index"); };

    t["picard.delta"] = [](RunConfig& c, const std::string& v, int l) { c.picard.delta = to_double(v, l, "picard.delta"); };
    t["picard.max_outer"] = [](RunConfig& c, const std::string& v, int l) {
      c.picard.max_outer = to_int(v, l, "picard.max_outer");
    };
    t["picard.outer_tol"] = [](RunConfig& c, const std::string& v, int l) {
      c.picard.outer_tol = to_double(v, l, "picard.outer_tol");
    };
    t["picard.epsilon_schedule"] = [](RunConfig& c, const std::string& v, int l) {
      if (v == "fixed") {
        c.picard.geometric_epsilon = false;
      } else if (v == "geometric") {
        c.picard.geometric_epsilon = true;
      } else {
        throw ParseError(l, "picard.epsilon_schedule must be 'fixed' or 'geometric'");
      }
    };

    t["data.theta_bar_amplitude"] = [](RunConfig& c, const std::string& v, int l) {
      c.theta_bar_amplitude = to_double(v, l, "data.theta_bar_amplitude");
    };
    t["data.theta0_amplitude"] = [](RunConfig& c, const std::string& v, int l) {
      c.theta0_amplitude = to_double(v, l, "data.theta0_amplitude");
    };
    t["trajectory.save_every"] = [](RunConfig& c, const std::string& v, int l) {
      c.save_every = to_int(v, l, "trajectory.save_every");
    };

    t["verify.samples"] = [](RunConfig& c, const std::string& v, int l) { c.samples = to_int(v, l, "verify.samples"); };
    t["verify.s_sweep"] = [](RunConfig& c, const std::string& v, int l) { c.s_sweep = to_list(v, l, "verify.s_sweep"); };
    t["verify.alpha_family"] = [](RunConfig& c, const std::string& v, int l) {
      c.alpha_family = to_bool(v, l, "verify.alpha_family");
    };

    t["neumann.steps"] = [](RunConfig& c, const std::string& v, int l) { c.neumann_steps = to_int(v, l, "neumann.steps"); };
    t["neumann.mass"] = [](RunConfig& c, const std::string& v, int l) { c.neumann_mass = to_double(v, l, "neumann.mass"); };
    t["neumann.advect"] = [](RunConfig& c, const std::string& v, int l) {
      c.neumann_advect = to_bool(v, l, "neumann.advect");
    };
    return t;
  }();
  return table;
}

}  // namespace

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Trajectory: return "trajectory";
    case Experiment::LinearControl: return "linear-control";
    case Experiment::NonlinearControl: return "nonlinear-control";
    case Experiment::CarlemanRatio: return "carleman-ratio";
    case Experiment::NeumannDemo: return "neumann-demo";
    case Experiment::WeightReport: return "weight-report";
  }
  return "unknown";
}

GridSpec RunConfig::grid() const { return GridSpec::make(nx, ny, domain.length[0], domain.length[1], nt, domain.T); }

Manifest RunConfig::entries() const {
  return {
      {"experiment", experiment_name(experiment)},
      {"seed", std::to_string(seed)},
      {"output_dir", output_dir},
      {"domain.lx", format_number(domain.length[0])},
      {"domain.ly", format_number(domain.length[1])},
      {"domain.T", format_number(domain.T)},
      {"domain.omega", box_string(domain.omega)},
      {"domain.omega0", box_string(domain.omega0)},
      {"grid.nx", std::to_string(nx)},
      {"grid.ny", std::to_string(ny)},
      {"grid.nt", std::to_string(nt)},
      {"weights.s", format_number(s)},
      {"weights.lambda", format_number(lambda)},
      {"dual.epsilon", format_number(dual.epsilon)},
      {"dual.epsilons", list_string(epsilons.empty() ? std::vector<double>{dual.epsilon} : epsilons)},
      {"dual.cg_tol", format_number(dual.cg_tol)},
      {"dual.cg_max_iters", std::to_string(dual.cg_max_iters)},
      {"dual.observe_velocity", bool_string(dual.observe_velocity)},
      {"dual.j_index", std::to_string(dual.j_index)},
      {"picard.delta", format_number(picard.delta)},
      {"picard.max_outer", std::to_string(picard.max_outer)},
      {"picard.outer_tol", format_number(picard.outer_tol)},
      {"picard.epsilon_schedule", picard.geometric_epsilon ? "geometric" : "fixed"},
      {"data.theta_bar_amplitude", format_number(theta_bar_amplitude)},
      {"data.theta0_amplitude", format_number(theta0_amplitude)},
      {"trajectory.save_every", std::to_string(save_every)},
      {"verify.samples", std::to_string(samples)},
      {"verify.s_sweep", list_string(s_sweep.empty() ? std::vector<double>{s} : s_sweep)},
      {"verify.alpha_family", bool_string(alpha_family)},
      {"neumann.steps", std::to_string(neumann_steps)},
      {"neumann.mass", format_number(neumann_mass)},
      {"neumann.advect", bool_string(neumann_advect)},
  };
}

void validate(const RunConfig& c) {
  c.domain.validate();
  if (!c.domain.omega0.contains(c.domain.center(), c.domain.dim)) {
    throw ValidationError("domain.omega0 must contain the domain center (the critical point of the weight profile)");
  }
  if (c.nx < 4 || c.ny < 4) throw ValidationError("grid.nx and grid.ny must be at least 4");
  if (c.nt < 8) throw ValidationError("grid.nt must be at least 8");
  if (!(c.s >= 1.0)) throw ValidationError("weights.s must be >= 1");
  if (!(c.lambda >= 1.0)) throw ValidationError("weights.lambda must be >= 1");
  auto check_eps = [](double e) {
    if (!(e > 0.0)) throw ValidationError("dual.epsilon values must be positive");
  };
  check_eps(c.dual.epsilon);
  for (double e : c.epsilons) check_eps(e);
  if (!(c.dual.cg_tol > 0.0 && c.dual.cg_tol < 1.0)) throw ValidationError("dual.cg_tol must lie in (0, 1)");
  if (c.dual.cg_max_iters < 1) throw ValidationError("dual.cg_max_iters must be at least 1");
  if (c.dual.j_index != 1) {
    throw ValidationError("dual.j_index must be 1: in two dimensions the vertical component is never controlled");
  }
  if (!(c.picard.delta >= 0.0)) throw ValidationError("picard.delta must be nonnegative");
  if (!(c.picard.outer_tol > 0.0)) throw ValidationError("picard.outer_tol must be positive");
  if (c.picard.max_outer < 1) throw ValidationError("picard.max_outer must be at least 1");
  if (c.save_every < 1) throw ValidationError("trajectory.save_every must be at least 1");
  if (c.samples < 1) throw ValidationError("verify.samples must be at least 1");
  for (double s : c.s_sweep) {
    if (!(s >= 1.0)) throw ValidationError("verify.s_sweep values must be >= 1");
  }
  if (c.neumann_steps < 1) throw ValidationError("neumann.steps must be at least 1");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key=value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(line, "unknown key '" + key + "'");
    // samples is an alias of verify.samples; both count as the same key.
    const std::string canonical = key == "samples" ? "verify.samples" : key;
    if (!seen.insert(canonical).second) throw ParseError(line, "duplicate key '" + key + "'");
    it->second(cfg, value, line);
  }
  validate(cfg);
  return cfg;
}

}  // namespace nullctrl
