// Command-line driver: nullctrl run <config> [--check] [--seed N] [--out DIR]
//
// Exit codes: 0 ok, 2 configuration error, 3 solver non-convergence, 4 internal error.
// Failures also leave a one-line JSON record on stderr and in <out>/error.json.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nullctrl/config.hpp"
#include "nullctrl/errors.hpp"

namespace {

int fail(const std::string& dir, const std::string& kind, const std::string& message, int line, int code) {
  std::cerr << nullctrl::write_error_record(dir.empty() ? "." : dir, kind, message, line, code) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Null-control laboratory for the linearized and reduced Boussinesq system"};
  app.require_subcommand(1);

  std::string config_path;
  bool check = false;
  long long seed = -1;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "execute the experiment described by a config file");
  run->add_option("config", config_path, "key=value configuration file")->required();
  run->add_flag("--check", check, "validate and report weight inequalities only");
  run->add_option("--seed", seed, "override the configured seed")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  nullctrl::RunConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) return fail(out_dir, "ConfigError", "cannot read " + config_path, 0, 2);
    std::stringstream text;
    text << in.rdbuf();
    cfg = nullctrl::parse_config(text.str());
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
  } catch (const nullctrl::ParseError& e) {
    return fail(out_dir, e.kind(), e.what(), e.line(), 2);
  } catch (const nullctrl::Error& e) {
    return fail(out_dir, e.kind(), e.what(), 0, 2);
  }

  try {
    const auto outcome = nullctrl::run(cfg, check);
    std::cout << "status=" << outcome.status << " experiment=" << nullctrl::experiment_name(cfg.experiment)
              << " out=" << cfg.output_dir << '\n';
    if (outcome.exit_code != 0) {
      return fail(cfg.output_dir, outcome.exit_code == 3 ? "NoConverge" : "CheckFailed", outcome.status, 0,
                  outcome.exit_code);
    }
    return 0;
  } catch (const nullctrl::AdmissibilityError& e) {
    return fail(cfg.output_dir, e.kind(), e.what(), 0, 2);
  } catch (const nullctrl::ValidationError& e) {
    return fail(cfg.output_dir, e.kind(), e.what(), 0, 2);
  } catch (const nullctrl::PoissonNoConverge& e) {
    return fail(cfg.output_dir, e.kind(), e.what(), 0, 3);
  } catch (const nullctrl::Error& e) {
    return fail(cfg.output_dir, e.kind(), e.what(), 0, 4);
  } catch (const std::exception& e) {
    return fail(cfg.output_dir, "InternalError", e.what(), 0, 4);
  }
}
