// Command-line front end: run, verify-ops, ensemble, twin.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mpe/errors.hpp"
#include "mpe/harness.hpp"

namespace {

using namespace mpe;

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      dims.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("grid", "expected T,P,X integers, got '" + text + "'");
    }
  }
  if (dims.size() != 3) throw ValidationError("grid", "expected three dimensions T,P,X");
  return dims;
}

int cmd_run(const std::string& config_path, const std::string& out) {
  Config cfg = load_config(config_path);
  if (!out.empty()) cfg.run.out_dir = out;
  const RunOutcome r = run_simulation(cfg);
  const DiagRecord& last = r.records.back();
  std::printf("t = %.6g after %ld steps, |U|_2 = %.6e, ||U|| = %.6e, constraint residual = %.3e\n", last.t,
              last.step, last.U_l2, last.U_h1, last.constraint_residual);
  if (r.status != kExitOk) std::fprintf(stderr, "error: %s\n", r.message.c_str());
  return r.status;
}

int cmd_verify(std::uint64_t seed, const std::string& grid) {
  const auto d = parse_dims(grid);
  const VerifyReport rep = verify_operators(seed, d[0], d[1], d[2]);
  std::fputs(rep.text().c_str(), stdout);
  return rep.ok() ? kExitOk : kExitNumerical;
}

int cmd_ensemble(const std::string& config_path, int members, const std::vector<double>& scales,
                 const std::string& out, int workers) {
  Config cfg = load_config(config_path);
  if (!out.empty()) cfg.run.out_dir = out;
  if (workers > 0) cfg.run.workers = workers;
  const EnsembleOutcome e = run_ensemble(cfg, members, scales);
  std::printf("rho_hat = %.6e  spread = %.6f  t_transient = %.6g\n", e.report.rho_hat, e.report.spread,
              e.t_transient);
  for (std::size_t m = 0; m < e.members.size(); ++m) {
    std::printf("member %zu: late sup %.6e, entry time %.6g, late flatness %.4f\n", m, e.report.late_sup[m],
                e.report.entry_times[m], e.report.flatness[m]);
  }
  return kExitOk;
}

int cmd_twin(const std::string& config_path, double epsilon, const std::string& out) {
  Config cfg = load_config(config_path);
  if (!out.empty()) cfg.run.out_dir = out;
  const TwinOutcome t = run_twin(cfg, epsilon);
  const TwinPoint& first = t.series.front();
  const TwinPoint& last = t.series.back();
  std::printf("sep(0) = %.6e  sep(%.6g) = %.6e  K(%.6g) = %.6e\n", first.sep, last.t, last.sep, last.t, last.K);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moist primitive equations on the sphere: simulation and verification tool"};
  app.require_subcommand(1);

  std::string config, out, grid = "16,32,8";
  std::uint64_t seed = 1;
  int members = 0, workers = 0;
  std::vector<double> scales;
  double epsilon = 0.0;

  auto* run = app.add_subcommand("run", "integrate one configuration");
  run->add_option("--config", config, "configuration file")->required();
  run->add_option("--out", out, "output directory (overrides run.out_dir)");

  auto* verify = app.add_subcommand("verify-ops", "discrete integration-by-parts identity battery");
  verify->add_option("--seed", seed, "random seed");
  verify->add_option("--grid", grid, "n_theta,n_phi,n_xi");

  auto* ensemble = app.add_subcommand("ensemble", "absorbing-ball ensemble over initial amplitudes");
  ensemble->add_option("--config", config, "configuration file")->required();
  ensemble->add_option("--members", members, "member count")->required();
  ensemble->add_option("--scales", scales, "initial amplitude scales a,b,...")->required()->delimiter(',');
  ensemble->add_option("--out", out, "output directory (overrides run.out_dir)");
  ensemble->add_option("--workers", workers, "concurrent members (overrides run.workers)");

  auto* twin = app.add_subcommand("twin", "continuous-dependence twin runs");
  twin->add_option("--config", config, "configuration file")->required();
  twin->add_option("--epsilon", epsilon, "perturbation size")->required();
  twin->add_option("--out", out, "output directory (overrides run.out_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(config, out);
    if (*verify) return cmd_verify(seed, grid);
    if (*ensemble) return cmd_ensemble(config, members, scales, out, workers);
    if (*twin) return cmd_twin(config, epsilon, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_status_for(e);
  }
  return kExitValidation;
}
