#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "mpe/errors.hpp"
#include "mpe/harness.hpp"

namespace mpe {

namespace fs = std::filesystem;

int exit_status_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->category()) {
      case ErrorCategory::validation: return kExitValidation;
      case ErrorCategory::numerical: return kExitNumerical;
      case ErrorCategory::io: return kExitIo;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kExitIo;
  return kExitNumerical;
}

long step_count(double t_end, double dt) {
  if (!(dt > 0.0)) throw ValidationError("step.dt", "must be positive");
  if (!(t_end > 0.0)) return 0;
  // Tolerate t_end / dt landing just above an integer through rounding.
  return static_cast<long>(std::ceil(t_end / dt - 1e-9));
}

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

fs::path snapshot_path(const fs::path& dir, long step) {
  char name[40];
  std::snprintf(name, sizeof name, "snapshot_%08ld.bin", step);
  return dir / name;
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
  }
  void line(const std::string& text) {
    out_ << text << '\n';
    if (!out_) throw IoError("write failed on '" + path_.string() + "'");
  }
  void flush() { out_.flush(); }

 private:
  fs::path path_;
  std::ofstream out_;
};

}  // namespace

RunOutcome run_simulation(const Config& cfg) {
  cfg.validate();
  const Grid grid = make_grid(cfg);
  const State initial = initial_state(cfg.initial, 1.0, grid, cfg.step);
  return run_simulation(cfg, initial, cfg.run.out_dir);
}

RunOutcome run_simulation(const Config& cfg, const State& initial, const fs::path& out_dir) {
  cfg.validate();
  const Grid grid = make_grid(cfg);
  const Forcing forcing = make_forcing(cfg, grid);
  Stepper stepper(grid, cfg.params, forcing, cfg.step);
  const DiffusionMode mode = cfg.step.diffusion_mode;
  const long n_steps = step_count(cfg.run.t_end, cfg.step.dt);

  const bool write = !out_dir.empty();
  std::optional<CsvWriter> csv;
  if (write) {
    make_dir(out_dir);
    csv.emplace(out_dir / "diagnostics.csv");
    csv->line(csv_header());
  }

  RunOutcome outcome;
  State state = initial;
  outcome.records.push_back(make_record(state, 0, forcing, cfg.params, grid, mode));
  if (write) {
    csv->line(csv_row(outcome.records.back()));
    write_snapshot(snapshot_path(out_dir, 0), state, cfg.params);
  }
  long last_snapshot = 0;
  for (long n = 1; n <= n_steps; ++n) {
    try {
      state = stepper.step(state);
    } catch (const NonFinite& e) {
      outcome.status = kExitNumerical;
      outcome.message = e.what();
      if (write) {
        csv->flush();
        write_snapshot(out_dir / "snapshot_final.bin", state, cfg.params);
      }
      outcome.final_state = std::move(state);
      return outcome;
    }
    if (n % cfg.run.output_every == 0 || n == n_steps) {
      const DiagRecord prev = outcome.records.back();
      outcome.records.push_back(make_record(state, n, forcing, cfg.params, grid, mode, &prev));
      if (write) csv->line(csv_row(outcome.records.back()));
    }
    if (write && cfg.run.snapshot_every > 0 && n % cfg.run.snapshot_every == 0) {
      write_snapshot(snapshot_path(out_dir, n), state, cfg.params);
      last_snapshot = n;
    }
  }
  if (write && last_snapshot != n_steps) write_snapshot(snapshot_path(out_dir, n_steps), state, cfg.params);
  outcome.final_state = std::move(state);
  return outcome;
}

EnsembleOutcome run_ensemble(const Config& cfg, int member_count, const std::vector<double>& scales) {
  cfg.validate();
  if (member_count < 2) throw InsufficientMembers("ensemble needs at least 2 members");
  if (scales.empty() || (scales.size() != 1 && scales.size() != static_cast<std::size_t>(member_count))) {
    throw LengthMismatch("ensemble: " + std::to_string(scales.size()) + " scales for " +
                         std::to_string(member_count) + " members");
  }
  for (double s : scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("scales", "must be finite and non-negative");
  }
  const Grid grid = make_grid(cfg);
  const fs::path root = cfg.run.out_dir;

  EnsembleOutcome out;
  out.members.resize(member_count);
  std::vector<std::exception_ptr> errors(member_count);
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int m = next++; m < member_count; m = next++) {
      try {
        const double scale = scales.size() == 1 ? scales[0] : scales[m];
        const State init = initial_state(cfg.initial, scale, grid, cfg.step);
        fs::path dir;
        if (!root.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "member_%02d", m);
          dir = root / name;
        }
        RunOutcome r = run_simulation(cfg, init, dir);
        if (r.status != kExitOk) throw NonFinite("member " + std::to_string(m) + ": " + r.message);
        out.members[m] = std::move(r.records);
      } catch (...) {
        errors[m] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(cfg.run.workers, member_count);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.t_transient = 2.0 * cfg.run.t_end / 3.0;
  out.report = absorbing_stats(out.members, out.t_transient);
  if (!root.empty()) {
    CsvWriter csv(root / "ensemble.csv");
    csv.line("member,scale,late_sup,entry_time,flatness");
    for (int m = 0; m < member_count; ++m) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", m, scales.size() == 1 ? scales[0] : scales[m],
                    out.report.late_sup[m], out.report.entry_times[m], out.report.flatness[m]);
      csv.line(buf);
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "# rho_hat=%.17g spread=%.17g t_transient=%.17g", out.report.rho_hat,
                  out.report.spread, out.t_transient);
    csv.line(buf);
  }
  return out;
}

TwinOutcome run_twin(const Config& cfg, double epsilon) {
  cfg.validate();
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon", "must be non-negative");
  const Grid grid = make_grid(cfg);
  const Forcing forcing = make_forcing(cfg, grid);
  const VectorField shape = twin_perturbation_shape(grid);

  State base = initial_state(cfg.initial, 1.0, grid, cfg.step);
  State pert = base;
  pert.v.add_scaled(epsilon, shape);

  Stepper step_a(grid, cfg.params, forcing, cfg.step);
  Stepper step_b(grid, cfg.params, forcing, cfg.step);
  const long n_steps = step_count(cfg.run.t_end, cfg.step.dt);

  TwinOutcome out;
  out.shape_norm_sq = inner_omega(shape, shape, grid);
  const auto record = [&] {
    out.series.push_back({base.t, separation(pert, base, grid), twin_coefficient(base, grid, cfg.params)});
  };
  record();
  for (long n = 1; n <= n_steps; ++n) {
    pert = step_a.step(pert);
    base = step_b.step(base);
    if (n % cfg.run.output_every == 0 || n == n_steps) record();
  }
  if (!cfg.run.out_dir.empty()) {
    make_dir(cfg.run.out_dir);
    CsvWriter csv(fs::path(cfg.run.out_dir) / "twin.csv");
    csv.line("t,sep,K");
    for (const auto& p : out.series) {
      char buf[100];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", p.t, p.sep, p.K);
      csv.line(buf);
    }
  }
  return out;
}

}  // namespace mpe
