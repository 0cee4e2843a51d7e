#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/diagnostics.hpp"
#include "mpe/geometry.hpp"
#include "mpe/model.hpp"
#include "mpe/timestepper.hpp"

namespace mpe {

struct GridSpec {
  int n_theta = 16;
  int n_phi = 32;
  int n_xi = 8;
  int polar_filter_band = kAutoFilterBand;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Analytic source profile. Latitudes are in degrees.
struct ForcingSpec {
  std::string profile = "zero";  ///< zero | constant | zonal_band | harmonic_bump | snapshot
  double amplitude = 0.0;
  double center = 0.0;  ///< zonal_band: centre latitude
  double width = 20.0;  ///< zonal_band: e-folding half width
  int l = 2;            ///< harmonic_bump degree
  int m = 1;            ///< harmonic_bump order
  std::string snapshot; ///< snapshot: Q1 <- T, Q2 <- q of the file
  friend bool operator==(const ForcingSpec&, const ForcingSpec&) = default;
};

struct InitialSpec {
  std::string profile = "rest";  ///< rest | random | zonal_jet | snapshot
  double amplitude = 1.0;
  std::uint64_t seed = 1;
  std::string snapshot;
  friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct RunSpec {
  double t_end = 1.0;
  long output_every = 10;   ///< steps between diagnostics rows
  long snapshot_every = 0;  ///< steps between snapshots; 0 writes only first and last
  std::string out_dir = "out";
  int workers = 1;          ///< ensemble members run concurrently
  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct Config {
  GridSpec grid;
  Params params;
  StepConfig step;
  ForcingSpec q1;
  ForcingSpec q2;
  InitialSpec initial;
  RunSpec run;

  /// Throws ValidationError naming the offending key.
  void validate() const;
  friend bool operator==(const Config&, const Config&) = default;
};

/// `key = value` lines with dotted keys, optional `[section]` prefixes and `#`
/// comments. Throws ParseError (with line) or ValidationError (with key).
Config parse_config(std::string_view text);
std::string render_config(const Config& cfg);
Config load_config(const std::filesystem::path& path);

Grid make_grid(const Config& cfg);

// ---------------------------------------------------------------- snapshots

struct Snapshot {
  int n_theta = 0;
  int n_phi = 0;
  int n_xi = 0;
  Params params;
  State state;
};

void write_snapshot(const std::filesystem::path& path, const State& state, const Params& params);
/// Throws IoError on missing files, bad headers or short payloads.
Snapshot read_snapshot(const std::filesystem::path& path);

// ---------------------------------------------------------------- profiles

/// Field selector for snapshot-backed sources.
enum class SourceSlot { heat, moisture };
ScalarField forcing_profile(const ForcingSpec& spec, SourceSlot slot, const Grid& grid);
Forcing make_forcing(const Config& cfg, const Grid& grid);

/// Uniform draws in [-1, 1). The engine is fully specified by the standard and
/// the 53-bit conversion is done by hand, so sequences match on every platform.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return 2.0 * std::ldexp(static_cast<double>(engine_() >> 11), -53) - 1.0; }

 private:
  std::mt19937_64 engine_;
};

/// Smooth random fields built from low-degree polynomials on the sphere times
/// low vertical cosine modes; max-norm equal to amplitude.
ScalarField random_smooth_scalar(Random& rng, double amplitude, const Grid& grid);
VectorField random_smooth_vector(Random& rng, double amplitude, const Grid& grid);

/// Initial state scaled by `scale`, with the velocity projected onto the
/// barotropic constraint.
State initial_state(const InitialSpec& spec, double scale, const Grid& grid, const StepConfig& step);

/// Fixed baroclinic shape used by twin runs; its column mean is zero.
VectorField twin_perturbation_shape(const Grid& grid);

// ---------------------------------------------------------------- drivers

/// Exit statuses of the command-line tool.
enum ExitStatus : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2, kExitIo = 3 };
/// Maps an exception to its exit status.
int exit_status_for(const std::exception& e);

/// Number of fixed-size steps that reach t_end.
long step_count(double t_end, double dt);

struct RunOutcome {
  int status = kExitOk;
  std::string message;
  std::vector<DiagRecord> records;
  State final_state;
};

/// Steps from the configured initial state to t_end. With a non-empty out_dir,
/// writes diagnostics.csv and snapshots there. A NonFinite failure writes the
/// last finite state and returns kExitNumerical; other errors propagate.
RunOutcome run_simulation(const Config& cfg);
/// Variant with an explicit initial state and optional output directory.
RunOutcome run_simulation(const Config& cfg, const State& initial, const std::filesystem::path& out_dir);

struct IdentityResult {
  std::string name;
  double max_residual = 0.0;
  double threshold = 0.0;
  bool ok() const { return max_residual <= threshold; }
};
struct VerifyReport {
  int n_theta = 0, n_phi = 0, n_xi = 0;
  std::uint64_t seed = 0;
  int draws = 0;
  std::vector<IdentityResult> identities;
  bool ok() const;
  std::string text() const;
};
/// Discrete integration-by-parts battery on random draws.
VerifyReport verify_operators(std::uint64_t seed, int n_theta, int n_phi, int n_xi, int draws = 100);

/// Random velocity whose column divergence vanishes to round-off: a random
/// fluctuation plus a random zonal barotropic part.
VectorField random_constrained_velocity(Random& rng, const Grid& grid);

struct EnsembleOutcome {
  AbsorbReport report;
  std::vector<std::vector<DiagRecord>> members;
  double t_transient = 0.0;
};
/// Members run with the configured initial profile scaled by scales[m]
/// (a single scale is reused for all members). Results are ordered by member
/// index whatever cfg.run.workers is. Writes per-member CSVs when out_dir is set.
EnsembleOutcome run_ensemble(const Config& cfg, int member_count, const std::vector<double>& scales);

struct TwinOutcome {
  std::vector<TwinPoint> series;
  double shape_norm_sq = 0.0;  ///< |perturbation shape|_2^2
};
/// Base run and a run whose initial velocity carries epsilon * shape.
TwinOutcome run_twin(const Config& cfg, double epsilon);

}  // namespace mpe
