#pragma once

#include <span>
#include <vector>

#include "mpe/field.hpp"
#include "mpe/geometry.hpp"
#include "mpe/model.hpp"
#include "mpe/operators.hpp"

namespace mpe {

enum class DiffusionMode {
  explicit_horizontal,  ///< vertical implicit, horizontal explicit
  crank_nicolson,       ///< vertical implicit, horizontal Crank-Nicolson
};

struct StepConfig {
  double dt = 0.002;
  DiffusionMode diffusion_mode = DiffusionMode::explicit_horizontal;
  double projection_tol = 1e-10;
  int max_cg_iters = 5000;
  double cfl_safety = 0.9;

  /// Throws ValidationError naming the offending key.
  void validate() const;

  friend bool operator==(const StepConfig&, const StepConfig&) = default;
};

/// Zonal low-pass filter for rows near the poles. Each band row is filtered by
/// a symmetric circulant whose squared response caps the zonal wavenumbers a
/// row can resolve at the spacing filter_sine * d_phi. apply() uses the square
/// root of that response so that S * Op * S keeps Op's symmetry and sign.
class PolarFilter {
 public:
  explicit PolarFilter(const Grid& grid);

  bool active() const noexcept { return !rows_.empty(); }
  /// Total (squared) response of row i at zonal wavenumber m.
  double response(int i, int m) const;
  void apply(ScalarField& field) const;
  void apply(VectorField& field) const;

 private:
  struct Row {
    int i;
    std::vector<double> kernel;  // circulant kernel, kernel[d] = kernel[n - d]
  };
  const Grid* grid_;
  std::vector<Row> rows_;
};

/// Scratch for the surface Poisson problem, plus the Jacobi diagonal of -L.
class EllipticWorkspace {
 public:
  explicit EllipticWorkspace(const Grid& grid);

  const Grid& grid() const noexcept { return *grid_; }
  double diagonal(int i) const { return diag_[i]; }

  ScalarField r, z, p, ap;

 private:
  const Grid* grid_;
  std::vector<double> diag_;
};

struct ProjectionResult {
  VectorField v;
  ScalarField phi_s;
  int iterations = 0;
  double residual = 0.0;  ///< max |column integral of div v| after the update
};

/// Solves L(Phi_s) = (1/dt) * column_divergence(v_star) for mean-zero Phi_s and
/// returns v_star - dt * grad(Phi_s) at every level. Throws EllipticDivergence.
ProjectionResult barotropic_projection(const VectorField& v_star, double dt, EllipticWorkspace& ws,
                                       const StepConfig& cfg);

/// Backward Euler for d/dt = coeff * D2 on one column; ghost closures from bc.
std::vector<double> implicit_vertical_diffusion(std::span<const double> column, double dt,
                                                double coeff, const ops::BoundaryCondition& bc,
                                                double d_xi);

/// Effective horizontal spacing of row i.
double effective_spacing(int i, const Grid& grid);

double cfl_dt(const State& state, const Grid& grid, const Params& params, const StepConfig& cfg);

/// One IMEX step; owns the filter and elliptic scratch for a fixed grid.
class Stepper {
 public:
  Stepper(const Grid& grid, const Params& params, const Forcing& forcing, const StepConfig& cfg);
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  /// Throws CflViolation, EllipticDivergence or NonFinite.
  State step(const State& state);

  const Grid& grid() const noexcept { return grid_; }
  const Params& params() const noexcept { return params_; }
  const StepConfig& config() const noexcept { return cfg_; }
  const Forcing& forcing() const noexcept { return forcing_; }
  /// Phi_s and iteration count of the most recent projection.
  const ScalarField& phi_s() const noexcept { return phi_s_; }
  int last_cg_iterations() const noexcept { return last_iterations_; }

 private:
  Grid grid_;
  Params params_;
  Forcing forcing_;
  StepConfig cfg_;
  PolarFilter filter_;
  EllipticWorkspace ws_;
  ScalarField phi_s_;
  int last_iterations_ = 0;
};

/// Stateless convenience wrapper around Stepper.
State step(const State& state, const Forcing& forcing, const Params& params,
           const StepConfig& cfg, const Grid& grid);

}  // namespace mpe
