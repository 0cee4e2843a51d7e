#pragma once

#include <span>
#include <string>
#include <vector>

#include "mpe/field.hpp"
#include "mpe/geometry.hpp"
#include "mpe/model.hpp"
#include "mpe/timestepper.hpp"

namespace mpe {

/// Quadrature p-norm over the shell, p in {2, 3, 4}. Vector fields use the
/// pointwise Euclidean magnitude.
double lp_norm(const ScalarField& field, int p, const Grid& grid);
double lp_norm(const VectorField& field, int p, const Grid& grid);

/// |U|_2^2 = |v|_2^2 + |T|_2^2 + |q|_2^2
double energy(const State& state, const Grid& grid);

/// Value at xi = 1 implied by the boundary closure (mean of top cell and ghost).
ScalarField surface_trace(const ScalarField& field, const ops::BoundaryCondition& bc, const Grid& grid);
/// L^p(S^2) norm of the xi = 1 trace.
double trace_norm(const ScalarField& field, const ops::BoundaryCondition& bc, int p, const Grid& grid);
/// |d field / d xi|_2 over the interior faces.
double dxi_norm(const ScalarField& field, const Grid& grid);
double dxi_norm(const VectorField& field, const Grid& grid);

/// V-norms; squares add exactly: U^2 = v^2 + T^2 + q^2.
struct H1Norms {
  double v = 0.0;
  double T = 0.0;
  double q = 0.0;
  double U = 0.0;
  double v_sq = 0.0;
  double T_sq = 0.0;
  double q_sq = 0.0;
  double U_sq = 0.0;  ///< v_sq + T_sq + q_sq
};
H1Norms h1_norm(const State& state, const Grid& grid, const Params& params);

/// Dissipation and forcing integrals of the energy balance.
struct EnergyBudget {
  double diss_v = 0.0;
  double diss_T = 0.0;
  double diss_q = 0.0;
  double forcing_T = 0.0;
  double forcing_q = 0.0;

  double dissipation() const { return diss_v + diss_T + diss_q; }
  double forcing() const { return forcing_T + forcing_q; }
};
/// With explicit horizontal diffusion on a filtered grid, the horizontal terms
/// are evaluated on the filtered fields, which is what the scheme dissipates.
EnergyBudget energy_budget(const State& state, const Forcing& forcing, const Params& params,
                           const Grid& grid,
                           DiffusionMode mode = DiffusionMode::explicit_horizontal);
/// |(E1 - E0) / (2 dt) + mean dissipation - mean forcing| across an interval.
double energy_residual(double e0, const EnergyBudget& b0, double e1, const EnergyBudget& b1, double dt);

struct DiagRecord {
  double t = 0.0;
  long step = 0;
  double v_l2 = 0, T_l2 = 0, q_l2 = 0, U_l2 = 0;
  double vtilde_l3 = 0, T_l3 = 0;
  double vtilde_l4 = 0, T_l4 = 0, q_l4 = 0;
  double v_h1 = 0, T_h1 = 0, q_h1 = 0, U_h1 = 0;
  double T_trace_l2 = 0, q_trace_l2 = 0, T_trace_l4 = 0, q_trace_l4 = 0;
  double vxi_l2 = 0, Txi_l2 = 0, qxi_l2 = 0;
  double vbar_h1 = 0;
  double constraint_residual = 0;
  double v_max = 0;
  double diss_v = 0, diss_T = 0, diss_q = 0, forcing_T = 0, forcing_q = 0;
  double energy_residual = 0;

  EnergyBudget budget() const { return {diss_v, diss_T, diss_q, forcing_T, forcing_q}; }
  /// |U|_2^2
  double energy() const { return U_l2 * U_l2; }
};

/// Evaluates every functional of the record. energy_residual is left at 0 when
/// there is no previous record.
DiagRecord make_record(const State& state, long step, const Forcing& forcing, const Params& params,
                       const Grid& grid, DiffusionMode mode = DiffusionMode::explicit_horizontal,
                       const DiagRecord* previous = nullptr);

/// CSV column names in schema order.
const std::vector<std::string>& diag_columns();
std::string csv_header();
std::string csv_row(const DiagRecord& r);
/// Inverse of csv_row; throws ParseError on malformed rows.
DiagRecord parse_csv_row(const std::string& line);

/// min{1/Re1, 1/(2Rt2), alpha_s/(2Rt2), 1/(2Rq2), beta_s/(2Rq2)}
double decay_constant(const Params& params);

struct DecayReport {
  double c0 = 0.0;
  double fitted_rate = 0.0;
  bool monotone = true;
  bool envelope_ok = true;
};
/// Throws EmptySeries.
DecayReport decay_envelope(std::span<const DiagRecord> series, const Params& params);

/// |v_A - v_B|^2 + |T_A - T_B|^2 + |q_A - q_B|^2
double separation(const State& a, const State& b, const Grid& grid);
/// Coefficient of the difference inequality built from run B, unit constants.
double twin_coefficient(const State& b, const Grid& grid, const Params& params);

struct TwinPoint {
  double t = 0.0;
  double sep = 0.0;
  double K = 0.0;
};
/// Throws ShapeMismatch, LengthMismatch.
std::vector<TwinPoint> twin_separation(std::span<const State> run_a, std::span<const State> run_b,
                                       const Grid& grid, const Params& params);

struct EnergySplit {
  double bar = 0.0;   ///< |vbar|^2 over the sphere
  double fluc = 0.0;  ///< |v - vbar|_2^2
};
EnergySplit barotropic_baroclinic_energy(const VectorField& v, const Grid& grid);

struct AbsorbReport {
  double rho_hat = 0.0;
  std::vector<double> entry_times;
  double spread = 1.0;
  std::vector<double> late_sup;   ///< per-member sup of the V-norm after t_transient
  std::vector<double> flatness;   ///< per-member (max - min) / max over the last third
};
/// Throws InsufficientMembers, EmptySeries.
AbsorbReport absorbing_stats(std::span<const std::vector<DiagRecord>> ensemble, double t_transient);

}  // namespace mpe
