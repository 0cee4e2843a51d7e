#pragma once

#include "mpe/field.hpp"
#include "mpe/geometry.hpp"
#include "mpe/operators.hpp"

namespace mpe {

/// Prognostic variables. W and Phi are diagnosed, never stored.
struct State {
  VectorField v;
  ScalarField T;
  ScalarField q;
  double t = 0.0;

  static State zero(const Grid& grid) { return {grid.vector(), grid.scalar(), grid.scalar(), 0.0}; }
  bool all_finite() const { return v.all_finite() && T.all_finite() && q.all_finite(); }
};

struct Diagnosed {
  ScalarField W;      ///< vertical velocity on faces
  ScalarField Phi;    ///< geopotential at cell centres
  ScalarField Phi_s;  ///< geopotential at xi = 1, zero sphere mean
};

/// Time-independent heat and moisture sources.
struct Forcing {
  ScalarField Q1;
  ScalarField Q2;

  static Forcing zero(const Grid& grid) { return {grid.scalar(), grid.scalar()}; }
};

/// W from the velocity and Phi from hydrostatic balance. phi_s defaults to zero;
/// when given it is re-centred to zero sphere mean.
Diagnosed diagnose(const State& state, const Params& params, const Grid& grid,
                   const ScalarField* phi_s = nullptr);

/// Inviscid, unforced tendencies of an operand state under a transport velocity.
/// q_coef is the moisture entering the (1 + a q) buoyancy factor. With
/// transport = operand.v and q_coef = operand.q these are the right-hand sides
/// of the momentum, temperature and moisture equations without Phi_s and Coriolis.
struct Tendencies {
  VectorField v;
  ScalarField T;
  ScalarField q;
};
Tendencies inviscid_tendencies(const VectorField& transport, const State& operand,
                               const ScalarField& q_coef, const Params& params, const Grid& grid,
                               const ops::AdvectOptions& options = {});

/// -[full_advect(v, v) + (f/R0) k x v + grad Phi_s + PGF(T, q)]. The stepper
/// applies Coriolis as an exact rotation instead of through this tendency.
VectorField rhs_momentum(const State& state, const Diagnosed& diag, const Params& params,
                         const Grid& grid, const ops::AdvectOptions& options = {});
/// -full_advect(v, T) + (bP/p)(1 + a q) W(v) + Q1
ScalarField rhs_temperature(const State& state, const Diagnosed& diag, const Forcing& forcing,
                            const Params& params, const Grid& grid,
                            const ops::AdvectOptions& options = {});
/// -full_advect(v, q) + Q2
ScalarField rhs_moisture(const State& state, const Diagnosed& diag, const Forcing& forcing,
                         const Params& params, const Grid& grid,
                         const ops::AdvectOptions& options = {});

/// -(f/R0) k x v
VectorField coriolis_tendency(const VectorField& v, const Params& params, const Grid& grid);
/// Exact rotation of each horizontal vector by the angle (f/R0) dt.
void rotate_coriolis(VectorField& v, double dt, const Params& params, const Grid& grid);

enum class FieldKind { velocity, temperature, moisture };

/// Neumann at both faces for velocity; Robin(alpha_s or beta_s) at xi = 1 for T, q.
ops::BoundaryCondition boundary_for(FieldKind kind, const Params& params);
/// Ghost-augmented field (n_xi + 2 levels).
ScalarField apply_boundary(const ScalarField& field, FieldKind kind, const Params& params,
                           const Grid& grid);
VectorField apply_boundary(const VectorField& field, const Params& params, const Grid& grid);

}  // namespace mpe
