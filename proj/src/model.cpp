#include "mpe/model.hpp"

#include <cmath>
#include <numbers>

#include "mpe/errors.hpp"

namespace mpe {

namespace {

ScalarField recentred(const ScalarField& phi_s, const Grid& grid) {
  require_shape(phi_s, grid, 1);
  const double mean = integrate_sphere(phi_s, grid) / (4.0 * std::numbers::pi);
  ScalarField out = phi_s;
  for (double& x : out.values()) x -= mean;
  return out;
}

}  // namespace

Diagnosed diagnose(const State& state, const Params& params, const Grid& grid,
                   const ScalarField* phi_s) {
  Diagnosed d;
  d.Phi_s = phi_s ? recentred(*phi_s, grid) : grid.surface();
  d.W = ops::vertical_velocity(state.v, grid);
  d.Phi = ops::hydrostatic_phi(state.T, state.q, d.Phi_s, params, grid);
  return d;
}

Tendencies inviscid_tendencies(const VectorField& transport, const State& operand,
                               const ScalarField& q_coef, const Params& params, const Grid& grid,
                               const ops::AdvectOptions& options) {
  Tendencies out;
  out.v = ops::full_advect(transport, operand.v, grid, options);
  out.v += ops::pressure_gradient(operand.T, q_coef, params, grid);
  out.v *= -1.0;

  out.T = ops::buoyancy_coupling(operand.v, q_coef, params, grid);
  out.T -= ops::full_advect(transport, operand.T, grid, options);

  out.q = ops::full_advect(transport, operand.q, grid, options);
  out.q *= -1.0;
  return out;
}

VectorField rhs_momentum(const State& state, const Diagnosed& diag, const Params& params,
                         const Grid& grid, const ops::AdvectOptions& options) {
  require_shape(diag.Phi_s, grid, 1);
  VectorField out = ops::full_advect(state.v, state.v, grid, options);
  out += ops::pressure_gradient(state.T, state.q, params, grid);
  const VectorField gs = ops::h_grad(diag.Phi_s, grid);
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < grid.n_xi; ++k) {
        out.theta(i, j, k) += gs.theta(i, j, 0);
        out.phi(i, j, k) += gs.phi(i, j, 0);
      }
    }
  }
  out *= -1.0;
  out += coriolis_tendency(state.v, params, grid);
  return out;
}

ScalarField rhs_temperature(const State& state, const Diagnosed& /*diag*/, const Forcing& forcing,
                            const Params& params, const Grid& grid,
                            const ops::AdvectOptions& options) {
  require_shape(forcing.Q1, grid, grid.n_xi);
  ScalarField out = ops::buoyancy_coupling(state.v, state.q, params, grid);
  out -= ops::full_advect(state.v, state.T, grid, options);
  out += forcing.Q1;
  return out;
}

ScalarField rhs_moisture(const State& state, const Diagnosed& /*diag*/, const Forcing& forcing,
                         const Params& /*params*/, const Grid& grid,
                         const ops::AdvectOptions& options) {
  require_shape(forcing.Q2, grid, grid.n_xi);
  ScalarField out = ops::full_advect(state.v, state.q, grid, options);
  out *= -1.0;
  out += forcing.Q2;
  return out;
}

VectorField coriolis_tendency(const VectorField& v, const Params& params, const Grid& grid) {
  require_shape(v, grid, v.n_lev());
  VectorField out(v.n_theta(), v.n_phi(), v.n_lev());
  for (int i = 0; i < grid.n_theta; ++i) {
    const double f = coriolis(grid.theta_centers[i]) / params.r0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < v.n_lev(); ++k) {
        out.theta(i, j, k) = f * v.phi(i, j, k);
        out.phi(i, j, k) = -f * v.theta(i, j, k);
      }
    }
  }
  return out;
}

void rotate_coriolis(VectorField& v, double dt, const Params& params, const Grid& grid) {
  require_shape(v, grid, v.n_lev());
  for (int i = 0; i < grid.n_theta; ++i) {
    const double angle = coriolis(grid.theta_centers[i]) / params.r0 * dt;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < v.n_lev(); ++k) {
        const double a = v.theta(i, j, k);
        const double b = v.phi(i, j, k);
        v.theta(i, j, k) = c * a + s * b;
        v.phi(i, j, k) = c * b - s * a;
      }
    }
  }
}

ops::BoundaryCondition boundary_for(FieldKind kind, const Params& params) {
  switch (kind) {
    case FieldKind::velocity:
      return ops::BoundaryCondition::neumann();
    case FieldKind::temperature:
      return ops::BoundaryCondition::robin(params.alpha_s);
    case FieldKind::moisture:
      return ops::BoundaryCondition::robin(params.beta_s);
  }
  throw UnknownBC("unknown field kind");
}

ScalarField apply_boundary(const ScalarField& field, FieldKind kind, const Params& params,
                           const Grid& grid) {
  return ops::with_ghosts(field, boundary_for(kind, params), grid);
}

VectorField apply_boundary(const VectorField& field, const Params& params, const Grid& grid) {
  const auto bc = boundary_for(FieldKind::velocity, params);
  return {ops::with_ghosts(field.theta, bc, grid), ops::with_ghosts(field.phi, bc, grid)};
}

}  // namespace mpe
