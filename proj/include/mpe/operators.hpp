#pragma once

#include "mpe/field.hpp"
#include "mpe/geometry.hpp"

// Discrete horizontal and vertical operators on the shell. Every operator
// acts level by level on fields with any number of levels, except the
// vertical ones which require n_xi (centres) or n_xi + 1 (faces) levels.
//
// The construction is mimetic: h_div is a flux-form divergence with
// face-averaged fluxes and zero flux through both poles, and every other
// horizontal operator is built from h_div and its quadrature adjoint h_grad.
// The integration-by-parts identities therefore hold to round-off.

namespace mpe::ops {

/// div u = (1/sin) [d(u_theta sin)/dtheta + d(u_phi)/dphi]; sum of weights * div u is 0.
ScalarField h_div(const VectorField& u, const Grid& grid);

/// Negative adjoint of h_div: <s, div u> = -<grad s, u> on every level.
VectorField h_grad(const ScalarField& s, const Grid& grid);

/// theta-part and phi-part of h_div applied to a single component.
ScalarField div_theta_part(const ScalarField& u_theta, const Grid& grid);
ScalarField div_phi_part(const ScalarField& u_phi, const Grid& grid);
/// Components of h_grad.
ScalarField grad_theta(const ScalarField& s, const Grid& grid);
ScalarField grad_phi(const ScalarField& s, const Grid& grid);

/// Horizontal transport in skew-symmetric form
///   1/2 [v . grad s + div(s v) - s div v],
/// so that sum(weights * (adv + s div v)) = 0 exactly.
ScalarField advect_scalar(const VectorField& v, const ScalarField& s, const Grid& grid);

/// Component-wise skew transport of w plus the metric terms
/// (-v_phi w_phi cot, +v_phi w_theta cot).
VectorField advect_vector(const VectorField& v, const VectorField& w, const Grid& grid);

/// W(v)(xi) = integral from xi to 1 of div v, on the n_xi + 1 vertical faces.
/// The xi = 1 face is exactly zero; the xi = 0 face holds the column constraint residual.
ScalarField vertical_velocity(const VectorField& v, const Grid& grid);

/// Column integral of div v over xi in (0, 1) as a surface field.
ScalarField column_divergence(const VectorField& v, const Grid& grid);

struct AdvectOptions {
  /// Absolute tolerance on max |int_0^1 div v dxi| relative to max |v|.
  double constraint_tol = 1e-10;
  /// Throw ConstraintViolated when the residual exceeds 100 * constraint_tol.
  bool check_constraint = true;
};

/// Horizontal skew transport plus vertical transport W(v) d/dxi in the
/// energy-conserving face form. <full_advect(v, s), s>_Omega vanishes whenever
/// the transport velocity satisfies the column constraint.
ScalarField full_advect(const VectorField& v, const ScalarField& s, const Grid& grid,
                        const AdvectOptions& options = {});
VectorField full_advect(const VectorField& v, const VectorField& w, const Grid& grid,
                        const AdvectOptions& options = {});

/// h_div(h_grad(s)).
ScalarField laplace_scalar(const ScalarField& s, const Grid& grid);

/// Covariant derivatives along e_theta and e_phi of a horizontal vector field.
VectorField covariant_theta(const VectorField& u, const Grid& grid);
VectorField covariant_phi(const VectorField& u, const Grid& grid);

/// Vector Laplacian defined through
///   <-lap u, u1> = <D_theta u, D_theta u1> + <D_phi u, D_phi u1> + <u, u1>.
VectorField laplace_vector(const VectorField& u, const Grid& grid);

/// Per-cell integrals of bP/p over xi, evaluated exactly as
/// bP/(P - p0) * ln(p_lower/p_upper).
struct HydrostaticWeights {
  std::vector<double> full_cell;   ///< over [xi_{k-1/2}, xi_{k+1/2}]
  std::vector<double> lower_half;  ///< over [xi_k, xi_{k+1/2}]
};
HydrostaticWeights hydrostatic_weights(const Grid& grid, const Params& params);

/// Phi = Phi_s + int_xi^1 (bP/p)(1 + a q) T dxi' at cell centres.
/// phi_s is a single-level field.
ScalarField hydrostatic_phi(const ScalarField& T, const ScalarField& q, const ScalarField& phi_s,
                            const Params& params, const Grid& grid);
/// Same quantity on the n_xi + 1 vertical faces.
ScalarField hydrostatic_phi_faces(const ScalarField& T, const ScalarField& q,
                                  const ScalarField& phi_s, const Params& params,
                                  const Grid& grid);

/// Pressure-gradient force int_xi^1 (bP/p) grad[(1 + a q) T] dxi'.
VectorField pressure_gradient(const ScalarField& T, const ScalarField& q, const Params& params,
                              const Grid& grid);

/// (bP/p)(1 + a q) W(v), realised as the exact adjoint of pressure_gradient:
///   <pressure_gradient(T, q), v> = <buoyancy_coupling(v, q), T>.
ScalarField buoyancy_coupling(const VectorField& v, const ScalarField& q, const Params& params,
                              const Grid& grid);

/// Vertical mean (single level) and fluctuation. A single-level input is
/// returned unchanged by vertical_average.
VectorField vertical_average(const VectorField& u, const Grid& grid);
VectorField fluctuation(const VectorField& u, const Grid& grid);
ScalarField vertical_average(const ScalarField& s, const Grid& grid);

/// Vertical boundary closures.
struct BoundaryCondition {
  enum class Kind { neumann, robin_top };
  Kind kind = Kind::neumann;
  double coef = 0.0;  ///< Robin coefficient at xi = 1

  static BoundaryCondition neumann() { return {}; }
  static BoundaryCondition robin(double c) { return {Kind::robin_top, c}; }
};

/// Ghost value above xi = 1 for the given top-cell value.
double top_ghost(double top, const BoundaryCondition& bc, double d_xi);

/// Field with one ghost level below xi = 0 and one above xi = 1 (n_xi + 2 levels).
ScalarField with_ghosts(const ScalarField& s, const BoundaryCondition& bc, const Grid& grid);

/// Centred vertical derivative at cell centres using ghost closure.
ScalarField d_xi(const ScalarField& s, const BoundaryCondition& bc, const Grid& grid);
/// One-sided differences on all n_xi + 1 faces, ghosts included.
ScalarField d_xi_faces(const ScalarField& s, const BoundaryCondition& bc, const Grid& grid);

}  // namespace mpe::ops
