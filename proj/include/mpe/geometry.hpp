#pragma once

#include <vector>

#include "mpe/field.hpp"

namespace mpe {

/// Physical and model constants of the moist primitive equations.
struct Params {
  double re1 = 10.0;  ///< horizontal momentum Reynolds number
  double re2 = 2.0;   ///< vertical momentum Reynolds number
  double rt1 = 10.0;
  double rt2 = 2.0;
  double rq1 = 10.0;
  double rq2 = 2.0;
  double r0 = 1.0;    ///< Rossby number
  double a = 0.618;   ///< moisture-buoyancy coupling
  double b = 0.1;
  double p_cap = 1000.0;  ///< surface pressure scale P
  double p0 = 200.0;      ///< upper-atmosphere pressure
  double alpha_s = 1.0;   ///< Robin coefficient for T at xi = 1
  double beta_s = 1.0;    ///< Robin coefficient for q at xi = 1

  /// Throws ValidationError naming the first offending field.
  void validate() const;

  friend bool operator==(const Params&, const Params&) = default;
};

/// Discrete shell S^2 x (0,1). Colatitude centres sit half a cell away from
/// both poles, so 1/sin(theta) and cot(theta) are finite on every row.
struct Grid {
  int n_theta = 0;
  int n_phi = 0;
  int n_xi = 0;
  double d_theta = 0.0;
  double d_phi = 0.0;
  double d_xi = 0.0;

  std::vector<double> theta_centers;
  std::vector<double> phi_centers;
  std::vector<double> xi_centers;
  std::vector<double> xi_faces;  ///< n_xi + 1 values, xi_faces[0] = 0

  /// Metric sine per row, normalised so that the horizontal weights sum to 4*pi.
  /// Equals the exact spherical cell area divided by d_theta * d_phi.
  std::vector<double> metric_sin;
  /// sin(theta) on the n_theta + 1 colatitude faces; both pole faces are exactly 0.
  std::vector<double> face_sin;
  std::vector<double> cot_theta;
  /// Horizontal quadrature weight of one cell in row i.
  std::vector<double> cell_weights;

  /// Rows at each pole subject to zonal filtering of explicit tendencies.
  int polar_filter_band = 0;
  /// Reference sine of the filter: in-band rows behave as if their zonal
  /// spacing were filter_sine * d_phi.
  double filter_sine = 1.0;

  std::size_t horizontal_size() const noexcept {
    return static_cast<std::size_t>(n_theta) * n_phi;
  }
  /// Vertical quadrature weight (uniform levels).
  double xi_weight() const noexcept { return d_xi; }
  bool in_filter_band(int i) const noexcept {
    return i < polar_filter_band || i >= n_theta - polar_filter_band;
  }

  ScalarField scalar(double fill = 0.0) const { return {n_theta, n_phi, n_xi, fill}; }
  ScalarField surface(double fill = 0.0) const { return {n_theta, n_phi, 1, fill}; }
  ScalarField faces(double fill = 0.0) const { return {n_theta, n_phi, n_xi + 1, fill}; }
  VectorField vector(double fill = 0.0) const { return {n_theta, n_phi, n_xi, fill}; }
};

/// Default polar band: rows whose colatitude lies within 30 degrees of a pole.
inline constexpr int kAutoFilterBand = -1;

/// Requires n_theta >= 4, n_phi >= 4 and even, n_xi >= 2; throws InvalidResolution.
Grid build_grid(int n_theta, int n_phi, int n_xi, int polar_filter_band = kAutoFilterBand);

/// p = (P - p0) * xi + p0; throws OutOfRange outside [0, 1].
double pressure_of_xi(double xi, const Params& params);

/// Coriolis parameter f = 2 cos(theta).
double coriolis(double theta);

/// Weighted sum over one horizontal level. The field must have a single level.
double integrate_sphere(const ScalarField& field, const Grid& grid);
/// Weighted sum over level k of a multi-level field.
double integrate_level(const ScalarField& field, int k, const Grid& grid);
/// Volume quadrature over the shell. The field must have n_xi levels.
double integrate_omega(const ScalarField& field, const Grid& grid);

/// L2(Omega) inner products under the same quadrature.
double inner_omega(const ScalarField& a, const ScalarField& b, const Grid& grid);
double inner_omega(const VectorField& a, const VectorField& b, const Grid& grid);
/// L2(S^2) inner product of two single-level fields, or of level k of two fields.
double inner_sphere(const ScalarField& a, const ScalarField& b, const Grid& grid, int k = 0);
double inner_sphere(const VectorField& a, const VectorField& b, const Grid& grid, int k = 0);

void require_shape(const ScalarField& field, const Grid& grid, int n_lev);
void require_shape(const VectorField& field, const Grid& grid, int n_lev);

}  // namespace mpe
