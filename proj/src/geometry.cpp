#include "mpe/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mpe/errors.hpp"

namespace mpe {

void Params::validate() const {
  const std::pair<const char*, double> positive[] = {
      {"params.re1", re1}, {"params.re2", re2}, {"params.rt1", rt1},
      {"params.rt2", rt2}, {"params.rq1", rq1}, {"params.rq2", rq2},
      {"params.r0", r0},   {"params.a", a},     {"params.b", b},
      {"params.p_cap", p_cap}, {"params.p0", p0},
      {"params.alpha_s", alpha_s}, {"params.beta_s", beta_s}};
  for (const auto& [key, value] : positive) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ValidationError(key, "must be finite and strictly positive");
    }
  }
  if (!(p0 < p_cap)) throw ValidationError("params.p0", "must be smaller than params.p_cap");
}

Grid build_grid(int n_theta, int n_phi, int n_xi, int polar_filter_band) {
  if (n_theta < 4) throw InvalidResolution("n_theta must be >= 4, got " + std::to_string(n_theta));
  if (n_phi < 4 || n_phi % 2 != 0) {
    throw InvalidResolution("n_phi must be even and >= 4, got " + std::to_string(n_phi));
  }
  if (n_xi < 2) throw InvalidResolution("n_xi must be >= 2, got " + std::to_string(n_xi));
  if (polar_filter_band < kAutoFilterBand || polar_filter_band > n_theta / 2) {
    throw InvalidResolution("polar_filter_band out of range: " + std::to_string(polar_filter_band));
  }

  constexpr double pi = std::numbers::pi;
  Grid g;
  g.n_theta = n_theta;
  g.n_phi = n_phi;
  g.n_xi = n_xi;
  g.d_theta = pi / n_theta;
  g.d_phi = 2.0 * pi / n_phi;
  g.d_xi = 1.0 / n_xi;

  g.theta_centers.resize(n_theta);
  g.cot_theta.resize(n_theta);
  std::vector<double> raw(n_theta);
  double raw_area = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = (i + 0.5) * g.d_theta;
    g.theta_centers[i] = theta;
    g.cot_theta[i] = std::cos(theta) / std::sin(theta);
    raw[i] = std::sin(theta) * g.d_theta * g.d_phi;
    raw_area += raw[i];
  }
  raw_area *= n_phi;
  const double normalise = 4.0 * pi / raw_area;
  g.metric_sin.resize(n_theta);
  g.cell_weights.resize(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    g.cell_weights[i] = raw[i] * normalise;
    g.metric_sin[i] = std::sin(g.theta_centers[i]) * normalise;
  }

  g.face_sin.resize(n_theta + 1);
  for (int i = 0; i <= n_theta; ++i) g.face_sin[i] = std::sin(i * g.d_theta);
  g.face_sin.front() = 0.0;
  g.face_sin.back() = 0.0;

  g.phi_centers.resize(n_phi);
  for (int j = 0; j < n_phi; ++j) g.phi_centers[j] = (j + 0.5) * g.d_phi;

  g.xi_centers.resize(n_xi);
  g.xi_faces.resize(n_xi + 1);
  for (int k = 0; k < n_xi; ++k) g.xi_centers[k] = (k + 0.5) / n_xi;
  for (int k = 0; k <= n_xi; ++k) g.xi_faces[k] = static_cast<double>(k) / n_xi;

  if (polar_filter_band == kAutoFilterBand) {
    const double cut = pi / 6.0;
    int band = 0;
    while (band < n_theta / 2 && g.theta_centers[band] < cut) ++band;
    g.polar_filter_band = band;
    g.filter_sine = std::sin(cut);
  } else {
    g.polar_filter_band = polar_filter_band;
    g.filter_sine = polar_filter_band > 0 ? std::sin(polar_filter_band * g.d_theta) : 1.0;
  }
  return g;
}

double pressure_of_xi(double xi, const Params& params) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw OutOfRange("xi outside [0, 1]: " + std::to_string(xi));
  return (params.p_cap - params.p0) * xi + params.p0;
}

double coriolis(double theta) { return 2.0 * std::cos(theta); }

void require_shape(const ScalarField& field, const Grid& grid, int n_lev) {
  if (field.n_theta() != grid.n_theta || field.n_phi() != grid.n_phi || field.n_lev() != n_lev) {
    throw ShapeMismatch("expected " + std::to_string(grid.n_theta) + "x" +
                        std::to_string(grid.n_phi) + "x" + std::to_string(n_lev) + ", got " +
                        std::to_string(field.n_theta()) + "x" + std::to_string(field.n_phi()) +
                        "x" + std::to_string(field.n_lev()));
  }
}

void require_shape(const VectorField& field, const Grid& grid, int n_lev) {
  require_shape(field.theta, grid, n_lev);
  require_shape(field.phi, grid, n_lev);
}

double integrate_level(const ScalarField& field, int k, const Grid& grid) {
  if (field.n_theta() != grid.n_theta || field.n_phi() != grid.n_phi || k < 0 ||
      k >= field.n_lev()) {
    throw ShapeMismatch("integrate_level: field does not match grid");
  }
  double total = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) row += field(i, j, k);
    total += grid.cell_weights[i] * row;
  }
  return total;
}

double integrate_sphere(const ScalarField& field, const Grid& grid) {
  require_shape(field, grid, 1);
  return integrate_level(field, 0, grid);
}

double integrate_omega(const ScalarField& field, const Grid& grid) {
  require_shape(field, grid, grid.n_xi);
  double total = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (double x : field.column(i, j)) row += x;
    }
    total += grid.cell_weights[i] * row;
  }
  return total * grid.d_xi;
}

double inner_omega(const ScalarField& a, const ScalarField& b, const Grid& grid) {
  require_shape(a, grid, grid.n_xi);
  require_shape(b, grid, grid.n_xi);
  double total = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto ca = a.column(i, j);
      const auto cb = b.column(i, j);
      for (int k = 0; k < grid.n_xi; ++k) row += ca[k] * cb[k];
    }
    total += grid.cell_weights[i] * row;
  }
  return total * grid.d_xi;
}

double inner_omega(const VectorField& a, const VectorField& b, const Grid& grid) {
  return inner_omega(a.theta, b.theta, grid) + inner_omega(a.phi, b.phi, grid);
}

double inner_sphere(const ScalarField& a, const ScalarField& b, const Grid& grid, int k) {
  if (!a.same_shape(b) || a.n_theta() != grid.n_theta || a.n_phi() != grid.n_phi || k < 0 ||
      k >= a.n_lev()) {
    throw ShapeMismatch("inner_sphere: field does not match grid");
  }
  double total = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) row += a(i, j, k) * b(i, j, k);
    total += grid.cell_weights[i] * row;
  }
  return total;
}

double inner_sphere(const VectorField& a, const VectorField& b, const Grid& grid, int k) {
  return inner_sphere(a.theta, b.theta, grid, k) + inner_sphere(a.phi, b.phi, grid, k);
}

}  // namespace mpe
