#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpe/errors.hpp"
#include "mpe/harness.hpp"
#include "mpe/operators.hpp"

namespace mpe {

namespace {

constexpr double kPi = std::numbers::pi;

struct Point {
  double x, y, z;
};

Point cartesian(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Tangential (e_theta, e_phi) components of a Cartesian vector at (theta, phi).
std::pair<double, double> tangent(const double w[3], double theta, double phi) {
  const double et = w[0] * std::cos(theta) * std::cos(phi) + w[1] * std::cos(theta) * std::sin(phi) -
                    w[2] * std::sin(theta);
  const double ep = -w[0] * std::sin(phi) + w[1] * std::cos(phi);
  return {et, ep};
}

void normalise(ScalarField& f, double amplitude) {
  const double m = f.max_abs();
  if (m > 0.0) f *= amplitude / m;
}

void normalise(VectorField& f, double amplitude) {
  const double m = f.max_norm();
  if (m > 0.0) f *= amplitude / m;
}

ScalarField snapshot_field(const std::string& path, SourceSlot slot, const Grid& grid) {
  Snapshot snap = read_snapshot(path);
  if (snap.n_theta != grid.n_theta || snap.n_phi != grid.n_phi || snap.n_xi != grid.n_xi) {
    throw ShapeMismatch("snapshot '" + path + "' does not match the grid");
  }
  return slot == SourceSlot::heat ? std::move(snap.state.T) : std::move(snap.state.q);
}

}  // namespace

ScalarField forcing_profile(const ForcingSpec& spec, SourceSlot slot, const Grid& grid) {
  ScalarField out = grid.scalar();
  if (spec.profile == "zero") return out;
  if (spec.profile == "snapshot") return snapshot_field(spec.snapshot, slot, grid);
  for (int i = 0; i < grid.n_theta; ++i) {
    const double theta = grid.theta_centers[i];
    const double lat = 90.0 - theta * 180.0 / kPi;
    for (int j = 0; j < grid.n_phi; ++j) {
      double value = 0.0;
      if (spec.profile == "constant") {
        value = spec.amplitude;
      } else if (spec.profile == "zonal_band") {
        const double d = (lat - spec.center) / spec.width;
        value = spec.amplitude * std::exp(-d * d);
      } else if (spec.profile == "harmonic_bump") {
        value = std::assoc_legendre(spec.l, spec.m, std::cos(theta)) * std::cos(spec.m * grid.phi_centers[j]);
      } else {
        throw ValidationError("profile", "unknown forcing profile '" + spec.profile + "'");
      }
      for (int k = 0; k < grid.n_xi; ++k) out(i, j, k) = value;
    }
  }
  if (spec.profile == "harmonic_bump") normalise(out, std::abs(spec.amplitude));
  if (spec.profile == "harmonic_bump" && spec.amplitude < 0.0) out *= -1.0;
  return out;
}

Forcing make_forcing(const Config& cfg, const Grid& grid) {
  return {forcing_profile(cfg.q1, SourceSlot::heat, grid), forcing_profile(cfg.q2, SourceSlot::moisture, grid)};
}

ScalarField random_smooth_scalar(Random& rng, double amplitude, const Grid& grid) {
  // Quadratic polynomial in (x, y, z) for each of three vertical cosine modes.
  double c[3][10];
  for (auto& mode : c) {
    for (double& x : mode) x = rng.uniform();
  }
  ScalarField out = grid.scalar();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const Point p = cartesian(grid.theta_centers[i], grid.phi_centers[j]);
      const double basis[10] = {1.0, p.x, p.y, p.z, p.x * p.x, p.y * p.y, p.z * p.z, p.x * p.y, p.y * p.z, p.z * p.x};
      double h[3];
      for (int n = 0; n < 3; ++n) {
        h[n] = 0.0;
        for (int b = 0; b < 10; ++b) h[n] += c[n][b] * basis[b];
      }
      for (int k = 0; k < grid.n_xi; ++k) {
        const double xi = grid.xi_centers[k];
        out(i, j, k) = h[0] + h[1] * std::cos(kPi * xi) + h[2] * std::cos(2.0 * kPi * xi);
      }
    }
  }
  normalise(out, amplitude);
  return out;
}

VectorField random_smooth_vector(Random& rng, double amplitude, const Grid& grid) {
  // Affine Cartesian field A X + b per vertical mode, projected onto the sphere.
  double a[3][3][3], b[3][3];
  for (int n = 0; n < 3; ++n) {
    for (auto& row : a[n]) {
      for (double& x : row) x = rng.uniform();
    }
    for (double& x : b[n]) x = rng.uniform();
  }
  VectorField out = grid.vector();
  for (int i = 0; i < grid.n_theta; ++i) {
    const double theta = grid.theta_centers[i];
    for (int j = 0; j < grid.n_phi; ++j) {
      const double phi = grid.phi_centers[j];
      const Point p = cartesian(theta, phi);
      const double X[3] = {p.x, p.y, p.z};
      std::pair<double, double> t[3];
      for (int n = 0; n < 3; ++n) {
        double w[3];
        for (int r = 0; r < 3; ++r) w[r] = b[n][r] + a[n][r][0] * X[0] + a[n][r][1] * X[1] + a[n][r][2] * X[2];
        t[n] = tangent(w, theta, phi);
      }
      for (int k = 0; k < grid.n_xi; ++k) {
        const double xi = grid.xi_centers[k];
        const double c1 = std::cos(kPi * xi), c2 = std::cos(2.0 * kPi * xi);
        out.theta(i, j, k) = t[0].first + c1 * t[1].first + c2 * t[2].first;
        out.phi(i, j, k) = t[0].second + c1 * t[1].second + c2 * t[2].second;
      }
    }
  }
  normalise(out, amplitude);
  return out;
}

State initial_state(const InitialSpec& spec, double scale, const Grid& grid, const StepConfig& step) {
  State s = State::zero(grid);
  const double amp = spec.amplitude * scale;
  if (spec.profile == "rest") return s;
  if (spec.profile == "snapshot") {
    Snapshot snap = read_snapshot(spec.snapshot);
    if (snap.n_theta != grid.n_theta || snap.n_phi != grid.n_phi || snap.n_xi != grid.n_xi) {
      throw ShapeMismatch("initial snapshot '" + spec.snapshot + "' does not match the grid");
    }
    s = std::move(snap.state);
    if (scale != 1.0) {
      s.v *= scale;
      s.T *= scale;
      s.q *= scale;
    }
    return s;
  }
  if (spec.profile == "zonal_jet") {
    for (int i = 0; i < grid.n_theta; ++i) {
      const double sj = std::sin(2.0 * grid.theta_centers[i]);
      for (int j = 0; j < grid.n_phi; ++j) {
        for (int k = 0; k < grid.n_xi; ++k) s.v.phi(i, j, k) = amp * sj * sj;
      }
    }
    return s;
  }
  if (spec.profile == "random") {
    Random rng(spec.seed);
    const VectorField v = random_smooth_vector(rng, amp, grid);
    s.T = random_smooth_scalar(rng, amp, grid);
    s.q = random_smooth_scalar(rng, amp, grid);
    EllipticWorkspace ws(grid);
    s.v = barotropic_projection(v, 1.0, ws, step).v;
    return s;
  }
  throw ValidationError("initial.profile", "unknown profile '" + spec.profile + "'");
}

VectorField twin_perturbation_shape(const Grid& grid) {
  VectorField out = grid.vector();
  for (int i = 0; i < grid.n_theta; ++i) {
    const double theta = grid.theta_centers[i];
    for (int j = 0; j < grid.n_phi; ++j) {
      const double phi = grid.phi_centers[j];
      const Point p = cartesian(theta, phi);
      const double w[3] = {-p.y, p.x + 0.5 * p.z, 0.3 * p.x * p.y};
      const auto [et, ep] = tangent(w, theta, phi);
      for (int k = 0; k < grid.n_xi; ++k) {
        const double c = std::cos(kPi * grid.xi_centers[k]);
        out.theta(i, j, k) = c * et;
        out.phi(i, j, k) = c * ep;
      }
    }
  }
  out = ops::fluctuation(out, grid);
  normalise(out, 1.0);
  return out;
}

}  // namespace mpe
