#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mpe/errors.hpp"
#include "mpe/harness.hpp"
#include "mpe/operators.hpp"

namespace mpe {

namespace {

ScalarField random_field(Random& rng, int nt, int np, int nl) {
  ScalarField f(nt, np, nl);
  for (double& x : f.values()) x = rng.uniform();
  return f;
}

VectorField random_vector(Random& rng, int nt, int np, int nl) {
  ScalarField a = random_field(rng, nt, np, nl);
  ScalarField b = random_field(rng, nt, np, nl);
  return {std::move(a), std::move(b)};
}

/// Weighted sum and weighted absolute sum of pointwise products.
struct Pairing {
  double sum = 0.0;
  double abs = 0.0;
};

Pairing pair(const ScalarField& a, const ScalarField& b, const Grid& grid, double level_weight) {
  Pairing p;
  const int nl = a.n_lev();
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0, row_abs = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < nl; ++k) {
        const double x = a(i, j, k) * b(i, j, k);
        row += x;
        row_abs += std::abs(x);
      }
    }
    p.sum += grid.cell_weights[i] * level_weight * row;
    p.abs += grid.cell_weights[i] * level_weight * row_abs;
  }
  return p;
}

Pairing pair(const VectorField& a, const VectorField& b, const Grid& grid, double level_weight) {
  const Pairing t = pair(a.theta, b.theta, grid, level_weight);
  const Pairing f = pair(a.phi, b.phi, grid, level_weight);
  return {t.sum + f.sum, t.abs + f.abs};
}

double relative(double residual, double scale) {
  return scale > 0.0 ? std::abs(residual) / scale : std::abs(residual);
}

}  // namespace

VectorField random_constrained_velocity(Random& rng, const Grid& grid) {
  VectorField v = ops::fluctuation(random_vector(rng, grid.n_theta, grid.n_phi, grid.n_xi), grid);
  for (int i = 0; i < grid.n_theta; ++i) {
    const double zonal = rng.uniform();
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < grid.n_xi; ++k) v.phi(i, j, k) += zonal;
    }
  }
  return v;
}

bool VerifyReport::ok() const {
  return std::all_of(identities.begin(), identities.end(), [](const IdentityResult& r) { return r.ok(); });
}

std::string VerifyReport::text() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "operator identities on %dx%dx%d, seed %llu, %d draws\n", n_theta, n_phi, n_xi,
                static_cast<unsigned long long>(seed), draws);
  std::string out = buf;
  for (const auto& r : identities) {
    std::snprintf(buf, sizeof buf, "  %-40s %10.3e  (limit %.0e)  %s\n", r.name.c_str(), r.max_residual,
                  r.threshold, r.ok() ? "ok" : "FAIL");
    out += buf;
  }
  out += ok() ? "all identities hold\n" : "identity battery FAILED\n";
  return out;
}

VerifyReport verify_operators(std::uint64_t seed, int n_theta, int n_phi, int n_xi, int draws) {
  const Grid grid = build_grid(n_theta, n_phi, n_xi);
  const Params params;
  Random rng(seed);
  VerifyReport rep;
  rep.n_theta = n_theta;
  rep.n_phi = n_phi;
  rep.n_xi = n_xi;
  rep.seed = seed;
  rep.draws = draws;
  const char* names[] = {
      "gradient-divergence adjoint",
      "divergence has zero mean",
      "directional derivative plus divergence",
      "vector Laplacian energy form",
      "momentum transport neutrality",
      "temperature transport neutrality",
      "moisture transport neutrality",
      "pressure-buoyancy duality",
  };
  for (const char* n : names) rep.identities.push_back({n, 0.0, 1e-12});
  const auto note = [&](int id, double r) { rep.identities[id].max_residual = std::max(rep.identities[id].max_residual, r); };

  const double dxi = grid.d_xi;
  for (int d = 0; d < draws; ++d) {
    // Single-level identities on the sphere.
    const VectorField u = random_vector(rng, n_theta, n_phi, 1);
    const ScalarField p = random_field(rng, n_theta, n_phi, 1);
    const ScalarField div_u = ops::h_div(u, grid);
    const VectorField grad_p = ops::h_grad(p, grid);
    {
      const Pairing a = pair(p, div_u, grid, 1.0);
      const Pairing b = pair(grad_p, u, grid, 1.0);
      note(0, relative(a.sum + b.sum, a.abs + b.abs));
      const ScalarField one(n_theta, n_phi, 1, 1.0);
      const Pairing m = pair(one, div_u, grid, 1.0);
      note(1, relative(m.sum, m.abs));
    }
    {
      const ScalarField h = random_field(rng, n_theta, n_phi, 1);
      const VectorField gh = ops::h_grad(h, grid);
      const Pairing a = pair(u, gh, grid, 1.0);
      const Pairing b = pair(h, div_u, grid, 1.0);
      VectorField hu = u;
      for (std::size_t n = 0; n < h.size(); ++n) {
        hu.theta.values()[n] *= h.values()[n];
        hu.phi.values()[n] *= h.values()[n];
      }
      const ScalarField one(n_theta, n_phi, 1, 1.0);
      const Pairing c = pair(one, ops::h_div(hu, grid), grid, 1.0);
      const double scale = a.abs + b.abs + c.abs;
      note(2, std::max(relative(a.sum + b.sum, scale), relative(c.sum, scale)));
    }
    // Volume identities.
    const VectorField w = random_vector(rng, n_theta, n_phi, n_xi);
    const VectorField w1 = random_vector(rng, n_theta, n_phi, n_xi);
    {
      VectorField neg_lap = ops::laplace_vector(w, grid);
      neg_lap *= -1.0;
      const Pairing lhs = pair(neg_lap, w1, grid, dxi);
      const Pairing ct = pair(ops::covariant_theta(w, grid), ops::covariant_theta(w1, grid), grid, dxi);
      const Pairing cp = pair(ops::covariant_phi(w, grid), ops::covariant_phi(w1, grid), grid, dxi);
      const Pairing zero = pair(w, w1, grid, dxi);
      note(3, relative(lhs.sum - ct.sum - cp.sum - zero.sum, lhs.abs + ct.abs + cp.abs + zero.abs));
    }
    const VectorField v = random_constrained_velocity(rng, grid);
    const ScalarField T = random_field(rng, n_theta, n_phi, n_xi);
    const ScalarField q = random_field(rng, n_theta, n_phi, n_xi);
    {
      const Pairing a = pair(ops::full_advect(v, w, grid), w, grid, dxi);
      note(4, relative(a.sum, a.abs));
      const Pairing b = pair(ops::full_advect(v, T, grid), T, grid, dxi);
      note(5, relative(b.sum, b.abs));
      const Pairing c = pair(ops::full_advect(v, q, grid), q, grid, dxi);
      note(6, relative(c.sum, c.abs));
    }
    {
      const Pairing a = pair(ops::pressure_gradient(T, q, params, grid), v, grid, dxi);
      const Pairing b = pair(ops::buoyancy_coupling(v, q, params, grid), T, grid, dxi);
      note(7, relative(a.sum - b.sum, a.abs + b.abs));
    }
  }
  return rep;
}

}  // namespace mpe
