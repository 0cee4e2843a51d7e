#include <doctest.h>

#include <cmath>
#include <functional>

#include "mpe/errors.hpp"
#include "mpe/operators.hpp"
#include "oracles.hpp"

using namespace mpe;
using namespace mpe::ops;
using oracle::kPi;

namespace {

constexpr double kLo = kPi / 4, kHi = 3 * kPi / 4;

double rel(double residual, double scale) { return std::abs(residual) / std::max(scale, 1e-300); }

// Sum of |a*b| under closed-form areas, the natural size of an inner product.
double abs_dot(const ScalarField& a, const ScalarField& b) {
  ScalarField x = a, y = b;
  for (double& v : x.values()) v = std::abs(v);
  for (double& v : y.values()) v = std::abs(v);
  return oracle::volume_dot(x, y);
}
double abs_dot(const VectorField& a, const VectorField& b) {
  return abs_dot(a.theta, b.theta) + abs_dot(a.phi, b.phi);
}

// Interior error of a discrete operator against an analytic result on grids
// n, 2n, 4n; returns the two observed orders.
std::pair<double, double> orders(
    const std::function<double(const Grid&)>& error, int n = 16) {
  const double e1 = error(build_grid(n, 2 * n, 2));
  const double e2 = error(build_grid(2 * n, 4 * n, 2));
  const double e3 = error(build_grid(4 * n, 8 * n, 2));
  return {oracle::order(e1, e2), oracle::order(e2, e3)};
}

ScalarField difference(const ScalarField& a, const ScalarField& b) { return a - b; }

}  // namespace

TEST_CASE("h_div: zonal flow, zero mean, analytic divergence") {
  const Grid g = build_grid(12, 24, 3);
  SUBCASE("phi-independent zonal flow has zero divergence") {
    const VectorField u(g.scalar(0.0), g.scalar(2.5));
    CHECK(h_div(u, g).max_abs() == 0.0);
  }
  SUBCASE("sphere integral of the divergence vanishes") {
    oracle::Rng rng(11);
    const VectorField u = oracle::random_vector(rng, 12, 24, 3);
    const ScalarField d = h_div(u, g);
    for (int k = 0; k < 3; ++k) {
      double scale = 0.0;
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 24; ++j) scale += oracle::cell_area(i, 12, 24) * std::abs(d(i, j, k));
      CHECK(rel(oracle::sphere_sum(d, k), scale) <= 1e-13);
    }
  }
  SUBCASE("second-order convergence for u = (sin(theta) g(phi), 0)") {
    auto gphi = [](double p) { return std::cos(p) + 0.5 * std::sin(2 * p); };
    const auto [o1, o2] = orders([&](const Grid& gr) {
      const VectorField u(oracle::sample(gr, [&](double t, double p, double) { return std::sin(t) * gphi(p); }),
                          gr.scalar());
      const ScalarField exact =
          oracle::sample(gr, [&](double t, double p, double) { return 2 * std::cos(t) * gphi(p); });
      return oracle::interior_max(difference(h_div(u, gr), exact), gr, kLo, kHi);
    });
    CHECK(o1 >= 1.9);
    CHECK(o2 >= 1.9);
  }
  CHECK_THROWS_AS(h_div(VectorField(5, 24, 3), g), ShapeMismatch);
}

TEST_CASE("h_grad: constants, adjointness, analytic gradient") {
  const Grid g = build_grid(10, 20, 4);
  CHECK(h_grad(g.scalar(3.7), g).theta.max_abs() == 0.0);
  CHECK(h_grad(g.scalar(3.7), g).phi.max_abs() == 0.0);

  oracle::Rng rng(5);
  for (int draw = 0; draw < 20; ++draw) {
    const ScalarField s = oracle::random_field(rng, 10, 20, 4);
    const VectorField u = oracle::random_vector(rng, 10, 20, 4);
    const ScalarField d = h_div(u, g);
    const VectorField gr = h_grad(s, g);
    const double lhs = oracle::volume_dot(s, d), rhs = oracle::volume_dot(gr, u);
    CHECK(rel(lhs + rhs, abs_dot(s, d) + abs_dot(gr, u)) <= 1e-13);
  }

  const auto [o1, o2] = orders([](const Grid& gr) {
    const ScalarField s = oracle::sample(gr, [](double t, double, double) { return std::cos(t); });
    const VectorField d = h_grad(s, gr);
    const ScalarField exact = oracle::sample(gr, [](double t, double, double) { return -std::sin(t); });
    return std::max(oracle::interior_max(difference(d.theta, exact), gr, kLo, kHi),
                    oracle::interior_max(d.phi, gr, kLo, kHi) + 1e-300);
  });
  CHECK(o1 >= 1.9);
  CHECK(o2 >= 1.9);
}

TEST_CASE("advect_scalar: zero velocity, transport identity, solid-body rotation") {
  const Grid g = build_grid(10, 20, 3);
  oracle::Rng rng(21);
  const ScalarField s = oracle::random_field(rng, 10, 20, 3);
  CHECK(advect_scalar(g.vector(), s, g).max_abs() == 0.0);

  for (int draw = 0; draw < 20; ++draw) {
    const VectorField v = oracle::random_vector(rng, 10, 20, 3);
    const ScalarField h = oracle::random_field(rng, 10, 20, 3);
    const ScalarField a = advect_scalar(v, h, g);
    const ScalarField d = h_div(v, g);
    for (int k = 0; k < 3; ++k) {
      double sum = 0.0, mag = 0.0;
      for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 20; ++j) {
          const double w = oracle::cell_area(i, 10, 20);
          sum += w * (a(i, j, k) + h(i, j, k) * d(i, j, k));
          mag += w * (std::abs(a(i, j, k)) + std::abs(h(i, j, k) * d(i, j, k)));
        }
      }
      CHECK(rel(sum, mag) <= 1e-13);
    }
  }

  const auto [o1, o2] = orders([](const Grid& gr) {
    const VectorField v(gr.scalar(), oracle::sample(gr, [](double t, double, double) { return std::sin(t); }));
    const ScalarField s =
        oracle::sample(gr, [](double, double p, double) { return std::sin(2 * p) + std::cos(p); });
    const ScalarField exact =
        oracle::sample(gr, [](double, double p, double) { return 2 * std::cos(2 * p) - std::sin(p); });
    return oracle::interior_max(difference(advect_scalar(v, s, gr), exact), gr, kLo, kHi);
  });
  CHECK(o1 >= 1.9);
  CHECK(o2 >= 1.9);
}

TEST_CASE("advect_vector: zero velocity and the zonal metric term") {
  const Grid g = build_grid(12, 16, 2);
  oracle::Rng rng(3);
  const VectorField w = oracle::random_vector(rng, 12, 16, 2);
  const VectorField z = advect_vector(g.vector(), w, g);
  CHECK(z.theta.max_abs() == 0.0);
  CHECK(z.phi.max_abs() == 0.0);

  auto V = [](double t) { return std::sin(t) + 0.3 * std::cos(3 * t); };
  const VectorField v(g.scalar(), oracle::sample(g, [&](double t, double, double) { return V(t); }));
  const VectorField a = advect_vector(v, v, g);
  for (int i = 0; i < g.n_theta; ++i) {
    const double vt = v.phi(i, 0, 0);
    const double expected = -vt * vt * g.cot_theta[i];
    for (int j = 0; j < g.n_phi; ++j) {
      for (int k = 0; k < 2; ++k) {
        CHECK(a.theta(i, j, k) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(std::abs(a.phi(i, j, k)) <= 1e-15);
      }
    }
  }
}

TEST_CASE("vertical_velocity: constant integrand, surface face, constraint") {
  const Grid g = build_grid(8, 16, 5);
  oracle::Rng rng(8);

  // xi-independent velocity: the divergence is the same on every level.
  const VectorField u1 = oracle::random_vector(rng, 8, 16, 1);
  VectorField u = g.vector();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 5; ++k) {
        u.theta(i, j, k) = u1.theta(i, j, 0);
        u.phi(i, j, k) = u1.phi(i, j, 0);
      }
  const ScalarField d = h_div(u1, g);
  const ScalarField W = vertical_velocity(u, g);
  REQUIRE(W.n_lev() == 6);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 16; ++j) {
      for (int f = 0; f <= 5; ++f) {
        CHECK(std::abs(W(i, j, f) - (1.0 - g.xi_faces[f]) * d(i, j, 0)) <=
              1e-14 * (1.0 + std::abs(d(i, j, 0))));
      }
      CHECK(W(i, j, 5) == 0.0);
    }

  const VectorField c = oracle::constrained_velocity(rng, 8, 16, 5);
  const ScalarField Wc = vertical_velocity(c, g);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 16; ++j) {
      CHECK(std::abs(Wc(i, j, 0)) <= 1e-13);
      CHECK(Wc(i, j, 5) == 0.0);
    }
}

TEST_CASE("full_advect: zero velocity, energy neutrality, reduction, constraint check") {
  const Grid g = build_grid(10, 20, 6);
  oracle::Rng rng(44);
  const ScalarField s = oracle::random_field(rng, 10, 20, 6);
  CHECK(full_advect(g.vector(), s, g).max_abs() == 0.0);

  for (int draw = 0; draw < 20; ++draw) {
    const VectorField v = oracle::constrained_velocity(rng, 10, 20, 6);
    const ScalarField h = oracle::random_field(rng, 10, 20, 6);
    const VectorField w = oracle::random_vector(rng, 10, 20, 6);
    const ScalarField a = full_advect(v, h, g);
    const VectorField b = full_advect(v, w, g);
    CHECK(rel(oracle::volume_dot(a, h), abs_dot(a, h)) <= 1e-12);
    CHECK(rel(oracle::volume_dot(b, w), abs_dot(b, w)) <= 1e-12);
  }

  SUBCASE("xi-independent inputs reduce to horizontal transport") {
    // A theta-dependent zonal flow is divergence-free, so W vanishes identically.
    const VectorField v(g.scalar(),
                        oracle::sample(g, [](double t, double, double) { return std::sin(t) * (1 + std::cos(t)); }));
    const ScalarField one = oracle::random_field(rng, 10, 20, 1);
    ScalarField h = g.scalar();
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 20; ++j)
        for (int k = 0; k < 6; ++k) h(i, j, k) = one(i, j, 0);
    CHECK(full_advect(v, h, g) == advect_scalar(v, h, g));
  }

  SUBCASE("a velocity violating the column constraint is rejected") {
    const VectorField v = oracle::random_vector(rng, 10, 20, 6);
    CHECK_THROWS_AS(full_advect(v, s, g), ConstraintViolated);
    CHECK_NOTHROW(full_advect(v, s, g, AdvectOptions{1e-10, false}));
  }
}

TEST_CASE("laplace_scalar: constants, symmetry, l = 1 eigenfunction") {
  const Grid g = build_grid(10, 20, 2);
  CHECK(laplace_scalar(g.scalar(-4.0), g).max_abs() == 0.0);

  oracle::Rng rng(9);
  for (int draw = 0; draw < 20; ++draw) {
    const ScalarField s = oracle::random_field(rng, 10, 20, 2);
    const ScalarField t = oracle::random_field(rng, 10, 20, 2);
    const ScalarField ls = laplace_scalar(s, g);
    const VectorField gs = h_grad(s, g), gt = h_grad(t, g);
    CHECK(rel(oracle::volume_dot(ls, t) + oracle::volume_dot(gs, gt), abs_dot(ls, t) + abs_dot(gs, gt)) <= 1e-13);
  }

  const auto [o1, o2] = orders([](const Grid& gr) {
    const ScalarField s = oracle::sample(gr, [](double t, double, double) { return std::cos(t); });
    const ScalarField exact = oracle::sample(gr, [](double t, double, double) { return -2 * std::cos(t); });
    return oracle::interior_max(difference(laplace_scalar(s, gr), exact), gr, kLo, kHi);
  });
  CHECK(o1 >= 1.9);
  CHECK(o2 >= 1.9);
}

TEST_CASE("laplace_vector: zero, energy identity, solid-body rotation") {
  const Grid g = build_grid(10, 20, 3);
  const VectorField z = laplace_vector(g.vector(), g);
  CHECK(z.theta.max_abs() == 0.0);
  CHECK(z.phi.max_abs() == 0.0);

  oracle::Rng rng(77);
  for (int draw = 0; draw < 20; ++draw) {
    const VectorField u = oracle::random_vector(rng, 10, 20, 3);
    const VectorField u1 = oracle::random_vector(rng, 10, 20, 3);
    const VectorField lu = laplace_vector(u, g);
    const VectorField ct = covariant_theta(u, g), ct1 = covariant_theta(u1, g);
    const VectorField cp = covariant_phi(u, g), cp1 = covariant_phi(u1, g);
    const double lhs = -oracle::volume_dot(lu, u1);
    const double rhs = oracle::volume_dot(ct, ct1) + oracle::volume_dot(cp, cp1) + oracle::volume_dot(u, u1);
    const double scale = abs_dot(lu, u1) + abs_dot(ct, ct1) + abs_dot(cp, cp1) + abs_dot(u, u1);
    CHECK(rel(lhs - rhs, scale) <= 1e-12);
  }

  // For u = sin(theta) e_phi the vector Laplacian is -2 sin(theta) e_phi.
  const auto [o1, o2] = orders([](const Grid& gr) {
    const VectorField u(gr.scalar(), oracle::sample(gr, [](double t, double, double) { return std::sin(t); }));
    const VectorField lu = laplace_vector(u, gr);
    const ScalarField exact = oracle::sample(gr, [](double t, double, double) { return 2 * std::sin(t); });
    return std::max(oracle::interior_max(difference(-1.0 * lu.phi, exact), gr, kLo, kHi),
                    oracle::interior_max(lu.theta, gr, kLo, kHi));
  });
  CHECK(o1 >= 1.9);
  CHECK(o2 >= 1.9);
}

TEST_CASE("hydrostatic balance: zero temperature, closed form, duality") {
  const Params p;
  const Grid g = build_grid(6, 12, 8);
  oracle::Rng rng(12);
  const ScalarField phi_s = oracle::random_field(rng, 6, 12, 1);
  const ScalarField q = oracle::random_field(rng, 6, 12, 8);

  SUBCASE("T = 0 gives Phi = Phi_s on every level") {
    const ScalarField phi = hydrostatic_phi(g.scalar(), q, phi_s, p, g);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 12; ++j)
        for (int k = 0; k < 8; ++k) CHECK(phi(i, j, k) == phi_s(i, j, 0));
  }

  SUBCASE("constant temperature matches the log antiderivative at faces") {
    const double T0 = 1.7;
    const ScalarField phi = hydrostatic_phi_faces(g.scalar(T0), g.scalar(), phi_s, p, g);
    for (int f = 0; f <= 8; ++f) {
      const double pf = (p.p_cap - p.p0) * g.xi_faces[f] + p.p0;
      const double closed = p.b * p.p_cap * T0 / (p.p_cap - p.p0) * std::log(p.p_cap / pf);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 12; ++j)
          CHECK(phi(i, j, f) - phi_s(i, j, 0) == doctest::Approx(closed).epsilon(1e-13).scale(1.0));
    }
  }

  SUBCASE("pressure gradient and buoyancy are adjoint") {
    for (int draw = 0; draw < 20; ++draw) {
      const ScalarField T = oracle::random_field(rng, 6, 12, 8);
      const VectorField v = oracle::random_vector(rng, 6, 12, 8);
      const VectorField pg = pressure_gradient(T, q, p, g);
      const ScalarField by = buoyancy_coupling(v, q, p, g);
      CHECK(rel(oracle::volume_dot(pg, v) - oracle::volume_dot(by, T), abs_dot(pg, v) + abs_dot(by, T)) <= 1e-12);
    }
  }
}

TEST_CASE("vertical average and fluctuation") {
  const Grid g = build_grid(6, 8, 7);
  oracle::Rng rng(31);

  const VectorField one = oracle::random_vector(rng, 6, 8, 1);
  VectorField flat = g.vector();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 7; ++k) {
        flat.theta(i, j, k) = one.theta(i, j, 0);
        flat.phi(i, j, k) = one.phi(i, j, 0);
      }
  const VectorField m = vertical_average(flat, g);
  CHECK(m.theta.max_abs() > 0.0);
  CHECK((m - one).max_norm() <= 1e-15);
  CHECK(fluctuation(flat, g).max_norm() <= 1e-15);

  const VectorField u = oracle::random_vector(rng, 6, 8, 7);
  const VectorField f = fluctuation(u, g);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) {
      double st = 0.0, sp = 0.0;
      for (int k = 0; k < 7; ++k) {
        st += f.theta(i, j, k);
        sp += f.phi(i, j, k);
      }
      CHECK(std::abs(st / 7) <= 1e-15);
      CHECK(std::abs(sp / 7) <= 1e-15);
    }

  const VectorField a = vertical_average(u, g);
  CHECK(vertical_average(a, g) == a);
}

TEST_CASE("d_xi: Neumann constants, degenerate Robin, Robin profile") {
  const Grid g = build_grid(4, 4, 6);
  CHECK(d_xi(g.scalar(2.0), BoundaryCondition::neumann(), g).max_abs() == 0.0);
  CHECK(d_xi_faces(g.scalar(2.0), BoundaryCondition::neumann(), g).max_abs() == 0.0);

  oracle::Rng rng(2);
  const ScalarField s = oracle::random_field(rng, 4, 4, 6);
  CHECK(d_xi(s, BoundaryCondition::robin(0.0), g) == d_xi(s, BoundaryCondition::neumann(), g));
  CHECK(d_xi_faces(s, BoundaryCondition::robin(0.0), g) == d_xi_faces(s, BoundaryCondition::neumann(), g));

  // s = exp(-alpha (xi - 1)) satisfies ds/dxi = -alpha s at xi = 1, where s = 1.
  const double alpha = 1.3;
  double prev = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const Grid gn = build_grid(4, 4, n);
    const ScalarField e = oracle::sample(gn, [&](double, double, double xi) { return std::exp(-alpha * (xi - 1)); });
    const ScalarField df = d_xi_faces(e, BoundaryCondition::robin(alpha), gn);
    const double err = std::abs(df(1, 2, n) + alpha);
    if (prev > 0.0) CHECK(oracle::order(prev, err) >= 1.9);
    prev = err;
  }

  BoundaryCondition bad;
  bad.kind = static_cast<BoundaryCondition::Kind>(7);
  CHECK_THROWS_AS(d_xi(s, bad, g), UnknownBC);
  CHECK_THROWS_AS(top_ghost(1.0, bad, 0.1), UnknownBC);
}

TEST_CASE("operators are linear in each argument") {
  const Params p;
  const Grid g = build_grid(8, 16, 4);
  oracle::Rng rng(123);
  const double a = 0.7, b = -1.9;
  auto close = [](const ScalarField& x, const ScalarField& y) {
    return (x - y).max_abs() <= 1e-13 * std::max(1.0, std::max(x.max_abs(), y.max_abs()));
  };
  auto vclose = [&](const VectorField& x, const VectorField& y) {
    return close(x.theta, y.theta) && close(x.phi, y.phi);
  };
  const VectorField u = oracle::random_vector(rng, 8, 16, 4), w = oracle::random_vector(rng, 8, 16, 4);
  const ScalarField s = oracle::random_field(rng, 8, 16, 4), t = oracle::random_field(rng, 8, 16, 4);
  const ScalarField q = oracle::random_field(rng, 8, 16, 4);
  const VectorField uw = a * u + b * w;
  const ScalarField st = a * s + b * t;

  CHECK(close(h_div(uw, g), a * h_div(u, g) + b * h_div(w, g)));
  CHECK(vclose(h_grad(st, g), a * h_grad(s, g) + b * h_grad(t, g)));
  CHECK(close(laplace_scalar(st, g), a * laplace_scalar(s, g) + b * laplace_scalar(t, g)));
  CHECK(vclose(laplace_vector(uw, g), a * laplace_vector(u, g) + b * laplace_vector(w, g)));
  CHECK(close(advect_scalar(u, st, g), a * advect_scalar(u, s, g) + b * advect_scalar(u, t, g)));
  CHECK(close(advect_scalar(uw, s, g), a * advect_scalar(u, s, g) + b * advect_scalar(w, s, g)));
  CHECK(vclose(advect_vector(u, uw, g), a * advect_vector(u, u, g) + b * advect_vector(u, w, g)));
  CHECK(vclose(advect_vector(uw, u, g), a * advect_vector(u, u, g) + b * advect_vector(w, u, g)));
  CHECK(close(vertical_velocity(uw, g), a * vertical_velocity(u, g) + b * vertical_velocity(w, g)));
  CHECK(vclose(pressure_gradient(st, q, p, g), a * pressure_gradient(s, q, p, g) + b * pressure_gradient(t, q, p, g)));
  CHECK(close(buoyancy_coupling(uw, q, p, g), a * buoyancy_coupling(u, q, p, g) + b * buoyancy_coupling(w, q, p, g)));
  CHECK(close(d_xi(st, BoundaryCondition::robin(1.0), g),
              a * d_xi(s, BoundaryCondition::robin(1.0), g) + b * d_xi(t, BoundaryCondition::robin(1.0), g)));
  CHECK(vclose(fluctuation(uw, g), a * fluctuation(u, g) + b * fluctuation(w, g)));
}
