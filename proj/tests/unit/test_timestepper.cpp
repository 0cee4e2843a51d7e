#include <doctest.h>

#include <cmath>
#include <limits>

#include "mpe/diagnostics.hpp"
#include "mpe/errors.hpp"
#include "mpe/harness.hpp"
#include "mpe/timestepper.hpp"
#include "oracles.hpp"

using namespace mpe;
using oracle::kPi;

namespace {

State smooth_state(const Grid& g, std::uint64_t seed, double amplitude = 1.0) {
  InitialSpec spec;
  spec.profile = "random";
  spec.seed = seed;
  spec.amplitude = amplitude;
  return initial_state(spec, 1.0, g, StepConfig{});
}

double energy_of(const State& s) {
  return oracle::volume_dot(s.v, s.v) + oracle::volume_dot(s.T, s.T) + oracle::volume_dot(s.q, s.q);
}

// Weighted checkerboard component of a surface field.
double checkerboard_coefficient(const ScalarField& f) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < f.n_theta(); ++i)
    for (int j = 0; j < f.n_phi(); ++j) {
      const double w = oracle::cell_area(i, f.n_theta(), f.n_phi());
      const double c = j % 2 == 0 ? 1.0 : -1.0;
      num += w * c * f(i, j, 0);
      den += w;
    }
  return num / den;
}

}  // namespace

TEST_CASE("step: zero state maps to zero state") {
  const Grid g = build_grid(8, 16, 4);
  const State z = State::zero(g);
  StepConfig cfg;
  cfg.dt = 0.01;
  for (auto mode : {DiffusionMode::explicit_horizontal, DiffusionMode::crank_nicolson}) {
    cfg.diffusion_mode = mode;
    const State n = step(z, Forcing::zero(g), Params{}, cfg, g);
    CHECK(n.v == z.v);
    CHECK(n.T == z.T);
    CHECK(n.q == z.q);
    CHECK(n.t == 0.01);
  }
}

TEST_CASE("step: unforced energy is nonincreasing at CFL-safe steps") {
  const Params p;
  const Grid g = build_grid(12, 24, 6);
  State s = smooth_state(g, 5, 2.0);
  StepConfig cfg;
  cfg.dt = 0.5 * cfl_dt(s, g, p, cfg);
  Stepper st(g, p, Forcing::zero(g), cfg);
  double e = energy_of(s);
  for (int n = 0; n < 40; ++n) {
    s = st.step(s);
    const double e1 = energy_of(s);
    CHECK(e1 <= e * (1 + 1e-10));
    e = e1;
  }
}

TEST_CASE("step: Crank-Nicolson mode is monotone beyond the explicit diffusion limit") {
  const Params p;
  const Grid g = build_grid(12, 24, 6);
  State s = smooth_state(g, 9);
  StepConfig cfg;
  const double explicit_limit = cfl_dt(State::zero(g), g, p, cfg);
  cfg.diffusion_mode = DiffusionMode::crank_nicolson;
  cfg.dt = std::min(4 * explicit_limit, 0.5 * cfl_dt(s, g, p, cfg));
  REQUIRE(cfg.dt > explicit_limit);
  Stepper st(g, p, Forcing::zero(g), cfg);
  double e = energy_of(s);
  for (int n = 0; n < 10; ++n) {
    s = st.step(s);
    const double e1 = energy_of(s);
    CHECK(e1 <= e * (1 + 1e-12));
    e = e1;
  }
}

TEST_CASE("implicit vertical diffusion: eigenmode decay, constants, Robin boundary") {
  SUBCASE("cos(k pi xi) decays by 1 / (1 + dt coeff (k pi)^2) to second order in d_xi") {
    const double dt = 0.01, coeff = 0.5;
    for (int mode : {1, 2}) {
      const double exact = 1.0 / (1.0 + dt * coeff * (mode * kPi) * (mode * kPi));
      double prev = 0.0;
      for (int n : {8, 16, 32, 64}) {
        std::vector<double> col(n);
        for (int k = 0; k < n; ++k) col[k] = std::cos(mode * kPi * (k + 0.5) / n);
        const auto out = implicit_vertical_diffusion(col, dt, coeff, ops::BoundaryCondition::neumann(), 1.0 / n);
        double num = 0.0, den = 0.0;
        for (int k = 0; k < n; ++k) {
          num += out[k] * col[k];
          den += col[k] * col[k];
        }
        const double err = std::abs(num / den - exact);
        if (prev > 0.0) CHECK(prev / err >= 3.5);
        prev = err;
      }
    }
  }
  SUBCASE("a constant column with Neumann ends is returned unchanged") {
    const std::vector<double> col(9, 0.731);
    CHECK(implicit_vertical_diffusion(col, 0.3, 2.0, ops::BoundaryCondition::neumann(), 1.0 / 9) == col);
  }
  SUBCASE("Robin cooling lowers the top cell and keeps the column bounded") {
    const std::vector<double> col(8, 1.0);
    const auto out = implicit_vertical_diffusion(col, 0.1, 0.5, ops::BoundaryCondition::robin(1.0), 1.0 / 8);
    CHECK(out.back() < 1.0);
    for (std::size_t k = 0; k + 1 < out.size(); ++k) CHECK(out[k] >= out[k + 1]);
    for (double x : out) {
      CHECK(x <= 1.0);
      CHECK(x > 0.0);
    }
  }
  SUBCASE("invalid inputs are rejected") {
    const std::vector<double> col(4, 1.0);
    CHECK_THROWS_AS(implicit_vertical_diffusion(col, 0.0, 1.0, ops::BoundaryCondition::neumann(), 0.25),
                    SingularSystem);
    CHECK_THROWS_AS(implicit_vertical_diffusion(col, 0.1, -1.0, ops::BoundaryCondition::neumann(), 0.25),
                    SingularSystem);
  }
}

TEST_CASE("cfl_dt: zero state, resolution scaling, brute-force minimum") {
  const Params p;
  StepConfig cfg;
  const double kappa = 1.0 / p.re1;

  SUBCASE("zero state is limited by diffusion only") {
    const Grid g = build_grid(16, 32, 4);
    double h = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 16; ++i) h = std::min(h, effective_spacing(i, g));
    CHECK(cfl_dt(State::zero(g), g, p, cfg) == doctest::Approx(cfg.cfl_safety * h * h / (4 * kappa)).epsilon(1e-14));
    cfg.diffusion_mode = DiffusionMode::crank_nicolson;
    CHECK(std::isinf(cfl_dt(State::zero(g), g, p, cfg)));
  }

  SUBCASE("doubling resolution quarters the diffusive and halves the advective limit") {
    const Grid g1 = build_grid(16, 32, 4), g2 = build_grid(32, 64, 4);
    CHECK(cfl_dt(State::zero(g2), g2, p, cfg) / cfl_dt(State::zero(g1), g1, p, cfg) ==
          doctest::Approx(0.25).epsilon(1e-12));
    cfg.diffusion_mode = DiffusionMode::crank_nicolson;
    auto uniform = [](const Grid& g) {
      State s = State::zero(g);
      s.v.theta = g.scalar(1.0);
      return s;
    };
    // With |v| = 1 the limit is the smallest spacing; the limiting row's sine
    // shifts slightly between the two grids.
    const double r = cfl_dt(uniform(g2), g2, p, cfg) / cfl_dt(uniform(g1), g1, p, cfg);
    CHECK(r == doctest::Approx(0.5).epsilon(0.01));
  }

  SUBCASE("random state does not exceed a brute-force minimum") {
    const Grid g = build_grid(12, 24, 5);
    oracle::Rng rng(8);
    State s = State::zero(g);
    s.v = oracle::random_vector(rng, 12, 24, 5);
    const ScalarField W = ops::vertical_velocity(s.v, g);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 12; ++i) {
      double zonal = g.metric_sin[i];
      if (i < g.polar_filter_band || i >= 12 - g.polar_filter_band) zonal = std::max(zonal, g.filter_sine);
      const double h = std::min(g.d_theta, zonal * g.d_phi);
      best = std::min(best, h * h / (4 * kappa));
      for (int j = 0; j < 24; ++j) {
        for (int k = 0; k < 5; ++k) best = std::min(best, h / std::hypot(s.v.theta(i, j, k), s.v.phi(i, j, k)));
        for (int f = 0; f <= 5; ++f)
          if (W(i, j, f) != 0.0) best = std::min(best, g.d_xi / std::abs(W(i, j, f)));
      }
    }
    const double got = cfl_dt(s, g, p, cfg);
    CHECK(got <= cfg.cfl_safety * best * (1 + 1e-14));
    CHECK(got == doctest::Approx(cfg.cfl_safety * best).epsilon(1e-14));
  }
}

TEST_CASE("step rejects steps beyond the CFL limit and non-finite input") {
  const Params p;
  const Grid g = build_grid(8, 16, 4);
  StepConfig cfg;
  cfg.dt = 10 * cfl_dt(State::zero(g), g, p, cfg);
  CHECK_THROWS_AS(step(State::zero(g), Forcing::zero(g), p, cfg, g), CflViolation);

  cfg.dt = 0.001;
  State bad = State::zero(g);
  bad.T(1, 1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step(bad, Forcing::zero(g), p, cfg, g), NonFinite);
}

TEST_CASE("StepConfig validation names the offending key") {
  auto key_of = [](StepConfig c) -> std::string {
    try {
      c.validate();
    } catch (const ValidationError& e) {
      return e.key();
    }
    return "";
  };
  StepConfig c;
  CHECK(key_of(c).empty());
  c.dt = 0;
  CHECK(key_of(c) == "step.dt");
  c = {};
  c.projection_tol = -1;
  CHECK(key_of(c) == "step.projection_tol");
  c = {};
  c.cfl_safety = 1.5;
  CHECK(key_of(c) == "step.cfl_safety");
  c = {};
  c.max_cg_iters = 0;
  CHECK(key_of(c) == "step.max_cg_iters");
}

TEST_CASE("barotropic projection") {
  const Grid g = build_grid(8, 16, 4);
  EllipticWorkspace ws(g);
  StepConfig cfg;
  const double dt = 0.01;
  oracle::Rng rng(19);

  SUBCASE("a constrained input is left alone") {
    const VectorField v = oracle::constrained_velocity(rng, 8, 16, 4);
    const ProjectionResult r = barotropic_projection(v, dt, ws, cfg);
    CHECK(r.phi_s.max_abs() <= cfg.projection_tol * dt * 10);
    CHECK((r.v - v).max_norm() <= cfg.projection_tol * v.max_norm());
  }

  SUBCASE("a pure gradient is removed and Phi_s recovers the potential") {
    const ScalarField chi =
        oracle::sample(g, [](double t, double p, double) { return std::cos(t) + std::sin(t) * std::cos(p) + 0.3 * std::cos(2 * t); }, 1);
    const VectorField g1 = ops::h_grad(chi, g);
    VectorField v = g.vector();
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 16; ++j)
        for (int k = 0; k < 4; ++k) {
          v.theta(i, j, k) = g1.theta(i, j, 0);
          v.phi(i, j, k) = g1.phi(i, j, 0);
        }
    const ProjectionResult r = barotropic_projection(v, dt, ws, cfg);
    CHECK(r.v.max_norm() <= 10 * cfg.projection_tol * v.max_norm());

    const double mean = oracle::sphere_sum(chi) / (4 * kPi);
    const double cb = checkerboard_coefficient(chi);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 16; ++j) {
        const double expected = (chi(i, j, 0) - mean - cb * (j % 2 == 0 ? 1.0 : -1.0)) / dt;
        CHECK(std::abs(r.phi_s(i, j, 0) - expected) <= 1e-7 * chi.max_abs() / dt);
      }
  }

  SUBCASE("agrees with a dense direct solve") {
    const VectorField v = oracle::random_vector(rng, 8, 16, 4);
    const int n = 8 * 16;
    // Column divergence right-hand side.
    ScalarField cd = ops::column_divergence(v, g);
    // Dense weighted operator M = -A L (symmetric) plus rank-one terms fixing both null modes.
    std::vector<double> M(n * n, 0.0), rhs(n);
    std::vector<double> area(n);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 16; ++j) area[i * 16 + j] = oracle::cell_area(i, 8, 16);
    for (int c = 0; c < n; ++c) {
      ScalarField e = g.surface();
      e.values()[c] = 1.0;
      const ScalarField le = ops::laplace_scalar(e, g);
      for (int r = 0; r < n; ++r) M[r * n + c] = -area[r] * le.values()[r];
    }
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const double s_r = (r % 16) % 2 == 0 ? 1.0 : -1.0, s_c = (c % 16) % 2 == 0 ? 1.0 : -1.0;
        M[r * n + c] += area[r] * area[c] + area[r] * s_r * area[c] * s_c;
      }
    for (int r = 0; r < n; ++r) rhs[r] = -area[r] * cd.values()[r] / dt;
    const auto phi = oracle::dense_solve(M, rhs);

    const ProjectionResult res = barotropic_projection(v, dt, ws, cfg);
    double scale = 0.0;
    for (double x : phi) scale = std::max(scale, std::abs(x));
    for (int r = 0; r < n; ++r) CHECK(std::abs(res.phi_s.values()[r] - phi[r]) <= 1e-8 * scale);
    CHECK(res.residual <= cfg.projection_tol);
    const ScalarField after = ops::column_divergence(res.v, g);
    CHECK(after.max_abs() <= cfg.projection_tol * std::min(1.0, res.v.max_norm()) * (1 + 1e-9));
  }

  SUBCASE("a purely baroclinic input is unchanged") {
    const VectorField v = ops::fluctuation(oracle::random_vector(rng, 8, 16, 4), g);
    const ProjectionResult r = barotropic_projection(v, dt, ws, cfg);
    CHECK((r.v - v).max_norm() <= cfg.projection_tol * v.max_norm());
  }
}

TEST_CASE("polar filter: unit response outside the band, symmetric, keeps zonal means") {
  const Grid g = build_grid(18, 36, 2);
  const PolarFilter f(g);
  REQUIRE(f.active());
  for (int i = 0; i < 18; ++i)
    for (int m = 0; m < 36; ++m) {
      const double r = f.response(i, m);
      CHECK(r <= 1.0);
      CHECK(r > 0.0);
      if (!g.in_filter_band(i) || m == 0) CHECK(r == 1.0);
    }
  CHECK(f.response(0, 18) < f.response(0, 1));

  oracle::Rng rng(3);
  const ScalarField a = oracle::random_field(rng, 18, 36, 2), b = oracle::random_field(rng, 18, 36, 2);
  ScalarField fa = a, fb = b;
  f.apply(fa);
  f.apply(fb);
  CHECK(std::abs(oracle::volume_dot(fa, b) - oracle::volume_dot(a, fb)) <= 1e-13);
  for (int i = 0; i < 18; ++i) {
    double m0 = 0.0, m1 = 0.0;
    for (int j = 0; j < 36; ++j) {
      m0 += a(i, j, 0);
      m1 += fa(i, j, 0);
      if (!g.in_filter_band(i)) CHECK(fa(i, j, 0) == a(i, j, 0));
    }
    CHECK(m1 == doctest::Approx(m0).epsilon(1e-12).scale(1.0));
  }
  const Grid unfiltered = build_grid(18, 36, 2, 0);
  CHECK_FALSE(PolarFilter(unfiltered).active());
}

TEST_CASE("stepping is deterministic") {
  const Params p;
  const Grid g = build_grid(8, 16, 4);
  const State s0 = smooth_state(g, 2);
  StepConfig cfg;
  cfg.dt = 0.005;
  Forcing f = Forcing::zero(g);
  f.Q1 = oracle::sample(g, [](double t, double, double) { return std::sin(t); });
  Stepper a(g, p, f, cfg), b(g, p, f, cfg);
  State x = s0, y = s0;
  for (int n = 0; n < 10; ++n) {
    x = a.step(x);
    y = b.step(y);
  }
  CHECK(x.v == y.v);
  CHECK(x.T == y.T);
  CHECK(x.q == y.q);
  CHECK(a.phi_s() == b.phi_s());
}

TEST_CASE("time integration converges at first order") {
  const Params p;
  const Grid g = build_grid(8, 16, 4);
  const State s0 = smooth_state(g, 4);
  Forcing f = Forcing::zero(g);
  f.Q1 = oracle::sample(g, [](double t, double, double xi) { return std::cos(t) * (1 - xi); });
  const double t_end = 0.2, dt0 = 0.02;
  auto run = [&](double dt) {
    StepConfig cfg;
    cfg.dt = dt;
    Stepper st(g, p, f, cfg);
    State s = s0;
    const long n = step_count(t_end, dt);
    for (long k = 0; k < n; ++k) s = st.step(s);
    return s;
  };
  const State ref = run(dt0 / 8);
  const double e1 = std::sqrt(separation(run(dt0), ref, g));
  const double e2 = std::sqrt(separation(run(dt0 / 2), ref, g));
  CHECK(e1 > 0.0);
  CHECK(oracle::order(e1, e2) >= 0.9);
}
