#include "mpe/timestepper.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "mpe/errors.hpp"

namespace mpe {

void StepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("step.dt", "must be positive");
  if (!(projection_tol > 0.0)) throw ValidationError("step.projection_tol", "must be positive");
  if (max_cg_iters < 1) throw ValidationError("step.max_cg_iters", "must be at least 1");
  if (!(cfl_safety > 0.0) || cfl_safety > 1.0) {
    throw ValidationError("step.cfl_safety", "must lie in (0, 1]");
  }
}

// ---------------------------------------------------------------- polar filter

PolarFilter::PolarFilter(const Grid& grid) : grid_(&grid) {
  const int n = grid.n_phi;
  for (int i = 0; i < grid.n_theta; ++i) {
    if (!grid.in_filter_band(i)) continue;
    std::vector<double> sigma(n);
    for (int m = 0; m < n; ++m) sigma[m] = std::sqrt(response(i, m));
    Row row{i, std::vector<double>(n, 0.0)};
    for (int d = 0; d <= n / 2; ++d) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) {
        acc += sigma[m] * std::cos(2.0 * std::numbers::pi * double(m) * d / n);
      }
      row.kernel[d] = acc / n;
      row.kernel[(n - d) % n] = row.kernel[d];
    }
    rows_.push_back(std::move(row));
  }
}

double PolarFilter::response(int i, int m) const {
  const Grid& g = *grid_;
  if (!g.in_filter_band(i)) return 1.0;
  const int mm = std::min(m % g.n_phi, g.n_phi - m % g.n_phi);
  if (mm == 0) return 1.0;
  const double s = std::sin(g.theta_centers[i]) / g.filter_sine;
  const double h = std::sin(0.5 * mm * g.d_phi);
  return std::min(1.0, s * s / (h * h));
}

void PolarFilter::apply(ScalarField& field) const {
  const int n = grid_->n_phi;
  const int nl = field.n_lev();
  std::vector<double> line(n), out(n);
  for (const Row& row : rows_) {
    for (int k = 0; k < nl; ++k) {
      for (int j = 0; j < n; ++j) line[j] = field(row.i, j, k);
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int d = 0; d < n; ++d) acc += row.kernel[d] * line[(j - d + n) % n];
        out[j] = acc;
      }
      for (int j = 0; j < n; ++j) field(row.i, j, k) = out[j];
    }
  }
}

void PolarFilter::apply(VectorField& field) const {
  apply(field.theta);
  apply(field.phi);
}

// ---------------------------------------------------------------- elliptic solve

namespace {

/// -L applied to a single-level field.
void apply_neg_laplace(const ScalarField& x, ScalarField& out, const Grid& grid) {
  out = ops::laplace_scalar(x, grid);
  out *= -1.0;
}

/// Removes the two discrete null modes of the gradient: constants and the
/// zonal checkerboard (-1)^j. They are orthogonal under the cell weights.
void remove_null_modes(ScalarField& x, const Grid& grid) {
  double total = 0.0, mean = 0.0, checker = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const double w = grid.cell_weights[i];
      const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
      total += w;
      mean += w * x(i, j, 0);
      checker += w * sgn * x(i, j, 0);
    }
  }
  mean /= total;
  checker /= total;
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      x(i, j, 0) -= mean + ((j % 2 == 0) ? checker : -checker);
    }
  }
}

double dot_surface(const ScalarField& a, const ScalarField& b, const Grid& grid) {
  return inner_sphere(a, b, grid, 0);
}

}  // namespace

EllipticWorkspace::EllipticWorkspace(const Grid& grid)
    : r(grid.surface()), z(grid.surface()), p(grid.surface()), ap(grid.surface()), grid_(&grid),
      diag_(grid.n_theta, 1.0) {
  // The diagonal of -L depends only on the row.
  ScalarField e = grid.surface();
  ScalarField out = grid.surface();
  for (int i = 0; i < grid.n_theta; ++i) {
    e(i, 0, 0) = 1.0;
    apply_neg_laplace(e, out, grid);
    e(i, 0, 0) = 0.0;
    if (out(i, 0, 0) <= 0.0) throw SingularSystem("non-positive Poisson diagonal in row " + std::to_string(i));
    diag_[i] = out(i, 0, 0);
  }
}

ProjectionResult barotropic_projection(const VectorField& v_star, double dt, EllipticWorkspace& ws,
                                       const StepConfig& cfg) {
  const Grid& grid = ws.grid();
  require_shape(v_star, grid, grid.n_xi);
  if (!v_star.all_finite()) throw NonFinite("barotropic_projection: v_star not finite");
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");

  // Solve -L x = b with b = -D/dt; the constraint residual is then dt * |b + L x|.
  ScalarField b = ops::column_divergence(v_star, grid);
  b *= -1.0 / dt;
  remove_null_modes(b, grid);

  ScalarField x = grid.surface();
  ScalarField& r = ws.r;
  ScalarField& z = ws.z;
  ScalarField& p = ws.p;
  ScalarField& ap = ws.ap;
  r = b;

  const auto precondition = [&](const ScalarField& in, ScalarField& out) {
    out = in;
    for (int i = 0; i < grid.n_theta; ++i) {
      const double inv = 1.0 / ws.diagonal(i);
      for (int j = 0; j < grid.n_phi; ++j) out(i, j, 0) *= inv;
    }
    remove_null_modes(out, grid);
  };
  // The post-projection residual must not exceed tol * min(1, max|v|): an
  // absolute bound for O(1) flows, a relative one once the flow is weak.
  // Below the round-off of a divergence of v_star nothing is resolvable, which
  // matters when the projection removes almost all of v_star.
  double h_min = grid.d_theta;
  for (int i = 0; i < grid.n_theta; ++i) h_min = std::min(h_min, grid.metric_sin[i] * grid.d_phi);
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * v_star.max_norm() / h_min;
  const auto bound = [&](const VectorField& v) {
    return std::max(cfg.projection_tol * std::min(1.0, v.max_norm()), floor);
  };
  ProjectionResult result;
  const auto accept = [&](const ScalarField& phi) {
    result.v = v_star;
    const VectorField g = ops::h_grad(phi, grid);
    for (int i = 0; i < grid.n_theta; ++i) {
      for (int j = 0; j < grid.n_phi; ++j) {
        const double gt = dt * g.theta(i, j, 0);
        const double gp = dt * g.phi(i, j, 0);
        for (int k = 0; k < grid.n_xi; ++k) {
          result.v.theta(i, j, k) -= gt;
          result.v.phi(i, j, k) -= gp;
        }
      }
    }
    result.residual = ops::column_divergence(result.v, grid).max_abs();
    return result.residual <= bound(result.v);
  };

  int iterations = 0;
  double target = cfg.projection_tol * std::min(1.0, v_star.max_norm());
  const auto converged = [&](const ScalarField& res) { return dt * res.max_abs() <= target; };
  const auto fail = [&] {
    throw EllipticDivergence("projection CG did not converge in " + std::to_string(iterations) +
                             " iterations (residual " + format_number(dt * r.max_abs()) + ")");
  };

  bool done = false;
  if (converged(r)) {
    result.v = v_star;
    result.residual = ops::column_divergence(v_star, grid).max_abs();
    done = result.residual <= bound(v_star);
    if (!done) target *= 0.5;
  }
  if (!done) {
    precondition(r, z);
    p = z;
    double rz = dot_surface(r, z, grid);
    while (true) {
      if (iterations >= cfg.max_cg_iters) fail();
      ++iterations;
      apply_neg_laplace(p, ap, grid);
      const double pap = dot_surface(p, ap, grid);
      bool candidate = !(pap > 0.0);
      if (!candidate) {
        const double alpha = rz / pap;
        x.add_scaled(alpha, p);
        r.add_scaled(-alpha, ap);
        candidate = converged(r);
      }
      if (candidate) {
        remove_null_modes(x, grid);
        if (accept(x)) break;
        if (!(pap > 0.0) && target < 1e-3 * cfg.projection_tol * dt) fail();
        // Recursive residual drifted or the flow shrank: restart from the true residual.
        target *= 0.5;
        apply_neg_laplace(x, ap, grid);
        r = b;
        r -= ap;
        precondition(r, z);
        p = z;
        rz = dot_surface(r, z, grid);
        continue;
      }
      precondition(r, z);
      const double rz_new = dot_surface(r, z, grid);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t n = 0; n < p.size(); ++n) p.values()[n] = z.values()[n] + beta * p.values()[n];
    }
  }
  result.phi_s = std::move(x);
  result.iterations = iterations;
  return result;
}

// ---------------------------------------------------------------- vertical diffusion

std::vector<double> implicit_vertical_diffusion(std::span<const double> column, double dt,
                                                double coeff, const ops::BoundaryCondition& bc,
                                                double d_xi) {
  const int n = static_cast<int>(column.size());
  if (!(dt > 0.0) || !(coeff >= 0.0) || !(d_xi > 0.0) || n < 1) {
    throw SingularSystem("implicit_vertical_diffusion needs dt > 0, coeff >= 0, d_xi > 0");
  }
  // Ghost above the top cell is ratio * top; the bottom ghost mirrors the bottom cell.
  const double ratio = ops::top_ghost(1.0, bc, d_xi);
  const double mu = dt * coeff / (d_xi * d_xi);

  // Solve for the increment so that a column in the operator's null space is
  // returned bit-for-bit.
  std::vector<double> rhs(n), lower(n, -mu), diag(n, 1.0 + 2.0 * mu), upper(n, -mu);
  for (int k = 0; k < n; ++k) {
    const double below = k == 0 ? column[0] : column[k - 1];
    const double above = k == n - 1 ? ratio * column[k] : column[k + 1];
    rhs[k] = mu * ((above - column[k]) - (column[k] - below));
  }
  diag[0] = 1.0 + mu;
  diag[n - 1] = 1.0 + (2.0 - ratio) * mu;
  if (n == 1) diag[0] = 1.0 + (1.0 - ratio) * mu;

  std::vector<double> c(n), d(n);
  double pivot = diag[0];
  if (pivot == 0.0) throw SingularSystem("zero pivot");
  c[0] = upper[0] / pivot;
  d[0] = rhs[0] / pivot;
  for (int k = 1; k < n; ++k) {
    pivot = diag[k] - lower[k] * c[k - 1];
    if (pivot == 0.0) throw SingularSystem("zero pivot");
    c[k] = upper[k] / pivot;
    d[k] = (rhs[k] - lower[k] * d[k - 1]) / pivot;
  }
  std::vector<double> out(n);
  double next = d[n - 1];
  out[n - 1] = column[n - 1] + next;
  for (int k = n - 2; k >= 0; --k) {
    next = d[k] - c[k] * next;
    out[k] = column[k] + next;
  }
  return out;
}

// ---------------------------------------------------------------- CFL

double effective_spacing(int i, const Grid& grid) {
  double zonal = grid.metric_sin[i];
  if (grid.in_filter_band(i)) zonal = std::max(zonal, grid.filter_sine);
  return std::min(grid.d_theta, zonal * grid.d_phi);
}

double cfl_dt(const State& state, const Grid& grid, const Params& params, const StepConfig& cfg) {
  require_shape(state.v, grid, grid.n_xi);
  double best = std::numeric_limits<double>::infinity();
  const double kappa = std::max({1.0 / params.re1, 1.0 / params.rt1, 1.0 / params.rq1});
  const ScalarField W = ops::vertical_velocity(state.v, grid);
  for (int i = 0; i < grid.n_theta; ++i) {
    const double h = effective_spacing(i, grid);
    if (cfg.diffusion_mode == DiffusionMode::explicit_horizontal) {
      best = std::min(best, h * h / (4.0 * kappa));
    }
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < grid.n_xi; ++k) {
        const double speed = std::hypot(state.v.theta(i, j, k), state.v.phi(i, j, k));
        if (speed > 0.0) best = std::min(best, h / speed);
      }
      for (int f = 0; f <= grid.n_xi; ++f) {
        const double w = std::abs(W(i, j, f));
        if (w > 0.0) best = std::min(best, grid.d_xi / w);
      }
    }
  }
  return cfg.cfl_safety * best;
}

// ---------------------------------------------------------------- stepper

namespace {

/// Conjugate gradient for an operator SPD in the quadrature inner product.
template <class F>
void solve_spd(const std::function<F(const F&)>& apply, const F& rhs, F& x,
               const std::function<double(const F&, const F&)>& dot, double rel_tol, int max_iter,
               const char* what) {
  F r = rhs;
  r -= apply(x);
  const double target = rel_tol * rel_tol * std::max(dot(rhs, rhs), std::numeric_limits<double>::min());
  double rr = dot(r, r);
  if (rr <= target) return;
  F p = r;
  for (int it = 0; it < max_iter; ++it) {
    const F ap = apply(p);
    const double alpha = rr / dot(p, ap);
    x.add_scaled(alpha, p);
    r.add_scaled(-alpha, ap);
    const double rr_new = dot(r, r);
    if (rr_new <= target) return;
    p *= rr_new / rr;
    p += r;
    rr = rr_new;
  }
  throw EllipticDivergence(std::string(what) + ": CG did not converge");
}

void crank_nicolson(ScalarField& s, double kappa, double dt, const Grid& grid, int max_iter) {
  const double h = 0.5 * dt * kappa;
  ScalarField rhs = s;
  rhs.add_scaled(h, ops::laplace_scalar(s, grid));
  std::function<ScalarField(const ScalarField&)> apply = [&](const ScalarField& x) {
    ScalarField out = x;
    out.add_scaled(-h, ops::laplace_scalar(x, grid));
    return out;
  };
  std::function<double(const ScalarField&, const ScalarField&)> dot =
      [&](const ScalarField& a, const ScalarField& b) { return inner_omega(a, b, grid); };
  solve_spd(apply, rhs, s, dot, 1e-13, max_iter, "horizontal diffusion");
}

void crank_nicolson(VectorField& v, double kappa, double dt, const Grid& grid, int max_iter) {
  const double h = 0.5 * dt * kappa;
  VectorField rhs = v;
  rhs.add_scaled(h, ops::laplace_vector(v, grid));
  std::function<VectorField(const VectorField&)> apply = [&](const VectorField& x) {
    VectorField out = x;
    out.add_scaled(-h, ops::laplace_vector(x, grid));
    return out;
  };
  std::function<double(const VectorField&, const VectorField&)> dot =
      [&](const VectorField& a, const VectorField& b) { return inner_omega(a, b, grid); };
  solve_spd(apply, rhs, v, dot, 1e-13, max_iter, "horizontal diffusion");
}

void vertical_diffusion(ScalarField& s, double dt, double coeff, const ops::BoundaryCondition& bc,
                        const Grid& grid) {
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      auto col = s.column(i, j);
      const auto out = implicit_vertical_diffusion(col, dt, coeff, bc, grid.d_xi);
      std::copy(out.begin(), out.end(), col.begin());
    }
  }
}

}  // namespace

Stepper::Stepper(const Grid& grid, const Params& params, const Forcing& forcing,
                 const StepConfig& cfg)
    : grid_(grid), params_(params), forcing_(forcing), cfg_(cfg), filter_(grid_), ws_(grid_),
      phi_s_(grid_.surface()) {
  params_.validate();
  cfg_.validate();
  require_shape(forcing_.Q1, grid_, grid_.n_xi);
  require_shape(forcing_.Q2, grid_, grid_.n_xi);
}

State Stepper::step(const State& state) {
  require_shape(state.v, grid_, grid_.n_xi);
  require_shape(state.T, grid_, grid_.n_xi);
  require_shape(state.q, grid_, grid_.n_xi);
  if (!state.all_finite()) throw NonFinite("step: input state not finite");
  const double dt = cfg_.dt;
  const double limit = cfl_dt(state, grid_, params_, cfg_);
  if (dt > limit * (1.0 + 1e-12)) {
    throw CflViolation("dt = " + format_number(dt) + " exceeds CFL limit " + format_number(limit));
  }
  const bool explicit_diffusion = cfg_.diffusion_mode == DiffusionMode::explicit_horizontal;

  // Explicit stage: S * Op(S U) with the unfiltered velocity doing the transport.
  State operand = state;
  if (filter_.active()) {
    filter_.apply(operand.v);
    filter_.apply(operand.T);
    filter_.apply(operand.q);
  }
  const ops::AdvectOptions advect{cfg_.projection_tol, true};
  Tendencies x = inviscid_tendencies(state.v, operand, state.q, params_, grid_, advect);
  if (explicit_diffusion) {
    x.v.add_scaled(1.0 / params_.re1, ops::laplace_vector(operand.v, grid_));
    x.T.add_scaled(1.0 / params_.rt1, ops::laplace_scalar(operand.T, grid_));
    x.q.add_scaled(1.0 / params_.rq1, ops::laplace_scalar(operand.q, grid_));
  }
  if (filter_.active()) {
    filter_.apply(x.v);
    filter_.apply(x.T);
    filter_.apply(x.q);
  }
  x.T += forcing_.Q1;
  x.q += forcing_.Q2;

  State next = state;
  next.v.add_scaled(dt, x.v);
  next.T.add_scaled(dt, x.T);
  next.q.add_scaled(dt, x.q);

  rotate_coriolis(next.v, dt, params_, grid_);

  if (!explicit_diffusion) {
    crank_nicolson(next.v, 1.0 / params_.re1, dt, grid_, cfg_.max_cg_iters);
    crank_nicolson(next.T, 1.0 / params_.rt1, dt, grid_, cfg_.max_cg_iters);
    crank_nicolson(next.q, 1.0 / params_.rq1, dt, grid_, cfg_.max_cg_iters);
  }
  const auto v_bc = boundary_for(FieldKind::velocity, params_);
  vertical_diffusion(next.v.theta, dt, 1.0 / params_.re2, v_bc, grid_);
  vertical_diffusion(next.v.phi, dt, 1.0 / params_.re2, v_bc, grid_);
  vertical_diffusion(next.T, dt, 1.0 / params_.rt2, boundary_for(FieldKind::temperature, params_), grid_);
  vertical_diffusion(next.q, dt, 1.0 / params_.rq2, boundary_for(FieldKind::moisture, params_), grid_);

  if (!next.v.all_finite()) throw NonFinite("step: velocity became non-finite");
  ProjectionResult proj = barotropic_projection(next.v, dt, ws_, cfg_);
  next.v = std::move(proj.v);
  phi_s_ = std::move(proj.phi_s);
  last_iterations_ = proj.iterations;
  next.t = state.t + dt;
  if (!next.all_finite()) throw NonFinite("step: state became non-finite at t = " + format_number(next.t));
  return next;
}

State step(const State& state, const Forcing& forcing, const Params& params,
           const StepConfig& cfg, const Grid& grid) {
  Stepper stepper(grid, params, forcing, cfg);
  return stepper.step(state);
}

}  // namespace mpe
