#include "mpe/operators.hpp"

#include <algorithm>
#include <cmath>

#include "mpe/errors.hpp"

namespace mpe::ops {

namespace {

void require_horizontal(const ScalarField& f, const Grid& grid) {
  if (f.n_theta() != grid.n_theta || f.n_phi() != grid.n_phi || f.n_lev() < 1) {
    throw ShapeMismatch("field does not match the horizontal grid");
  }
}

void require_horizontal(const VectorField& f, const Grid& grid) {
  if (!f.theta.same_shape(f.phi)) throw ShapeMismatch("vector components differ in shape");
  require_horizontal(f.theta, grid);
}

int east(int j, int n) { return j + 1 == n ? 0 : j + 1; }
int west(int j, int n) { return j == 0 ? n - 1 : j - 1; }

// out(i, j, :) = f(i, j, k) for pointwise products
ScalarField multiply(const ScalarField& a, const ScalarField& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("pointwise product of mismatched fields");
  ScalarField out = a;
  auto& o = out.values();
  const auto& y = b.values();
  for (std::size_t n = 0; n < o.size(); ++n) o[n] *= y[n];
  return out;
}

}  // namespace

ScalarField div_theta_part(const ScalarField& u, const Grid& grid) {
  require_horizontal(u, grid);
  const int nt = grid.n_theta, np = grid.n_phi, nl = u.n_lev();
  ScalarField out(nt, np, nl);
  for (int i = 0; i < nt; ++i) {
    const double inv = 1.0 / (grid.d_theta * grid.metric_sin[i]);
    const double sn = 0.5 * grid.face_sin[i + 1];
    const double ss = 0.5 * grid.face_sin[i];
    for (int j = 0; j < np; ++j) {
      for (int k = 0; k < nl; ++k) {
        const double c = u(i, j, k);
        const double north = i + 1 < nt ? sn * (c + u(i + 1, j, k)) : 0.0;
        const double south = i > 0 ? ss * (u(i - 1, j, k) + c) : 0.0;
        out(i, j, k) = (north - south) * inv;
      }
    }
  }
  return out;
}

ScalarField div_phi_part(const ScalarField& u, const Grid& grid) {
  require_horizontal(u, grid);
  const int nt = grid.n_theta, np = grid.n_phi, nl = u.n_lev();
  ScalarField out(nt, np, nl);
  for (int i = 0; i < nt; ++i) {
    const double inv = 1.0 / (2.0 * grid.d_phi * grid.metric_sin[i]);
    for (int j = 0; j < np; ++j) {
      const int je = east(j, np), jw = west(j, np);
      for (int k = 0; k < nl; ++k) out(i, j, k) = (u(i, je, k) - u(i, jw, k)) * inv;
    }
  }
  return out;
}

ScalarField grad_theta(const ScalarField& s, const Grid& grid) {
  require_horizontal(s, grid);
  const int nt = grid.n_theta, np = grid.n_phi, nl = s.n_lev();
  ScalarField out(nt, np, nl);
  for (int i = 0; i < nt; ++i) {
    const double inv = 1.0 / (2.0 * grid.d_theta * grid.metric_sin[i]);
    const double sn = grid.face_sin[i + 1];
    const double ss = grid.face_sin[i];
    for (int j = 0; j < np; ++j) {
      for (int k = 0; k < nl; ++k) {
        const double c = s(i, j, k);
        const double north = i + 1 < nt ? sn * (s(i + 1, j, k) - c) : 0.0;
        const double south = i > 0 ? ss * (c - s(i - 1, j, k)) : 0.0;
        out(i, j, k) = (north + south) * inv;
      }
    }
  }
  return out;
}

ScalarField grad_phi(const ScalarField& s, const Grid& grid) { return div_phi_part(s, grid); }

ScalarField h_div(const VectorField& u, const Grid& grid) {
  require_horizontal(u, grid);
  ScalarField out = div_theta_part(u.theta, grid);
  out += div_phi_part(u.phi, grid);
  return out;
}

VectorField h_grad(const ScalarField& s, const Grid& grid) {
  return {grad_theta(s, grid), grad_phi(s, grid)};
}

ScalarField advect_scalar(const VectorField& v, const ScalarField& s, const Grid& grid) {
  require_horizontal(v, grid);
  if (!v.theta.same_shape(s)) throw ShapeMismatch("advect_scalar: v and s differ in shape");
  const VectorField g = h_grad(s, grid);
  const ScalarField flux_div = h_div(VectorField(multiply(s, v.theta), multiply(s, v.phi)), grid);
  const ScalarField dv = h_div(v, grid);
  ScalarField out(s.n_theta(), s.n_phi(), s.n_lev());
  auto& o = out.values();
  const auto &vt = v.theta.values(), &vp = v.phi.values(), &gt = g.theta.values(),
             &gp = g.phi.values(), &fd = flux_div.values(), &d = dv.values(), &x = s.values();
  for (std::size_t n = 0; n < o.size(); ++n) {
    o[n] = 0.5 * (vt[n] * gt[n] + vp[n] * gp[n] + fd[n] - x[n] * d[n]);
  }
  return out;
}

namespace {

void add_metric_terms(const VectorField& v, const VectorField& w, VectorField& out,
                      const Grid& grid) {
  for (int i = 0; i < grid.n_theta; ++i) {
    const double cot = grid.cot_theta[i];
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < v.n_lev(); ++k) {
        const double vp = v.phi(i, j, k);
        out.theta(i, j, k) -= vp * w.phi(i, j, k) * cot;
        out.phi(i, j, k) += vp * w.theta(i, j, k) * cot;
      }
    }
  }
}

// Vertical transport W ds/dxi averaged from the two interior faces of each cell.
void add_vertical_transport(const ScalarField& W, const ScalarField& s, ScalarField& out,
                            const Grid& grid) {
  const int nx = grid.n_xi;
  const double inv = 1.0 / (2.0 * grid.d_xi);
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto w = W.column(i, j);
      const auto c = s.column(i, j);
      auto o = out.column(i, j);
      for (int k = 0; k < nx; ++k) {
        double acc = 0.0;
        if (k + 1 < nx) acc += w[k + 1] * (c[k + 1] - c[k]);
        if (k > 0) acc += w[k] * (c[k] - c[k - 1]);
        o[k] += acc * inv;
      }
    }
  }
}

void check_constraint(const VectorField& v, const ScalarField& W, const Grid& grid,
                      const AdvectOptions& options) {
  if (!options.check_constraint) return;
  double residual = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) residual = std::max(residual, std::abs(W(i, j, 0)));
  }
  const double limit = 100.0 * options.constraint_tol * v.max_norm();
  if (residual > limit) {
    throw ConstraintViolated("column divergence residual " + format_number(residual) +
                             " exceeds " + format_number(limit));
  }
}

}  // namespace

VectorField advect_vector(const VectorField& v, const VectorField& w, const Grid& grid) {
  if (!v.same_shape(w)) throw ShapeMismatch("advect_vector: v and w differ in shape");
  VectorField out(advect_scalar(v, w.theta, grid), advect_scalar(v, w.phi, grid));
  add_metric_terms(v, w, out, grid);
  return out;
}

ScalarField vertical_velocity(const VectorField& v, const Grid& grid) {
  require_shape(v, grid, grid.n_xi);
  const ScalarField d = h_div(v, grid);
  ScalarField W = grid.faces();
  const int nx = grid.n_xi;
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto dc = d.column(i, j);
      auto wc = W.column(i, j);
      wc[nx] = 0.0;
      for (int f = nx - 1; f >= 0; --f) wc[f] = wc[f + 1] + grid.d_xi * dc[f];
    }
  }
  return W;
}

ScalarField column_divergence(const VectorField& v, const Grid& grid) {
  const ScalarField W = vertical_velocity(v, grid);
  ScalarField out = grid.surface();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) out(i, j, 0) = W(i, j, 0);
  }
  return out;
}

ScalarField full_advect(const VectorField& v, const ScalarField& s, const Grid& grid,
                        const AdvectOptions& options) {
  require_shape(v, grid, grid.n_xi);
  require_shape(s, grid, grid.n_xi);
  const ScalarField W = vertical_velocity(v, grid);
  check_constraint(v, W, grid, options);
  ScalarField out = advect_scalar(v, s, grid);
  add_vertical_transport(W, s, out, grid);
  return out;
}

VectorField full_advect(const VectorField& v, const VectorField& w, const Grid& grid,
                        const AdvectOptions& options) {
  require_shape(v, grid, grid.n_xi);
  require_shape(w, grid, grid.n_xi);
  const ScalarField W = vertical_velocity(v, grid);
  check_constraint(v, W, grid, options);
  VectorField out = advect_vector(v, w, grid);
  add_vertical_transport(W, w.theta, out.theta, grid);
  add_vertical_transport(W, w.phi, out.phi, grid);
  return out;
}

ScalarField laplace_scalar(const ScalarField& s, const Grid& grid) {
  return h_div(h_grad(s, grid), grid);
}

VectorField covariant_theta(const VectorField& u, const Grid& grid) {
  require_horizontal(u, grid);
  return {grad_theta(u.theta, grid), grad_theta(u.phi, grid)};
}

VectorField covariant_phi(const VectorField& u, const Grid& grid) {
  require_horizontal(u, grid);
  VectorField out(grad_phi(u.theta, grid), grad_phi(u.phi, grid));
  for (int i = 0; i < grid.n_theta; ++i) {
    const double cot = grid.cot_theta[i];
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < u.n_lev(); ++k) {
        out.theta(i, j, k) -= cot * u.phi(i, j, k);
        out.phi(i, j, k) += cot * u.theta(i, j, k);
      }
    }
  }
  return out;
}

VectorField laplace_vector(const VectorField& u, const Grid& grid) {
  const VectorField a = covariant_theta(u, grid);
  const VectorField c = covariant_phi(u, grid);
  VectorField out(div_theta_part(a.theta, grid), div_theta_part(a.phi, grid));
  out.theta += div_phi_part(c.theta, grid);
  out.phi += div_phi_part(c.phi, grid);
  for (int i = 0; i < grid.n_theta; ++i) {
    const double cot = grid.cot_theta[i];
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < u.n_lev(); ++k) {
        out.theta(i, j, k) -= cot * c.phi(i, j, k) + u.theta(i, j, k);
        out.phi(i, j, k) += cot * c.theta(i, j, k) - u.phi(i, j, k);
      }
    }
  }
  return out;
}

HydrostaticWeights hydrostatic_weights(const Grid& grid, const Params& params) {
  const double scale = params.b * params.p_cap / (params.p_cap - params.p0);
  HydrostaticWeights hw;
  hw.full_cell.resize(grid.n_xi);
  hw.lower_half.resize(grid.n_xi);
  for (int k = 0; k < grid.n_xi; ++k) {
    const double upper = pressure_of_xi(grid.xi_faces[k], params);
    const double lower = pressure_of_xi(grid.xi_faces[k + 1], params);
    const double centre = pressure_of_xi(grid.xi_centers[k], params);
    hw.full_cell[k] = scale * std::log(lower / upper);
    hw.lower_half[k] = scale * std::log(lower / centre);
  }
  return hw;
}

namespace {

void require_thermo(const ScalarField& T, const ScalarField& q, const ScalarField& phi_s,
                    const Grid& grid) {
  require_shape(T, grid, grid.n_xi);
  require_shape(q, grid, grid.n_xi);
  require_shape(phi_s, grid, 1);
}

}  // namespace

ScalarField hydrostatic_phi(const ScalarField& T, const ScalarField& q, const ScalarField& phi_s,
                            const Params& params, const Grid& grid) {
  require_thermo(T, q, phi_s, grid);
  const HydrostaticWeights hw = hydrostatic_weights(grid, params);
  ScalarField phi = grid.scalar();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto t = T.column(i, j);
      const auto m = q.column(i, j);
      auto out = phi.column(i, j);
      double below = 0.0;
      for (int k = grid.n_xi - 1; k >= 0; --k) {
        const double buoyant = (1.0 + params.a * m[k]) * t[k];
        out[k] = phi_s(i, j, 0) + (below + hw.lower_half[k] * buoyant);
        below += hw.full_cell[k] * buoyant;
      }
    }
  }
  return phi;
}

ScalarField hydrostatic_phi_faces(const ScalarField& T, const ScalarField& q,
                                  const ScalarField& phi_s, const Params& params,
                                  const Grid& grid) {
  require_thermo(T, q, phi_s, grid);
  const HydrostaticWeights hw = hydrostatic_weights(grid, params);
  ScalarField phi = grid.faces();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto t = T.column(i, j);
      const auto m = q.column(i, j);
      auto out = phi.column(i, j);
      double below = 0.0;
      out[grid.n_xi] = phi_s(i, j, 0);
      for (int f = grid.n_xi - 1; f >= 0; --f) {
        below += hw.full_cell[f] * (1.0 + params.a * m[f]) * t[f];
        out[f] = phi_s(i, j, 0) + below;
      }
    }
  }
  return phi;
}

VectorField pressure_gradient(const ScalarField& T, const ScalarField& q, const Params& params,
                              const Grid& grid) {
  return h_grad(hydrostatic_phi(T, q, grid.surface(), params, grid), grid);
}

ScalarField buoyancy_coupling(const VectorField& v, const ScalarField& q, const Params& params,
                              const Grid& grid) {
  require_shape(v, grid, grid.n_xi);
  require_shape(q, grid, grid.n_xi);
  const HydrostaticWeights hw = hydrostatic_weights(grid, params);
  const ScalarField d = h_div(v, grid);
  ScalarField out = grid.scalar();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto dc = d.column(i, j);
      const auto m = q.column(i, j);
      auto o = out.column(i, j);
      double above = 0.0;  // sum of div v over the cells nearer xi = 0
      for (int k = 0; k < grid.n_xi; ++k) {
        const double weighted_w = -(hw.lower_half[k] * dc[k] + hw.full_cell[k] * above);
        o[k] = (1.0 + params.a * m[k]) * weighted_w;
        above += dc[k];
      }
    }
  }
  return out;
}

ScalarField vertical_average(const ScalarField& s, const Grid& grid) {
  // A single-level field is already xi-independent.
  if (s.n_lev() == 1) {
    require_shape(s, grid, 1);
    return s;
  }
  require_shape(s, grid, grid.n_xi);
  ScalarField out = grid.surface();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      double sum = 0.0;
      for (double x : s.column(i, j)) sum += x;
      out(i, j, 0) = sum / grid.n_xi;
    }
  }
  return out;
}

VectorField vertical_average(const VectorField& u, const Grid& grid) {
  return {vertical_average(u.theta, grid), vertical_average(u.phi, grid)};
}

VectorField fluctuation(const VectorField& u, const Grid& grid) {
  const VectorField mean = vertical_average(u, grid);
  VectorField out = u;
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < grid.n_xi; ++k) {
        out.theta(i, j, k) -= mean.theta(i, j, 0);
        out.phi(i, j, k) -= mean.phi(i, j, 0);
      }
    }
  }
  return out;
}

double top_ghost(double top, const BoundaryCondition& bc, double d_xi) {
  switch (bc.kind) {
    case BoundaryCondition::Kind::neumann:
      return top;
    case BoundaryCondition::Kind::robin_top: {
      const double h = 0.5 * bc.coef * d_xi;
      return top * ((1.0 - h) / (1.0 + h));
    }
  }
  throw UnknownBC("unknown vertical boundary kind");
}

ScalarField with_ghosts(const ScalarField& s, const BoundaryCondition& bc, const Grid& grid) {
  require_shape(s, grid, grid.n_xi);
  const int nx = grid.n_xi;
  ScalarField out(grid.n_theta, grid.n_phi, nx + 2);
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto c = s.column(i, j);
      auto o = out.column(i, j);
      o[0] = c[0];
      std::copy(c.begin(), c.end(), o.begin() + 1);
      o[nx + 1] = top_ghost(c[nx - 1], bc, grid.d_xi);
    }
  }
  return out;
}

ScalarField d_xi(const ScalarField& s, const BoundaryCondition& bc, const Grid& grid) {
  const ScalarField g = with_ghosts(s, bc, grid);
  ScalarField out = grid.scalar();
  const double inv = 1.0 / (2.0 * grid.d_xi);
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto c = g.column(i, j);
      auto o = out.column(i, j);
      for (int k = 0; k < grid.n_xi; ++k) o[k] = (c[k + 2] - c[k]) * inv;
    }
  }
  return out;
}

ScalarField d_xi_faces(const ScalarField& s, const BoundaryCondition& bc, const Grid& grid) {
  const ScalarField g = with_ghosts(s, bc, grid);
  ScalarField out = grid.faces();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto c = g.column(i, j);
      auto o = out.column(i, j);
      for (int f = 0; f <= grid.n_xi; ++f) o[f] = (c[f + 1] - c[f]) / grid.d_xi;
    }
  }
  return out;
}

}  // namespace mpe::ops
