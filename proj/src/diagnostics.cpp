#include "mpe/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "mpe/errors.hpp"
#include "mpe/operators.hpp"

namespace mpe {

namespace {

double root(double sum, int p) {
  switch (p) {
    case 2: return std::sqrt(sum);
    case 3: return std::cbrt(sum);
    default: return std::sqrt(std::sqrt(sum));
  }
}

double power(double x, int p) {
  switch (p) {
    case 2: return x * x;
    case 3: return x * x * x;
    default: return (x * x) * (x * x);
  }
}

void require_p(int p) {
  if (p < 2 || p > 4) throw OutOfRange("lp_norm: p must be 2, 3 or 4");
}

/// Sum of w_i * dxi * x^2 over interior faces (1 .. n_xi - 1) of a face field.
double interior_faces_sq(const ScalarField& faces, const Grid& grid) {
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int f = 1; f < grid.n_xi; ++f) row += faces(i, j, f) * faces(i, j, f);
    }
    sum += grid.cell_weights[i] * grid.d_xi * row;
  }
  return sum;
}

/// Vertical differences on faces with both boundary faces set to zero.
ScalarField interior_dxi(const ScalarField& s, const Grid& grid) {
  require_shape(s, grid, grid.n_xi);
  ScalarField out = grid.faces();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int f = 1; f < grid.n_xi; ++f) out(i, j, f) = (s(i, j, f) - s(i, j, f - 1)) / grid.d_xi;
    }
  }
  return out;
}

double sq(const ScalarField& a, const Grid& grid) { return inner_omega(a, a, grid); }
double sq(const VectorField& a, const Grid& grid) { return inner_omega(a, a, grid); }

/// |C v|^2 on an arbitrary number of levels with level weight w.
double covariant_sq(const VectorField& v, const Grid& grid, double level_weight, int k_begin, int k_end) {
  const VectorField a = ops::covariant_theta(v, grid);
  const VectorField c = ops::covariant_phi(v, grid);
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = k_begin; k < k_end; ++k) {
        row += a.theta(i, j, k) * a.theta(i, j, k) + a.phi(i, j, k) * a.phi(i, j, k) +
               c.theta(i, j, k) * c.theta(i, j, k) + c.phi(i, j, k) * c.phi(i, j, k);
      }
    }
    sum += grid.cell_weights[i] * level_weight * row;
  }
  return sum;
}

double gradient_sq(const ScalarField& s, const Grid& grid, double level_weight, int k_begin, int k_end) {
  const VectorField g = ops::h_grad(s, grid);
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = k_begin; k < k_end; ++k) {
        row += g.theta(i, j, k) * g.theta(i, j, k) + g.phi(i, j, k) * g.phi(i, j, k);
      }
    }
    sum += grid.cell_weights[i] * level_weight * row;
  }
  return sum;
}

/// Sum over the sphere of T_top * T_trace, the discrete Robin boundary term.
double robin_product(const ScalarField& s, const ops::BoundaryCondition& bc, const Grid& grid) {
  const ScalarField tr = surface_trace(s, bc, grid);
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) row += s(i, j, grid.n_xi - 1) * tr(i, j, 0);
    sum += grid.cell_weights[i] * row;
  }
  return sum;
}

}  // namespace

double lp_norm(const ScalarField& field, int p, const Grid& grid) {
  require_p(p);
  require_shape(field, grid, grid.n_xi);
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < grid.n_xi; ++k) row += power(std::abs(field(i, j, k)), p);
    }
    sum += grid.cell_weights[i] * grid.d_xi * row;
  }
  return root(sum, p);
}

double lp_norm(const VectorField& field, int p, const Grid& grid) {
  require_p(p);
  require_shape(field, grid, grid.n_xi);
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) {
      for (int k = 0; k < grid.n_xi; ++k) {
        const double m2 = field.theta(i, j, k) * field.theta(i, j, k) + field.phi(i, j, k) * field.phi(i, j, k);
        row += p == 2 ? m2 : (p == 4 ? m2 * m2 : m2 * std::sqrt(m2));
      }
    }
    sum += grid.cell_weights[i] * grid.d_xi * row;
  }
  return root(sum, p);
}

double energy(const State& state, const Grid& grid) {
  return sq(state.v, grid) + sq(state.T, grid) + sq(state.q, grid);
}

ScalarField surface_trace(const ScalarField& field, const ops::BoundaryCondition& bc, const Grid& grid) {
  require_shape(field, grid, grid.n_xi);
  ScalarField out = grid.surface();
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      const double top = field(i, j, grid.n_xi - 1);
      out(i, j, 0) = 0.5 * (top + ops::top_ghost(top, bc, grid.d_xi));
    }
  }
  return out;
}

double trace_norm(const ScalarField& field, const ops::BoundaryCondition& bc, int p, const Grid& grid) {
  require_p(p);
  const ScalarField tr = surface_trace(field, bc, grid);
  double sum = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_phi; ++j) row += power(std::abs(tr(i, j, 0)), p);
    sum += grid.cell_weights[i] * row;
  }
  return root(sum, p);
}

double dxi_norm(const ScalarField& field, const Grid& grid) {
  return std::sqrt(interior_faces_sq(interior_dxi(field, grid), grid));
}

double dxi_norm(const VectorField& field, const Grid& grid) {
  return std::sqrt(interior_faces_sq(interior_dxi(field.theta, grid), grid) +
                   interior_faces_sq(interior_dxi(field.phi, grid), grid));
}

H1Norms h1_norm(const State& state, const Grid& grid, const Params& /*params*/) {
  require_shape(state.v, grid, grid.n_xi);
  require_shape(state.T, grid, grid.n_xi);
  require_shape(state.q, grid, grid.n_xi);
  H1Norms n;
  const double vxi = interior_faces_sq(interior_dxi(state.v.theta, grid), grid) +
                     interior_faces_sq(interior_dxi(state.v.phi, grid), grid);
  n.v_sq = covariant_sq(state.v, grid, grid.d_xi, 0, grid.n_xi) + vxi + sq(state.v, grid);
  n.T_sq = gradient_sq(state.T, grid, grid.d_xi, 0, grid.n_xi) +
           interior_faces_sq(interior_dxi(state.T, grid), grid) + sq(state.T, grid);
  n.q_sq = gradient_sq(state.q, grid, grid.d_xi, 0, grid.n_xi) +
           interior_faces_sq(interior_dxi(state.q, grid), grid) + sq(state.q, grid);
  n.U_sq = n.v_sq + n.T_sq + n.q_sq;
  n.v = std::sqrt(n.v_sq);
  n.T = std::sqrt(n.T_sq);
  n.q = std::sqrt(n.q_sq);
  n.U = std::sqrt(n.U_sq);
  return n;
}

EnergyBudget energy_budget(const State& state, const Forcing& forcing, const Params& params,
                           const Grid& grid, DiffusionMode mode) {
  require_shape(forcing.Q1, grid, grid.n_xi);
  require_shape(forcing.Q2, grid, grid.n_xi);
  State h = state;
  if (mode == DiffusionMode::explicit_horizontal) {
    const PolarFilter filter(grid);
    if (filter.active()) {
      filter.apply(h.v);
      filter.apply(h.T);
      filter.apply(h.q);
    }
  }
  const auto t_bc = boundary_for(FieldKind::temperature, params);
  const auto q_bc = boundary_for(FieldKind::moisture, params);
  EnergyBudget b;
  b.diss_v = (covariant_sq(h.v, grid, grid.d_xi, 0, grid.n_xi) + sq(h.v, grid)) / params.re1 +
             (interior_faces_sq(interior_dxi(state.v.theta, grid), grid) +
              interior_faces_sq(interior_dxi(state.v.phi, grid), grid)) / params.re2;
  b.diss_T = gradient_sq(h.T, grid, grid.d_xi, 0, grid.n_xi) / params.rt1 +
             (interior_faces_sq(interior_dxi(state.T, grid), grid) +
              params.alpha_s * robin_product(state.T, t_bc, grid)) / params.rt2;
  b.diss_q = gradient_sq(h.q, grid, grid.d_xi, 0, grid.n_xi) / params.rq1 +
             (interior_faces_sq(interior_dxi(state.q, grid), grid) +
              params.beta_s * robin_product(state.q, q_bc, grid)) / params.rq2;
  b.forcing_T = inner_omega(forcing.Q1, state.T, grid);
  b.forcing_q = inner_omega(forcing.Q2, state.q, grid);
  return b;
}

double energy_residual(double e0, const EnergyBudget& b0, double e1, const EnergyBudget& b1, double dt) {
  if (!(dt > 0.0)) return 0.0;
  const double rate = (e1 - e0) / (2.0 * dt);
  return std::abs(rate + 0.5 * (b0.dissipation() + b1.dissipation()) - 0.5 * (b0.forcing() + b1.forcing()));
}

DiagRecord make_record(const State& state, long step, const Forcing& forcing, const Params& params,
                       const Grid& grid, DiffusionMode mode, const DiagRecord* previous) {
  DiagRecord r;
  r.t = state.t;
  r.step = step;
  const double v2 = sq(state.v, grid), T2 = sq(state.T, grid), q2 = sq(state.q, grid);
  r.v_l2 = std::sqrt(v2);
  r.T_l2 = std::sqrt(T2);
  r.q_l2 = std::sqrt(q2);
  r.U_l2 = std::sqrt(v2 + T2 + q2);
  const VectorField vt = ops::fluctuation(state.v, grid);
  r.vtilde_l3 = lp_norm(vt, 3, grid);
  r.T_l3 = lp_norm(state.T, 3, grid);
  r.vtilde_l4 = lp_norm(vt, 4, grid);
  r.T_l4 = lp_norm(state.T, 4, grid);
  r.q_l4 = lp_norm(state.q, 4, grid);
  const H1Norms h = h1_norm(state, grid, params);
  r.v_h1 = h.v;
  r.T_h1 = h.T;
  r.q_h1 = h.q;
  r.U_h1 = h.U;
  const auto t_bc = boundary_for(FieldKind::temperature, params);
  const auto q_bc = boundary_for(FieldKind::moisture, params);
  r.T_trace_l2 = trace_norm(state.T, t_bc, 2, grid);
  r.q_trace_l2 = trace_norm(state.q, q_bc, 2, grid);
  r.T_trace_l4 = trace_norm(state.T, t_bc, 4, grid);
  r.q_trace_l4 = trace_norm(state.q, q_bc, 4, grid);
  r.vxi_l2 = dxi_norm(state.v, grid);
  r.Txi_l2 = dxi_norm(state.T, grid);
  r.qxi_l2 = dxi_norm(state.q, grid);
  const VectorField vbar = ops::vertical_average(state.v, grid);
  r.vbar_h1 = std::sqrt(covariant_sq(vbar, grid, 1.0, 0, 1) + inner_sphere(vbar, vbar, grid, 0));
  r.constraint_residual = ops::column_divergence(state.v, grid).max_abs();
  r.v_max = state.v.max_norm();
  const EnergyBudget b = energy_budget(state, forcing, params, grid, mode);
  r.diss_v = b.diss_v;
  r.diss_T = b.diss_T;
  r.diss_q = b.diss_q;
  r.forcing_T = b.forcing_T;
  r.forcing_q = b.forcing_q;
  if (previous != nullptr) {
    r.energy_residual = energy_residual(previous->energy(), previous->budget(), r.energy(), b,
                                        r.t - previous->t);
  }
  return r;
}

// ---------------------------------------------------------------- CSV

namespace {

struct Column {
  const char* name;
  double DiagRecord::*member;
};

constexpr Column kColumns[] = {
    {"t", &DiagRecord::t},
    {"v_l2", &DiagRecord::v_l2},
    {"T_l2", &DiagRecord::T_l2},
    {"q_l2", &DiagRecord::q_l2},
    {"U_l2", &DiagRecord::U_l2},
    {"vtilde_l3", &DiagRecord::vtilde_l3},
    {"T_l3", &DiagRecord::T_l3},
    {"vtilde_l4", &DiagRecord::vtilde_l4},
    {"T_l4", &DiagRecord::T_l4},
    {"q_l4", &DiagRecord::q_l4},
    {"v_h1", &DiagRecord::v_h1},
    {"T_h1", &DiagRecord::T_h1},
    {"q_h1", &DiagRecord::q_h1},
    {"U_h1", &DiagRecord::U_h1},
    {"T_trace_l2", &DiagRecord::T_trace_l2},
    {"q_trace_l2", &DiagRecord::q_trace_l2},
    {"T_trace_l4", &DiagRecord::T_trace_l4},
    {"q_trace_l4", &DiagRecord::q_trace_l4},
    {"vxi_l2", &DiagRecord::vxi_l2},
    {"Txi_l2", &DiagRecord::Txi_l2},
    {"qxi_l2", &DiagRecord::qxi_l2},
    {"vbar_h1", &DiagRecord::vbar_h1},
    {"constraint_residual", &DiagRecord::constraint_residual},
    {"v_max", &DiagRecord::v_max},
    {"diss_v", &DiagRecord::diss_v},
    {"diss_T", &DiagRecord::diss_T},
    {"diss_q", &DiagRecord::diss_q},
    {"forcing_T", &DiagRecord::forcing_T},
    {"forcing_q", &DiagRecord::forcing_q},
    {"energy_residual", &DiagRecord::energy_residual},
};

}  // namespace

const std::vector<std::string>& diag_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"t", "step"};
    for (const Column& c : kColumns) {
      if (std::string(c.name) != "t") out.emplace_back(c.name);
    }
    return out;
  }();
  return names;
}

std::string csv_header() {
  std::string out;
  for (const auto& name : diag_columns()) {
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

std::string csv_row(const DiagRecord& r) {
  char buf[40];
  std::string out;
  std::snprintf(buf, sizeof buf, "%.17g,%ld", r.t, r.step);
  out += buf;
  for (const Column& c : kColumns) {
    if (c.member == &DiagRecord::t) continue;
    std::snprintf(buf, sizeof buf, ",%.17g", r.*(c.member));
    out += buf;
  }
  return out;
}

DiagRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() != diag_columns().size()) {
    throw ParseError(0, "expected " + std::to_string(diag_columns().size()) + " columns, got " +
                            std::to_string(cells.size()));
  }
  const auto number = [](const std::string& s) {
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ParseError(0, "bad number '" + s + "'");
    return x;
  };
  DiagRecord r;
  r.t = number(cells[0]);
  r.step = static_cast<long>(number(cells[1]));
  std::size_t n = 2;
  for (const Column& c : kColumns) {
    if (c.member == &DiagRecord::t) continue;
    r.*(c.member) = number(cells[n++]);
  }
  return r;
}

// ---------------------------------------------------------------- run-level checks

double decay_constant(const Params& p) {
  return std::min({1.0 / p.re1, 1.0 / (2.0 * p.rt2), p.alpha_s / (2.0 * p.rt2), 1.0 / (2.0 * p.rq2),
                   p.beta_s / (2.0 * p.rq2)});
}

DecayReport decay_envelope(std::span<const DiagRecord> series, const Params& params) {
  if (series.empty()) throw EmptySeries("decay_envelope: empty series");
  DecayReport rep;
  rep.c0 = decay_constant(params);
  const double e0 = series.front().energy();
  const double t0 = series.front().t;
  double n = 0, st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t m = 0; m < series.size(); ++m) {
    const double e = series[m].energy();
    if (m > 0 && e > series[m - 1].energy() * (1.0 + 1e-10)) rep.monotone = false;
    if (e > e0 * std::exp(-0.5 * rep.c0 * (series[m].t - t0)) * (1.0 + 1e-12)) rep.envelope_ok = false;
    if (e > 0.0) {
      const double t = series[m].t, l = std::log(e);
      n += 1;
      st += t;
      sl += l;
      stt += t * t;
      stl += t * l;
    }
  }
  const double den = n * stt - st * st;
  if (n >= 2 && den > 0.0) rep.fitted_rate = -(n * stl - st * sl) / den;
  return rep;
}

double separation(const State& a, const State& b, const Grid& grid) {
  return sq(a.v - b.v, grid) + sq(a.T - b.T, grid) + sq(a.q - b.q, grid);
}

double twin_coefficient(const State& b, const Grid& grid, const Params& /*params*/) {
  const double v4 = lp_norm(b.v, 4, grid), T4 = lp_norm(b.T, 4, grid), q4 = lp_norm(b.q, 4, grid);
  const auto p8 = [](double x) { const double x2 = x * x, x4 = x2 * x2; return x4 * x4; };
  // v_xi on faces and its horizontal covariant derivative, interior faces only.
  const VectorField vxi(interior_dxi(b.v.theta, grid), interior_dxi(b.v.phi, grid));
  const double vxi2 = interior_faces_sq(vxi.theta, grid) + interior_faces_sq(vxi.phi, grid);
  const double grad_vxi2 = covariant_sq(vxi, grid, grid.d_xi, 1, grid.n_xi);
  const ScalarField txi = interior_dxi(b.T, grid), qxi = interior_dxi(b.q, grid);
  const double txi2 = interior_faces_sq(txi, grid), qxi2 = interior_faces_sq(qxi, grid);
  const double grad_txi2 = gradient_sq(txi, grid, grid.d_xi, 1, grid.n_xi);
  const double grad_qxi2 = gradient_sq(qxi, grid, grid.d_xi, 1, grid.n_xi);
  const double kv = p8(v4) + p8(T4) + p8(q4) + vxi2 + (vxi2 + 1.0) * grad_vxi2;
  const double kt = p8(v4) + p8(T4) + txi2 + (txi2 + 1.0) * grad_txi2;
  const double kq = p8(v4) + T4 * T4 + T4 * T4 * T4 * T4 + p8(q4) + qxi2 + (qxi2 + 1.0) * grad_qxi2;
  return std::max({kv, kt, kq});
}

std::vector<TwinPoint> twin_separation(std::span<const State> run_a, std::span<const State> run_b,
                                       const Grid& grid, const Params& params) {
  if (run_a.size() != run_b.size()) {
    throw LengthMismatch("twin_separation: runs have " + std::to_string(run_a.size()) + " and " +
                         std::to_string(run_b.size()) + " states");
  }
  std::vector<TwinPoint> out;
  out.reserve(run_a.size());
  for (std::size_t n = 0; n < run_a.size(); ++n) {
    const State& a = run_a[n];
    const State& b = run_b[n];
    require_shape(a.v, grid, grid.n_xi);
    require_shape(b.v, grid, grid.n_xi);
    out.push_back({b.t, separation(a, b, grid), twin_coefficient(b, grid, params)});
  }
  return out;
}

EnergySplit barotropic_baroclinic_energy(const VectorField& v, const Grid& grid) {
  require_shape(v, grid, grid.n_xi);
  const VectorField bar = ops::vertical_average(v, grid);
  return {inner_sphere(bar, bar, grid, 0), sq(ops::fluctuation(v, grid), grid)};
}

AbsorbReport absorbing_stats(std::span<const std::vector<DiagRecord>> ensemble, double t_transient) {
  if (ensemble.size() < 2) throw InsufficientMembers("absorbing_stats needs at least 2 members");
  AbsorbReport rep;
  for (const auto& series : ensemble) {
    if (series.empty()) throw EmptySeries("absorbing_stats: empty member series");
    double sup = 0.0;
    bool any = false;
    for (const auto& r : series) {
      if (r.t >= t_transient) {
        sup = std::max(sup, r.U_h1);
        any = true;
      }
    }
    if (!any) sup = series.back().U_h1;
    rep.late_sup.push_back(sup);

    const double t_end = series.back().t;
    const double t_start = series.front().t + 2.0 * (t_end - series.front().t) / 3.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : series) {
      if (r.t >= t_start) {
        lo = std::min(lo, r.U_h1);
        hi = std::max(hi, r.U_h1);
      }
    }
    rep.flatness.push_back(hi > 0.0 ? (hi - lo) / hi : 0.0);
  }
  rep.rho_hat = *std::max_element(rep.late_sup.begin(), rep.late_sup.end());
  const double lo = *std::min_element(rep.late_sup.begin(), rep.late_sup.end());
  rep.spread = rep.rho_hat == lo ? 1.0 : (lo > 0.0 ? rep.rho_hat / lo : std::numeric_limits<double>::infinity());
  for (const auto& series : ensemble) {
    // First time after which the norm never exceeds rho_hat again.
    std::size_t first = series.size();
    for (std::size_t m = series.size(); m-- > 0;) {
      if (series[m].U_h1 > rep.rho_hat) break;
      first = m;
    }
    rep.entry_times.push_back(first < series.size() ? series[first].t
                                                    : std::numeric_limits<double>::infinity());
  }
  return rep;
}

}  // namespace mpe
