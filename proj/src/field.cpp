#include "mpe/field.hpp"

#include <algorithm>
#include <cmath>

#include "mpe/errors.hpp"

namespace mpe {

namespace {

void require_same(const ScalarField& a, const ScalarField& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("field shapes differ");
}

}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same(*this, other);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same(*this, other);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
  return *this;
}

ScalarField& ScalarField::operator*=(double factor) {
  for (double& x : values_) x *= factor;
  return *this;
}

ScalarField& ScalarField::add_scaled(double factor, const ScalarField& other) {
  require_same(*this, other);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += factor * other.values_[n];
  return *this;
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

double ScalarField::max_abs() const noexcept {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

ScalarField operator+(ScalarField lhs, const ScalarField& rhs) { return lhs += rhs; }
ScalarField operator-(ScalarField lhs, const ScalarField& rhs) { return lhs -= rhs; }
ScalarField operator*(double factor, ScalarField field) { return field *= factor; }

VectorField::VectorField(ScalarField comp_theta, ScalarField comp_phi)
    : theta(std::move(comp_theta)), phi(std::move(comp_phi)) {
  require_same(theta, phi);
}

VectorField& VectorField::operator+=(const VectorField& other) {
  theta += other.theta;
  phi += other.phi;
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  theta -= other.theta;
  phi -= other.phi;
  return *this;
}

VectorField& VectorField::operator*=(double factor) {
  theta *= factor;
  phi *= factor;
  return *this;
}

VectorField& VectorField::add_scaled(double factor, const VectorField& other) {
  theta.add_scaled(factor, other.theta);
  phi.add_scaled(factor, other.phi);
  return *this;
}

double VectorField::max_norm() const noexcept {
  const auto& a = theta.values();
  const auto& b = phi.values();
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::hypot(a[n], b[n]));
  return m;
}

VectorField operator+(VectorField lhs, const VectorField& rhs) { return lhs += rhs; }
VectorField operator-(VectorField lhs, const VectorField& rhs) { return lhs -= rhs; }
VectorField operator*(double factor, VectorField field) { return field *= factor; }

}  // namespace mpe
