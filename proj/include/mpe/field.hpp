#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mpe {

/// Cell-centred scalar on an (n_theta x n_phi x n_lev) block, row-major with
/// theta slowest and the vertical index fastest. Surface fields use n_lev = 1,
/// vertical-face fields use n_lev = n_xi + 1.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int n_theta, int n_phi, int n_lev, double fill = 0.0)
      : n_theta_(n_theta), n_phi_(n_phi), n_lev_(n_lev),
        values_(static_cast<std::size_t>(n_theta) * n_phi * n_lev, fill) {}

  int n_theta() const noexcept { return n_theta_; }
  int n_phi() const noexcept { return n_phi_; }
  int n_lev() const noexcept { return n_lev_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(i) * n_phi_ + j) * n_lev_ + k;
  }
  double& operator()(int i, int j, int k) noexcept { return values_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const noexcept { return values_[index(i, j, k)]; }

  std::span<double> column(int i, int j) noexcept {
    return {values_.data() + index(i, j, 0), static_cast<std::size_t>(n_lev_)};
  }
  std::span<const double> column(int i, int j) const noexcept {
    return {values_.data() + index(i, j, 0), static_cast<std::size_t>(n_lev_)};
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool same_shape(const ScalarField& other) const noexcept {
    return n_theta_ == other.n_theta_ && n_phi_ == other.n_phi_ && n_lev_ == other.n_lev_;
  }

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double factor);
  /// this += factor * other
  ScalarField& add_scaled(double factor, const ScalarField& other);

  bool all_finite() const noexcept;
  double max_abs() const noexcept;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  int n_theta_ = 0;
  int n_phi_ = 0;
  int n_lev_ = 0;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField lhs, const ScalarField& rhs);
ScalarField operator-(ScalarField lhs, const ScalarField& rhs);
ScalarField operator*(double factor, ScalarField field);

/// Horizontal vector field in the local (e_theta, e_phi) frame.
struct VectorField {
  ScalarField theta;
  ScalarField phi;

  VectorField() = default;
  VectorField(int n_theta, int n_phi, int n_lev, double fill = 0.0)
      : theta(n_theta, n_phi, n_lev, fill), phi(n_theta, n_phi, n_lev, fill) {}
  VectorField(ScalarField comp_theta, ScalarField comp_phi);

  int n_theta() const noexcept { return theta.n_theta(); }
  int n_phi() const noexcept { return theta.n_phi(); }
  int n_lev() const noexcept { return theta.n_lev(); }

  bool same_shape(const VectorField& other) const noexcept { return theta.same_shape(other.theta); }

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(double factor);
  VectorField& add_scaled(double factor, const VectorField& other);

  bool all_finite() const noexcept { return theta.all_finite() && phi.all_finite(); }
  /// Largest pointwise magnitude.
  double max_norm() const noexcept;

  friend bool operator==(const VectorField&, const VectorField&) = default;
};

VectorField operator+(VectorField lhs, const VectorField& rhs);
VectorField operator-(VectorField lhs, const VectorField& rhs);
VectorField operator*(double factor, VectorField field);

}  // namespace mpe
