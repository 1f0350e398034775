#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hymflow/grid.hpp"

namespace hymflow {

/// Per-site dim x dim complex matrices, stored channel-major: column i*dim+j
/// of the sites x dim^2 array holds entry (i, j) at every site. A default
/// constructed field is empty and acts as zero in form algebra.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(Index sites, int dim);

  static MatrixField identity(Index sites, int dim);
  static MatrixField scalar(const Eigen::ArrayXcd& values);
  static MatrixField constant(Index sites, const Eigen::MatrixXcd& value);

  int dim() const { return dim_; }
  Index sites() const { return data_.rows(); }
  bool empty() const { return dim_ == 0; }

  auto entry(int i, int j) { return data_.col(i * dim_ + j); }
  auto entry(int i, int j) const { return data_.col(i * dim_ + j); }
  Eigen::ArrayXXcd& raw() { return data_; }
  const Eigen::ArrayXXcd& raw() const { return data_; }

  Eigen::MatrixXcd at(Index site) const;
  void set(Index site, const Eigen::MatrixXcd& value);

  MatrixField& operator+=(const MatrixField& other);
  MatrixField& operator-=(const MatrixField& other);
  MatrixField& operator*=(cplx s);
  /// Multiplies every entry by a per-site scalar.
  MatrixField& scale(const Eigen::ArrayXcd& s);

 private:
  int dim_ = 0;
  Eigen::ArrayXXcd data_;
};

MatrixField operator+(MatrixField a, const MatrixField& b);
MatrixField operator-(MatrixField a, const MatrixField& b);
MatrixField operator*(cplx s, MatrixField a);
/// Pointwise matrix product; a dim-1 operand broadcasts as a scalar.
MatrixField operator*(const MatrixField& a, const MatrixField& b);
MatrixField commutator(const MatrixField& a, const MatrixField& b);
MatrixField adjoint(const MatrixField& a);
MatrixField hermitian_part(const MatrixField& a);
Eigen::ArrayXcd trace(const MatrixField& a);
/// tr(a b^dagger) at every site.
Eigen::ArrayXcd trace_product_adjoint(const MatrixField& a, const MatrixField& b);
Eigen::ArrayXd frobenius_sq(const MatrixField& a);

// Per-site matrix functions (small dense matrices, solved site by site).
MatrixField inverse(const MatrixField& a);
/// Principal square root of Hermitian positive definite values.
MatrixField sqrt_hermitian(const MatrixField& a);
MatrixField exp_hermitian(const MatrixField& a);
MatrixField log_hermitian(const MatrixField& a);
/// Smallest eigenvalue of the Hermitian part at every site.
Eigen::ArrayXd min_eigenvalue(const MatrixField& a);
/// Sorted eigenvalues of the Hermitian part at one site.
Eigen::VectorXd hermitian_eigenvalues(const MatrixField& a, Index site);

/// Scalar field derivative along a letter, applied channel by channel.
MatrixField letter_derivative(const GridGeometry& grid, const MatrixField& a, int letter);

// ---------------------------------------------------------------------------
// Exterior algebra over the complex coframe.
//
// Letters 0..n-1 are dz^1..dz^n and letters n..2n-1 are dzbar^1..dzbar^n. A
// basis form is a bitmask of letters taken in increasing order.

using FormMask = unsigned;

constexpr FormMask holo_letter(int n, int j) { (void)n; return 1u << j; }
constexpr FormMask antiholo_letter(int n, int j) { return 1u << (n + j); }
int form_degree(FormMask mask);
int holo_degree(int n, FormMask mask);
int antiholo_degree(int n, FormMask mask);
/// Sign of e_a ^ e_b relative to e_{a|b}; zero when the masks overlap.
int wedge_sign(FormMask a, FormMask b);
/// conj(e_I) = sign * e_{conj_mask(I)}.
FormMask conjugate_mask(int n, FormMask mask);
int conjugate_sign(int n, FormMask mask);
std::vector<FormMask> masks_of_type(int n, int p, int q);
std::vector<FormMask> masks_of_degree(int n, int degree);

/// Endomorphism- (or scalar, dim 1) valued differential form on the lattice.
class FormField {
 public:
  FormField() = default;
  FormField(int n, Index sites, int dim, int twist = 0);

  int n() const { return n_; }
  int dim() const { return dim_; }
  Index sites() const { return sites_; }
  int twist() const { return twist_; }
  void set_twist(int twist) { twist_ = twist; }

  bool has(FormMask mask) const { return !comps_[mask].empty(); }
  const MatrixField& operator[](FormMask mask) const { return comps_[mask]; }
  /// Mutable access, allocating a zero component on first use.
  MatrixField& component(FormMask mask);
  std::vector<FormMask> masks() const;
  bool is_zero() const;

  FormField& operator+=(const FormField& other);
  FormField& operator-=(const FormField& other);
  FormField& operator*=(cplx s);
  FormField& scale(const Eigen::ArrayXcd& s);

  /// Keeps only components of bidegree (p, q).
  FormField part(int p, int q) const;

 private:
  int n_ = 0;
  int dim_ = 0;
  Index sites_ = 0;
  int twist_ = 0;
  std::vector<MatrixField> comps_;
};

FormField operator+(FormField a, const FormField& b);
FormField operator-(FormField a, const FormField& b);
FormField operator*(cplx s, FormField a);

/// Scalar 0-form with a single channel.
FormField scalar_form(int n, const Eigen::ArrayXcd& values);
FormField zero_form_field(int n, const MatrixField& values);

/// alpha ^ beta with pointwise matrix products; twists add.
FormField wedge(const FormField& a, const FormField& b);
/// Graded commutator [a ^ b] = a ^ b - (-1)^{|a||b|} b ^ a for homogeneous degrees.
FormField graded_commutator(const FormField& a, const FormField& b);
/// Conjugate transpose of the values together with complex conjugation of the form part.
FormField form_adjoint(const FormField& a);
/// Multiplies each component by a matrix field from the left or right.
FormField left_multiply(const MatrixField& m, const FormField& a);
FormField right_multiply(const FormField& a, const MatrixField& m);

enum class Dolbeault { holomorphic, antiholomorphic };

/// Spectral d/dz (holomorphic) or d/dzbar (antiholomorphic) exterior derivative.
/// Throws std::domain_error on a flux-twisted field.
FormField dolbeault_derivative(const GridGeometry& grid, const FormField& field, Dolbeault kind);
/// d = del + delbar.
FormField exterior_derivative(const GridGeometry& grid, const FormField& field);

/// Unweighted L2 norm over sites and components (sqrt of sum |entries|^2 * cell volume).
double coefficient_norm(const GridGeometry& grid, const FormField& field);

}  // namespace hymflow
