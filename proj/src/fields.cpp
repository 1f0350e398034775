#include "hymflow/fields.hpp"

#include <bit>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace hymflow {

MatrixField::MatrixField(Index sites, int dim)
    : dim_(dim), data_(Eigen::ArrayXXcd::Zero(sites, dim * dim)) {}

MatrixField MatrixField::identity(Index sites, int dim) {
  MatrixField m(sites, dim);
  for (int i = 0; i < dim; ++i) m.entry(i, i).setOnes();
  return m;
}

MatrixField MatrixField::scalar(const Eigen::ArrayXcd& values) {
  MatrixField m(values.size(), 1);
  m.entry(0, 0) = values;
  return m;
}

MatrixField MatrixField::constant(Index sites, const Eigen::MatrixXcd& value) {
  MatrixField m(sites, static_cast<int>(value.rows()));
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) m.entry(i, j).setConstant(value(i, j));
  return m;
}

Eigen::MatrixXcd MatrixField::at(Index site) const {
  Eigen::MatrixXcd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = data_(site, i * dim_ + j);
  return m;
}

void MatrixField::set(Index site, const Eigen::MatrixXcd& value) {
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) data_(site, i * dim_ + j) = value(i, j);
}

MatrixField& MatrixField::operator+=(const MatrixField& other) {
  if (other.empty()) return *this;
  if (empty()) return *this = other;
  data_ += other.data_;
  return *this;
}

MatrixField& MatrixField::operator-=(const MatrixField& other) {
  if (other.empty()) return *this;
  if (empty()) {
    *this = other;
    data_ = -data_;
    return *this;
  }
  data_ -= other.data_;
  return *this;
}

MatrixField& MatrixField::operator*=(cplx s) {
  data_ *= s;
  return *this;
}

MatrixField& MatrixField::scale(const Eigen::ArrayXcd& s) {
  data_.colwise() *= s;
  return *this;
}

MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
MatrixField operator*(cplx s, MatrixField a) { return a *= s; }

MatrixField operator*(const MatrixField& a, const MatrixField& b) {
  if (a.empty() || b.empty()) return {};
  if (a.dim() == 1 && b.dim() != 1) {
    MatrixField out = b;
    return out.scale(a.entry(0, 0));
  }
  if (b.dim() == 1 && a.dim() != 1) {
    MatrixField out = a;
    return out.scale(b.entry(0, 0));
  }
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix field dimension mismatch");
  const int r = a.dim();
  MatrixField out(a.sites(), r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) out.entry(i, j) += a.entry(i, k) * b.entry(k, j);
  return out;
}

MatrixField commutator(const MatrixField& a, const MatrixField& b) {
  if (a.empty() || b.empty()) return {};
  return a * b - b * a;
}

MatrixField adjoint(const MatrixField& a) {
  if (a.empty()) return {};
  MatrixField out(a.sites(), a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) out.entry(i, j) = a.entry(j, i).conjugate();
  return out;
}

MatrixField hermitian_part(const MatrixField& a) {
  MatrixField out = a + adjoint(a);
  return out *= 0.5;
}

Eigen::ArrayXcd trace(const MatrixField& a) {
  Eigen::ArrayXcd t = Eigen::ArrayXcd::Zero(a.sites());
  for (int i = 0; i < a.dim(); ++i) t += a.entry(i, i);
  return t;
}

Eigen::ArrayXcd trace_product_adjoint(const MatrixField& a, const MatrixField& b) {
  if (a.empty() || b.empty()) {
    return Eigen::ArrayXcd::Zero(a.empty() ? b.sites() : a.sites());
  }
  return (a.raw() * b.raw().conjugate()).rowwise().sum();
}

Eigen::ArrayXd frobenius_sq(const MatrixField& a) { return a.raw().abs2().rowwise().sum(); }

namespace {

template <typename Fn>
MatrixField map_sites(const MatrixField& a, Fn fn) {
  MatrixField out(a.sites(), a.dim());
  parallel_for(a.sites(), [&](Index begin, Index end) {
    for (Index s = begin; s < end; ++s) out.set(s, fn(a.at(s)));
  });
  return out;
}

Eigen::MatrixXcd herm(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

MatrixField inverse(const MatrixField& a) {
  if (a.dim() == 1) {
    return MatrixField::scalar(a.entry(0, 0).inverse());
  }
  if (a.dim() == 2) {
    const Eigen::ArrayXcd det = a.entry(0, 0) * a.entry(1, 1) - a.entry(0, 1) * a.entry(1, 0);
    MatrixField out(a.sites(), 2);
    out.entry(0, 0) = a.entry(1, 1) / det;
    out.entry(1, 1) = a.entry(0, 0) / det;
    out.entry(0, 1) = -a.entry(0, 1) / det;
    out.entry(1, 0) = -a.entry(1, 0) / det;
    return out;
  }
  return map_sites(a, [](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd { return m.inverse(); });
}

MatrixField sqrt_hermitian(const MatrixField& a) {
  return map_sites(a, [](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(m));
    return es.operatorSqrt();
  });
}

MatrixField exp_hermitian(const MatrixField& a) {
  return map_sites(a, [](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(m));
    return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
           es.eigenvectors().adjoint();
  });
}

MatrixField log_hermitian(const MatrixField& a) {
  return map_sites(a, [](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(m));
    return es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() *
           es.eigenvectors().adjoint();
  });
}

Eigen::ArrayXd min_eigenvalue(const MatrixField& a) {
  Eigen::ArrayXd out(a.sites());
  parallel_for(a.sites(), [&](Index begin, Index end) {
    for (Index s = begin; s < end; ++s) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(a.at(s)), Eigen::EigenvaluesOnly);
      out(s) = es.eigenvalues()(0);
    }
  });
  return out;
}

Eigen::VectorXd hermitian_eigenvalues(const MatrixField& a, Index site) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(a.at(site)), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

MatrixField letter_derivative(const GridGeometry& grid, const MatrixField& a, int letter) {
  if (a.empty()) return {};
  MatrixField out(a.sites(), a.dim());
  for (Index c = 0; c < a.raw().cols(); ++c) {
    out.raw().col(c) = letter_derivative(grid, Eigen::ArrayXcd(a.raw().col(c)), letter);
  }
  return out;
}

// ---------------------------------------------------------------------------

int form_degree(FormMask mask) { return std::popcount(mask); }

int holo_degree(int n, FormMask mask) { return std::popcount(mask & ((1u << n) - 1u)); }

int antiholo_degree(int n, FormMask mask) { return std::popcount(mask >> n); }

int wedge_sign(FormMask a, FormMask b) {
  if (a & b) return 0;
  // Count inversions: pairs (x in a, y in b) with x > y.
  int swaps = 0;
  for (FormMask rest = b; rest; rest &= rest - 1) {
    const int y = std::countr_zero(rest);
    swaps += std::popcount(a >> (y + 1));
  }
  return (swaps % 2) ? -1 : 1;
}

namespace {

// Letters of a mask in increasing order.
std::vector<int> letters(FormMask mask) {
  std::vector<int> out;
  for (; mask; mask &= mask - 1) out.push_back(std::countr_zero(mask));
  return out;
}

int conjugate_letter(int n, int letter) { return letter < n ? letter + n : letter - n; }

int permutation_sign(std::vector<int> seq) {
  int sign = 1;
  for (size_t i = 0; i < seq.size(); ++i)
    for (size_t j = i + 1; j < seq.size(); ++j)
      if (seq[i] > seq[j]) sign = -sign;
  return sign;
}

}  // namespace

FormMask conjugate_mask(int n, FormMask mask) {
  FormMask out = 0;
  for (int l : letters(mask)) out |= 1u << conjugate_letter(n, l);
  return out;
}

int conjugate_sign(int n, FormMask mask) {
  std::vector<int> seq;
  for (int l : letters(mask)) seq.push_back(conjugate_letter(n, l));
  return permutation_sign(seq);
}

std::vector<FormMask> masks_of_type(int n, int p, int q) {
  std::vector<FormMask> out;
  for (FormMask m = 0; m < (1u << (2 * n)); ++m) {
    if (holo_degree(n, m) == p && antiholo_degree(n, m) == q) out.push_back(m);
  }
  return out;
}

std::vector<FormMask> masks_of_degree(int n, int degree) {
  std::vector<FormMask> out;
  for (FormMask m = 0; m < (1u << (2 * n)); ++m) {
    if (form_degree(m) == degree) out.push_back(m);
  }
  return out;
}

FormField::FormField(int n, Index sites, int dim, int twist)
    : n_(n), dim_(dim), sites_(sites), twist_(twist), comps_(1u << (2 * n)) {}

MatrixField& FormField::component(FormMask mask) {
  if (comps_[mask].empty()) comps_[mask] = MatrixField(sites_, dim_);
  return comps_[mask];
}

std::vector<FormMask> FormField::masks() const {
  std::vector<FormMask> out;
  for (FormMask m = 0; m < comps_.size(); ++m)
    if (!comps_[m].empty()) out.push_back(m);
  return out;
}

bool FormField::is_zero() const {
  for (const auto& c : comps_)
    if (!c.empty() && (c.raw() != cplx(0.0)).any()) return false;
  return true;
}

FormField& FormField::operator+=(const FormField& other) {
  if (other.n_ == 0) return *this;
  if (n_ == 0) return *this = other;
  for (FormMask m : other.masks()) {
    if (dim_ == other.dim_) {
      component(m) += other[m];
    } else {
      throw std::invalid_argument("form value dimension mismatch");
    }
  }
  return *this;
}

FormField& FormField::operator-=(const FormField& other) {
  if (other.n_ == 0) return *this;
  if (n_ == 0) {
    *this = other;
    return *this *= -1.0;
  }
  for (FormMask m : other.masks()) component(m) -= other[m];
  return *this;
}

FormField& FormField::operator*=(cplx s) {
  for (auto& c : comps_)
    if (!c.empty()) c *= s;
  return *this;
}

FormField& FormField::scale(const Eigen::ArrayXcd& s) {
  for (auto& c : comps_)
    if (!c.empty()) c.scale(s);
  return *this;
}

FormField FormField::part(int p, int q) const {
  FormField out(n_, sites_, dim_, twist_);
  for (FormMask m : masks())
    if (holo_degree(n_, m) == p && antiholo_degree(n_, m) == q) out.component(m) = comps_[m];
  return out;
}

FormField operator+(FormField a, const FormField& b) { return a += b; }
FormField operator-(FormField a, const FormField& b) { return a -= b; }
FormField operator*(cplx s, FormField a) { return a *= s; }

FormField scalar_form(int n, const Eigen::ArrayXcd& values) {
  FormField f(n, values.size(), 1);
  f.component(0) = MatrixField::scalar(values);
  return f;
}

FormField zero_form_field(int n, const MatrixField& values) {
  FormField f(n, values.sites(), values.dim());
  f.component(0) = values;
  return f;
}

FormField wedge(const FormField& a, const FormField& b) {
  const int dim = std::max(a.dim(), b.dim());
  FormField out(a.n(), a.sites(), dim, a.twist() + b.twist());
  for (FormMask ma : a.masks()) {
    for (FormMask mb : b.masks()) {
      const int sign = wedge_sign(ma, mb);
      if (sign == 0) continue;
      MatrixField prod = a[ma] * b[mb];
      if (sign < 0) prod *= -1.0;
      out.component(ma | mb) += prod;
    }
  }
  return out;
}

namespace {

int homogeneous_degree(const FormField& f) {
  const auto ms = f.masks();
  if (ms.empty()) return 0;
  const int d = form_degree(ms.front());
  for (FormMask m : ms)
    if (form_degree(m) != d) throw std::invalid_argument("graded commutator needs homogeneous forms");
  return d;
}

}  // namespace

FormField graded_commutator(const FormField& a, const FormField& b) {
  const int sign = ((homogeneous_degree(a) * homogeneous_degree(b)) % 2) ? -1 : 1;
  FormField out = wedge(a, b);
  FormField rev = wedge(b, a);
  rev *= static_cast<double>(sign);
  return out -= rev;
}

FormField form_adjoint(const FormField& a) {
  FormField out(a.n(), a.sites(), a.dim(), -a.twist());
  for (FormMask m : a.masks()) {
    MatrixField c = adjoint(a[m]);
    if (conjugate_sign(a.n(), m) < 0) c *= -1.0;
    out.component(conjugate_mask(a.n(), m)) += c;
  }
  return out;
}

FormField left_multiply(const MatrixField& m, const FormField& a) {
  FormField out(a.n(), a.sites(), std::max(m.dim(), a.dim()), a.twist());
  for (FormMask k : a.masks()) out.component(k) = m * a[k];
  return out;
}

FormField right_multiply(const FormField& a, const MatrixField& m) {
  FormField out(a.n(), a.sites(), std::max(m.dim(), a.dim()), a.twist());
  for (FormMask k : a.masks()) out.component(k) = a[k] * m;
  return out;
}

namespace {

FormField derivative_impl(const GridGeometry& grid, const FormField& field, bool holo,
                          bool antiholo) {
  if (field.twist() != 0) {
    throw std::domain_error("spectral derivative of a flux-twisted field is not supported");
  }
  const int n = grid.n;
  FormField out(n, field.sites(), field.dim());
  std::vector<int> wanted;
  for (int letter = 0; letter < 2 * n; ++letter) {
    if ((letter < n && holo) || (letter >= n && antiholo)) wanted.push_back(letter);
  }
  for (FormMask m : field.masks()) {
    const MatrixField& comp = field[m];
    for (Index c = 0; c < comp.raw().cols(); ++c) {
      Eigen::ArrayXcd spectrum = comp.raw().col(c);
      fft_forward(grid, spectrum);
      for (int letter : wanted) {
        const FormMask bit = 1u << letter;
        const int sign = wedge_sign(bit, m);
        if (sign == 0) continue;
        Eigen::ArrayXcd d = spectrum * grid.letter_multipliers[letter];
        fft_inverse(grid, d);
        out.component(bit | m).raw().col(c) += static_cast<double>(sign) * d;
      }
    }
  }
  return out;
}

}  // namespace

FormField dolbeault_derivative(const GridGeometry& grid, const FormField& field, Dolbeault kind) {
  return derivative_impl(grid, field, kind == Dolbeault::holomorphic,
                         kind == Dolbeault::antiholomorphic);
}

FormField exterior_derivative(const GridGeometry& grid, const FormField& field) {
  return derivative_impl(grid, field, true, true);
}

double coefficient_norm(const GridGeometry& grid, const FormField& field) {
  double sum = 0.0;
  for (FormMask m : field.masks()) sum += field[m].raw().abs2().sum();
  return std::sqrt(sum * grid.cell_volume());
}

}  // namespace hymflow
