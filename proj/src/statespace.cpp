#include "qfilt/statespace.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <string>

namespace qfilt {

namespace {

void require_dim(Eigen::Index rows, Eigen::Index cols) {
  if (rows != cols || !is_supported_dim(rows)) {
    throw std::invalid_argument("operator must be square of dimension 2 or 4, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void require_same_dim(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  }
}

bool all_finite(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
  }
  return true;
}

}  // namespace

bool is_supported_dim(Eigen::Index dim) { return dim == 2 || dim == 4; }

Operator::Operator(Matrix m) : m_(std::move(m)) {
  require_dim(m_.rows(), m_.cols());
  if (!all_finite(m_)) throw std::invalid_argument("operator has non-finite entries");
}

Operator Operator::identity(int dim) { return Operator(Matrix::Identity(dim, dim)); }
Operator Operator::zero(int dim) { return Operator(Matrix::Zero(dim, dim)); }

bool Operator::is_hermitian(double tol) const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool Operator::is_unitary(double tol) const {
  return (m_.adjoint() * m_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= tol;
}

bool Operator::is_zero() const { return m_.isZero(0.0); }

double Operator::spectral_norm() const {
  Eigen::JacobiSVD<Matrix> svd(m_);
  return svd.singularValues()(0);
}

Vector Operator::apply(const Vector& v) const {
  if (v.size() != m_.cols()) throw std::invalid_argument("operator/vector dimension mismatch");
  return m_ * v;
}

Operator& Operator::operator+=(const Operator& o) {
  require_same_dim(*this, o);
  m_ += o.m_;
  return *this;
}

Operator& Operator::operator-=(const Operator& o) {
  require_same_dim(*this, o);
  m_ -= o.m_;
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  m_ *= s;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_dim(a, b);
  return Operator(Matrix(a.m_ * b.m_));
}

StateVector::StateVector(Vector v) : v_(std::move(v)) {
  if (!is_supported_dim(v_.size())) {
    throw std::invalid_argument("state vector must have dimension 2 or 4");
  }
  for (Eigen::Index i = 0; i < v_.size(); ++i) {
    if (!std::isfinite(v_(i).real()) || !std::isfinite(v_(i).imag())) {
      throw std::invalid_argument("state vector has non-finite amplitudes");
    }
  }
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm() - 1.0) <= tol; }

StateVector StateVector::normalized() const {
  const double n = norm();
  if (n == 0.0) throw std::domain_error("cannot normalize the zero vector");
  return StateVector(Vector(v_ / n));
}

Operator StateVector::outer() const { return Operator(Matrix(v_ * v_.adjoint())); }

DensityMatrix::DensityMatrix(Operator rho, TraceContract contract) : rho_(std::move(rho)) {
  if (!rho_.is_hermitian()) throw std::invalid_argument("density matrix is not Hermitian");
  const double tr = rho_.trace().real();
  if (contract == TraceContract::unit && std::abs(tr - 1.0) > kNormTol) {
    throw std::invalid_argument("density matrix trace " + std::to_string(tr) + " != 1");
  }
  if (contract == TraceContract::positive && !(tr > 0.0)) {
    throw std::invalid_argument("unnormalized density matrix must have positive trace");
  }
  const Eigen::VectorXd ev = eigenvalues();
  if (ev(0) < kEigenFloor * std::max(1.0, tr)) {
    throw std::invalid_argument("density matrix has negative eigenvalue " +
                                std::to_string(ev(0)));
  }
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix(psi.normalized().outer());
}

double DensityMatrix::purity() const { return (rho_.matrix() * rho_.matrix()).trace().real(); }

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

BlochVector::BlochVector(const Vec3& r) : r_(r) {
  if (!r_.allFinite()) throw std::invalid_argument("Bloch vector has non-finite components");
  if (r_.norm() > 1.0 + kBlochTol) {
    throw std::invalid_argument("Bloch vector outside the unit ball, |r| = " +
                                std::to_string(r_.norm()));
  }
}

Operator sigma_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return Operator(m);
}

Operator sigma_y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return Operator(m);
}

Operator sigma_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return Operator(m);
}

Operator pauli(const Vec3& l) {
  if (!l.allFinite()) throw std::invalid_argument("pauli: non-finite components");
  Matrix m(2, 2);
  m << l.z(), cplx(l.x(), -l.y()), cplx(l.x(), l.y()), -l.z();
  return Operator(m);
}

DensityMatrix bloch_to_density(const BlochVector& r) {
  Matrix m(2, 2);
  const Vec3& v = r.vec();
  m << 0.5 * (1.0 + v.z()), 0.5 * cplx(v.x(), -v.y()), 0.5 * cplx(v.x(), v.y()),
      0.5 * (1.0 - v.z());
  return DensityMatrix(Operator(m));
}

Vec3 bloch_components(const Operator& rho) {
  if (rho.dim() != 2) throw std::invalid_argument("Bloch components need a 2x2 operator");
  const Matrix& m = rho.matrix();
  // Tr(sigma_x rho) = 2 Re rho10, Tr(sigma_y rho) = 2 Im rho10, Tr(sigma_z rho) = rho00 - rho11
  return Vec3(2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real());
}

BlochVector density_to_bloch(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw std::invalid_argument("density_to_bloch needs dimension 2");
  return BlochVector(bloch_components(rho.op()));
}

double shannon_entropy(const Eigen::VectorXd& probabilities, LogBase base) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    double p = probabilities(i);
    if (p < kEigenFloor) throw std::domain_error("negative probability in entropy");
    if (p <= 0.0) continue;
    s -= p * std::log(p);
  }
  return base == LogBase::bits ? s / std::log(2.0) : s;
}

double von_neumann_entropy(const DensityMatrix& rho, LogBase base) {
  return shannon_entropy(rho.eigenvalues(), base);
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }
Operator anticommutator(const Operator& a, const Operator& b) { return a * b + b * a; }

cplx expectation(const Operator& a, const Operator& rho) { return (a * rho).trace(); }
cplx expectation(const Operator& a, const DensityMatrix& rho) { return expectation(a, rho.op()); }

Operator kron(const Operator& a, const Operator& b) {
  if (a.dim() != 2 || b.dim() != 2) throw std::invalid_argument("kron supports 2x2 factors only");
  Matrix m(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) m(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return Operator(m);
}

Matrix expm(const Matrix& a) {
  if (a.rows() == 2 && a.cols() == 2) {
    // a = c I + N with N traceless, N^2 = -det(N) I.
    const cplx c = 0.5 * (a(0, 0) + a(1, 1));
    Matrix n = a;
    n(0, 0) -= c;
    n(1, 1) -= c;
    const cplx q2 = -(n(0, 0) * n(1, 1) - n(0, 1) * n(1, 0));
    const cplx q = std::sqrt(q2);
    cplx ch, sh_over_q;
    if (std::abs(q2) < 1e-8) {
      ch = 1.0 + q2 / 2.0 + q2 * q2 / 24.0;
      sh_over_q = 1.0 + q2 / 6.0 + q2 * q2 / 120.0;
    } else {
      ch = std::cosh(q);
      sh_over_q = std::sinh(q) / q;
    }
    const cplx ec = std::exp(c);
    Matrix out(2, 2);
    out(0, 0) = ec * (ch + sh_over_q * n(0, 0));
    out(0, 1) = ec * sh_over_q * n(0, 1);
    out(1, 0) = ec * sh_over_q * n(1, 0);
    out(1, 1) = ec * (ch + sh_over_q * n(1, 1));
    return out;
  }
  Eigen::MatrixXcd dyn = a;
  return Matrix(dyn.exp());
}

Operator expm(const Operator& a) { return Operator(expm(a.matrix())); }

}  // namespace qfilt
