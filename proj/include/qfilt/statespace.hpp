#pragma once

// Small dense state-space algebra: operators of dimension 2 (qubit) or 4
// (qubit x qubit), state vectors, density matrices, Bloch vectors and the
// Pauli calculus that ties them together.

#include <Eigen/Dense>

#include <complex>

namespace qfilt {

using cplx = std::complex<double>;

// Fixed upper bound of 4 keeps every matrix on the stack.
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using Vector = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, 4, 1>;
using Vec3 = Eigen::Vector3d;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-12;
inline constexpr double kNormTol = 1e-9;
inline constexpr double kEigenFloor = -1e-10;
inline constexpr double kBlochTol = 1e-10;

bool is_supported_dim(Eigen::Index dim);

/// Complex square matrix of dimension 2 or 4.
class Operator {
 public:
  Operator() : m_(Matrix::Zero(2, 2)) {}
  explicit Operator(Matrix m);

  static Operator identity(int dim);
  static Operator zero(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  cplx operator()(int row, int col) const { return m_(row, col); }

  Operator adjoint() const { return Operator(Matrix(m_.adjoint())); }
  cplx trace() const { return m_.trace(); }
  bool is_hermitian(double tol = kHermitianTol) const;
  bool is_unitary(double tol = kUnitaryTol) const;
  bool is_zero() const;

  /// Largest singular value.
  double spectral_norm() const;

  Vector apply(const Vector& v) const;

  Operator& operator+=(const Operator& o);
  Operator& operator-=(const Operator& o);
  Operator& operator*=(cplx s);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator-(const Operator& a) { return Operator(Matrix(-a.m_)); }
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend bool operator==(const Operator& a, const Operator& b) {
    return a.dim() == b.dim() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Possibly unnormalized amplitude vector.
class StateVector {
 public:
  StateVector() : v_(Vector::Zero(2)) {}
  explicit StateVector(Vector v);

  int dim() const { return static_cast<int>(v_.size()); }
  const Vector& amplitudes() const { return v_; }
  cplx operator[](int i) const { return v_(i); }
  double norm() const { return v_.norm(); }
  bool is_normalized(double tol = kNormTol) const;
  /// Throws std::domain_error for the zero vector.
  StateVector normalized() const;
  /// |v><v| without normalization.
  Operator outer() const;

 private:
  Vector v_;
};

enum class TraceContract {
  unit,      // Tr rho = 1
  positive,  // Tr rho = pi > 0 (likelihood-weighted variant)
};

/// Hermitian positive semidefinite operator, validated on construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(Operator rho, TraceContract contract = TraceContract::unit);

  static DensityMatrix pure(const StateVector& psi);

  int dim() const { return rho_.dim(); }
  const Operator& op() const { return rho_; }
  const Matrix& matrix() const { return rho_.matrix(); }
  double trace() const { return rho_.trace().real(); }
  double purity() const;
  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues() const;

 private:
  Operator rho_;
};

/// Real 3-vector with |r| <= 1 (+ tolerance).
class BlochVector {
 public:
  BlochVector() : r_(Vec3::Zero()) {}
  explicit BlochVector(const Vec3& r);
  BlochVector(double x, double y, double z) : BlochVector(Vec3(x, y, z)) {}

  const Vec3& vec() const { return r_; }
  double x() const { return r_.x(); }
  double y() const { return r_.y(); }
  double z() const { return r_.z(); }
  double norm() const { return r_.norm(); }

 private:
  Vec3 r_;
};

Operator sigma_x();
Operator sigma_y();
Operator sigma_z();

/// sigma(l) = l_x sigma_x + l_y sigma_y + l_z sigma_z.
Operator pauli(const Vec3& l);

DensityMatrix bloch_to_density(const BlochVector& r);
BlochVector density_to_bloch(const DensityMatrix& rho);
/// Tr(sigma_a rho) for any 2x2 operator, no trace or positivity checks.
Vec3 bloch_components(const Operator& rho);

enum class LogBase { bits, nats };

/// Shannon entropy of the spectrum. Eigenvalues in [-1e-10, 0) are clamped.
double von_neumann_entropy(const DensityMatrix& rho, LogBase base = LogBase::bits);
double shannon_entropy(const Eigen::VectorXd& probabilities, LogBase base = LogBase::bits);

Operator commutator(const Operator& a, const Operator& b);
Operator anticommutator(const Operator& a, const Operator& b);
/// Tr(A rho).
cplx expectation(const Operator& a, const DensityMatrix& rho);
cplx expectation(const Operator& a, const Operator& rho);
Operator kron(const Operator& a, const Operator& b);
/// Matrix exponential; closed form for 2x2, Pade for 4x4.
Operator expm(const Operator& a);
Matrix expm(const Matrix& a);

}  // namespace qfilt
