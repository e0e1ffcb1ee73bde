#pragma once

// Symbolic quantum Ito algebra over the canonical differentials dL(mu,nu),
// mu in {-, 1..d}, nu in {1..d, +}, with the product rule
//
//   dL(mu,i) dL(k,nu) = delta(i,k) dL(mu,nu),   i, k in {1..d},
//
// so that dL(-,+) = dt annihilates everything and, for d = 1,
//   dL(-) dL(+) = dt, dL(-) dL = dL(-), dL dL(+) = dL(+), dL dL = dL.
//
// Text rendering (stable, one element per line):
//   terms are joined by " + " / " - " in canonical index order, each term is
//   "<coef>*<symbol>" with the coefficient omitted when it equals 1.
//   Symbols: "dt" for (-,+); for d = 1 "dL(-)", "dL(+)", "dL" for
//   (-,1), (1,+), (1,1); otherwise "dL(mu,nu)" with mu, nu in -, 1..d, +.
//   Exact coefficients print as "p/q", "p/q*i" or "(a+b*i)"; floating ones in
//   shortest round-trip form.  The zero element renders as "0".

#include "qfilt/statespace.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace qfilt::ito {

using Rational = boost::multiprecision::cpp_rational;

/// Complex number with exact rational parts.
struct ExactComplex {
  Rational re{0};
  Rational im{0};

  ExactComplex() = default;
  ExactComplex(Rational r, Rational i = Rational(0)) : re(std::move(r)), im(std::move(i)) {}
  ExactComplex(long long r) : re(r) {}

  static ExactComplex i() { return {Rational(0), Rational(1)}; }

  bool is_zero() const { return re == 0 && im == 0; }
  ExactComplex conj() const { return {re, -im}; }
  cplx to_double() const;

  friend ExactComplex operator+(const ExactComplex& a, const ExactComplex& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend ExactComplex operator-(const ExactComplex& a, const ExactComplex& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend ExactComplex operator-(const ExactComplex& a) { return {-a.re, -a.im}; }
  friend ExactComplex operator*(const ExactComplex& a, const ExactComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const ExactComplex& a, const ExactComplex& b) {
    return a.re == b.re && a.im == b.im;
  }
};

/// Scalar coefficient: exact while every input is exact, floating otherwise.
class Scalar {
 public:
  Scalar() : v_(ExactComplex{}) {}
  Scalar(ExactComplex e) : v_(std::move(e)) {}
  Scalar(long long n) : v_(ExactComplex(n)) {}
  Scalar(int n) : v_(ExactComplex(static_cast<long long>(n))) {}
  Scalar(Rational r) : v_(ExactComplex(std::move(r))) {}
  Scalar(cplx z) : v_(z) {}
  Scalar(double x) : v_(cplx(x, 0.0)) {}

  static Scalar rational(long long num, long long den) { return Scalar(Rational(num, den)); }
  static Scalar i() { return Scalar(ExactComplex::i()); }

  bool is_exact() const { return std::holds_alternative<ExactComplex>(v_); }
  bool is_zero() const;
  const ExactComplex& exact() const;
  cplx to_complex() const;
  Scalar conj() const;
  std::string to_string() const;

  friend Scalar operator+(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a, const Scalar& b);
  friend Scalar operator*(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a);
  friend bool operator==(const Scalar& a, const Scalar& b);

 private:
  std::variant<ExactComplex, cplx> v_;
};

/// Index pair (mu, nu) encoded as integers: mu in [0, d] with 0 = "-",
/// nu in [1, d+1] with d+1 = "+".
struct BasisIndex {
  int mu = 0;
  int nu = 0;
  auto operator<=>(const BasisIndex&) const = default;
};

using Coefficient = std::variant<Scalar, Operator>;

enum class CoefficientKind { none, scalar, op };

/// Finitely supported combination of canonical differentials. Zero
/// coefficients are pruned so equality is structural.
class Element {
 public:
  explicit Element(int d = 1);

  static Element basis(int d, int mu, int nu, Scalar c = Scalar(1));
  static Element basis(int d, int mu, int nu, const Operator& c);

  int d() const { return d_; }
  CoefficientKind kind() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<BasisIndex, Coefficient>& terms() const { return terms_; }
  /// Coefficient of (mu, nu); zero scalar if absent.
  Scalar scalar_at(int mu, int nu) const;
  const Operator* operator_at(int mu, int nu) const;

  void add_term(BasisIndex idx, const Coefficient& c);

  Element& operator+=(const Element& o);
  Element& operator-=(const Element& o);
  friend Element operator+(Element a, const Element& b) { return a += b; }
  friend Element operator-(Element a, const Element& b) { return a -= b; }
  friend Element operator-(const Element& a);
  friend Element operator*(const Scalar& s, const Element& a);
  /// Left-multiplies every coefficient by an operator (a scalar element
  /// becomes an operator element).
  friend Element operator*(const Operator& a, const Element& e);
  /// Right-multiplies every operator coefficient (dX * Y).
  friend Element operator*(const Element& e, const Operator& a);
  friend bool operator==(const Element& a, const Element& b);

  std::string to_string() const;

 private:
  int d_;
  std::map<BasisIndex, Coefficient> terms_;
};

// Named differentials. mu/nu helpers: minus() == 0, plus(d) == d + 1.
constexpr int minus() { return 0; }
constexpr int plus(int d) { return d + 1; }

Element dt(int d = 1);
/// dL(-,k): annihilation.
Element annihilation(int d = 1, int k = 1);
/// dL(k,+): creation.
Element creation(int d = 1, int k = 1);
/// dL(i,j): exchange / counting.
Element exchange(int d = 1, int i = 1, int j = 1);

/// dy = dL(+) + dL(-) + eps dL, with (dy)^2 = dt + eps dy. d = 1.
Element standard_noise(const Scalar& eps);
/// dw = dL(-) + dL(+).
Element wiener();
/// dm = dL(-) + dL(+) + dL.
Element compensated_poisson();
/// df = i hbar (dL(-) - dL(+)).
Element momentum_noise(const Scalar& hbar = Scalar(1));

Element mul(const Element& a, const Element& b);
Element star(const Element& a);
Element commutator(const Element& a, const Element& b);

/// The Ito correction dX dY.
Element ito_correction(const Element& dx, const Element& dy);
/// d(XY) = dX Y + X dY + dX dY for operator-coefficient differentials.
Element product_differential(const Operator& x, const Element& dx, const Operator& y,
                             const Element& dy);

/// (d+2)x(d+2) matrix over exact/floating scalars in the basis (-, 1..d, +).
class TriangularRep {
 public:
  explicit TriangularRep(int size);
  int size() const { return n_; }
  const Scalar& operator()(int r, int c) const { return a_[static_cast<size_t>(r * n_ + c)]; }
  Scalar& operator()(int r, int c) { return a_[static_cast<size_t>(r * n_ + c)]; }
  /// True when every entry below the (-), (1..d), (+) block diagonal vanishes.
  bool is_block_upper_triangular() const;

  friend TriangularRep operator*(const TriangularRep& a, const TriangularRep& b);
  friend TriangularRep operator+(const TriangularRep& a, const TriangularRep& b);
  friend TriangularRep operator-(const TriangularRep& a, const TriangularRep& b);
  friend bool operator==(const TriangularRep& a, const TriangularRep& b);

 private:
  int n_;
  std::vector<Scalar> a_;
};

/// Requires scalar coefficients.
TriangularRep matrix_rep(const Element& a);

struct TableCheck {
  std::string lhs;
  std::string expected;
  std::string actual;
  bool pass = false;
};

/// Exhaustive check of the d = 1 basis table plus the matrix identities
/// d_- = d_w d_m - d_t, d^+ = d_m d_w - d_t, d = d_m - d_w.
std::vector<TableCheck> verify_d1_table();

}  // namespace qfilt::ito
