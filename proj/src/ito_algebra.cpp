#include "qfilt/ito_algebra.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace qfilt::ito {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_rational(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

void require_same_d(const Element& a, const Element& b) {
  if (a.d() != b.d()) {
    throw std::invalid_argument("Ito elements of different noise dimension " +
                                std::to_string(a.d()) + " and " + std::to_string(b.d()));
  }
}

bool coefficient_is_zero(const Coefficient& c) {
  if (const auto* s = std::get_if<Scalar>(&c)) return s->is_zero();
  return std::get<Operator>(c).is_zero();
}

Coefficient add(const Coefficient& a, const Coefficient& b) {
  if (a.index() != b.index()) throw std::invalid_argument("mixed scalar/operator coefficients");
  if (const auto* s = std::get_if<Scalar>(&a)) return *s + std::get<Scalar>(b);
  return std::get<Operator>(a) + std::get<Operator>(b);
}

Coefficient multiply(const Coefficient& a, const Coefficient& b) {
  const auto* sa = std::get_if<Scalar>(&a);
  const auto* sb = std::get_if<Scalar>(&b);
  if (sa && sb) return *sa * *sb;
  if (sa) return sa->to_complex() * std::get<Operator>(b);
  if (sb) return std::get<Operator>(a) * sb->to_complex();
  return std::get<Operator>(a) * std::get<Operator>(b);
}

Coefficient negate(const Coefficient& c) {
  if (const auto* s = std::get_if<Scalar>(&c)) return -*s;
  return -std::get<Operator>(c);
}

Coefficient adjoint(const Coefficient& c) {
  if (const auto* s = std::get_if<Scalar>(&c)) return s->conj();
  return std::get<Operator>(c).adjoint();
}

std::string index_name(int x, int d, bool is_mu) {
  if (is_mu && x == 0) return "-";
  if (!is_mu && x == d + 1) return "+";
  return std::to_string(x);
}

std::string symbol(const BasisIndex& idx, int d) {
  if (idx.mu == 0 && idx.nu == d + 1) return "dt";
  if (d == 1) {
    if (idx.mu == 0) return "dL(-)";
    if (idx.nu == 2) return "dL(+)";
    return "dL";
  }
  return "dL(" + index_name(idx.mu, d, true) + "," + index_name(idx.nu, d, false) + ")";
}

std::string operator_string(const Operator& a) {
  std::string s = "[";
  for (int r = 0; r < a.dim(); ++r) {
    s += (r ? ",[" : "[");
    for (int c = 0; c < a.dim(); ++c) {
      if (c) s += ",";
      s += Scalar(a(r, c)).to_string();
    }
    s += "]";
  }
  return s + "]";
}

// Negative real scalars render with a leading '-', which the element printer
// folds into " - ".
bool is_negative_real(const Scalar& s) {
  if (s.is_exact()) return s.exact().im == 0 && s.exact().re < 0;
  const cplx z = s.to_complex();
  return z.imag() == 0.0 && z.real() < 0.0;
}

}  // namespace

cplx ExactComplex::to_double() const {
  return {static_cast<double>(re), static_cast<double>(im)};
}

bool Scalar::is_zero() const {
  if (const auto* e = std::get_if<ExactComplex>(&v_)) return e->is_zero();
  return std::get<cplx>(v_) == cplx(0.0, 0.0);
}

const ExactComplex& Scalar::exact() const {
  if (const auto* e = std::get_if<ExactComplex>(&v_)) return *e;
  throw std::logic_error("scalar is not exact");
}

cplx Scalar::to_complex() const {
  if (const auto* e = std::get_if<ExactComplex>(&v_)) return e->to_double();
  return std::get<cplx>(v_);
}

Scalar Scalar::conj() const {
  if (const auto* e = std::get_if<ExactComplex>(&v_)) return Scalar(e->conj());
  return Scalar(std::conj(std::get<cplx>(v_)));
}

std::string Scalar::to_string() const {
  if (const auto* e = std::get_if<ExactComplex>(&v_)) {
    if (e->im == 0) return format_rational(e->re);
    if (e->re == 0) {
      if (e->im == 1) return "i";
      if (e->im == -1) return "-i";
      return format_rational(e->im) + "*i";
    }
    const std::string sign = e->im < 0 ? "-" : "+";
    const Rational mag = e->im < 0 ? Rational(-e->im) : e->im;
    return "(" + format_rational(e->re) + sign + (mag == 1 ? "" : format_rational(mag) + "*") +
           "i)";
  }
  const cplx z = std::get<cplx>(v_);
  if (z.imag() == 0.0) return format_double(z.real());
  if (z.real() == 0.0) return format_double(z.imag()) + "*i";
  const std::string sign = z.imag() < 0 ? "-" : "+";
  return "(" + format_double(z.real()) + sign + format_double(std::abs(z.imag())) + "*i)";
}

Scalar operator+(const Scalar& a, const Scalar& b) {
  if (a.is_exact() && b.is_exact()) return Scalar(a.exact() + b.exact());
  return Scalar(a.to_complex() + b.to_complex());
}

Scalar operator-(const Scalar& a, const Scalar& b) {
  if (a.is_exact() && b.is_exact()) return Scalar(a.exact() - b.exact());
  return Scalar(a.to_complex() - b.to_complex());
}

Scalar operator*(const Scalar& a, const Scalar& b) {
  if (a.is_exact() && b.is_exact()) return Scalar(a.exact() * b.exact());
  return Scalar(a.to_complex() * b.to_complex());
}

Scalar operator-(const Scalar& a) {
  if (a.is_exact()) return Scalar(-a.exact());
  return Scalar(-a.to_complex());
}

bool operator==(const Scalar& a, const Scalar& b) {
  if (a.is_exact() && b.is_exact()) return a.exact() == b.exact();
  return a.to_complex() == b.to_complex();
}

Element::Element(int d) : d_(d) {
  if (d < 1) throw std::invalid_argument("noise dimension d must be >= 1");
}

Element Element::basis(int d, int mu, int nu, Scalar c) {
  Element e(d);
  e.add_term({mu, nu}, Coefficient(std::move(c)));
  return e;
}

Element Element::basis(int d, int mu, int nu, const Operator& c) {
  Element e(d);
  e.add_term({mu, nu}, Coefficient(c));
  return e;
}

CoefficientKind Element::kind() const {
  if (terms_.empty()) return CoefficientKind::none;
  return std::holds_alternative<Scalar>(terms_.begin()->second) ? CoefficientKind::scalar
                                                                : CoefficientKind::op;
}

Scalar Element::scalar_at(int mu, int nu) const {
  auto it = terms_.find({mu, nu});
  if (it == terms_.end()) return Scalar(0);
  if (const auto* s = std::get_if<Scalar>(&it->second)) return *s;
  throw std::logic_error("scalar_at on an operator-coefficient element");
}

const Operator* Element::operator_at(int mu, int nu) const {
  auto it = terms_.find({mu, nu});
  if (it == terms_.end()) return nullptr;
  return std::get_if<Operator>(&it->second);
}

void Element::add_term(BasisIndex idx, const Coefficient& c) {
  if (idx.mu < 0 || idx.mu > d_ || idx.nu < 1 || idx.nu > d_ + 1) {
    throw std::out_of_range("Ito basis index out of range");
  }
  const bool is_op = std::holds_alternative<Operator>(c);
  if (is_op && d_ != 1) {
    throw std::invalid_argument("operator coefficients are supported for d = 1 only");
  }
  const CoefficientKind k = kind();
  if (k != CoefficientKind::none && (k == CoefficientKind::op) != is_op) {
    throw std::invalid_argument("cannot mix scalar and operator coefficients in one element");
  }
  if (is_op && k == CoefficientKind::op) {
    if (std::get<Operator>(terms_.begin()->second).dim() != std::get<Operator>(c).dim()) {
      throw std::invalid_argument("operator coefficient dimension mismatch");
    }
  }
  auto it = terms_.find(idx);
  if (it == terms_.end()) {
    if (!coefficient_is_zero(c)) terms_.emplace(idx, c);
    return;
  }
  it->second = add(it->second, c);
  if (coefficient_is_zero(it->second)) terms_.erase(it);
}

Element& Element::operator+=(const Element& o) {
  require_same_d(*this, o);
  for (const auto& [idx, c] : o.terms_) add_term(idx, c);
  return *this;
}

Element& Element::operator-=(const Element& o) {
  require_same_d(*this, o);
  for (const auto& [idx, c] : o.terms_) add_term(idx, negate(c));
  return *this;
}

Element operator-(const Element& a) {
  Element out(a.d_);
  for (const auto& [idx, c] : a.terms_) out.add_term(idx, negate(c));
  return out;
}

Element operator*(const Scalar& s, const Element& a) {
  Element out(a.d_);
  for (const auto& [idx, c] : a.terms_) out.add_term(idx, multiply(Coefficient(s), c));
  return out;
}

Element operator*(const Operator& a, const Element& e) {
  Element out(e.d_);
  for (const auto& [idx, c] : e.terms_) out.add_term(idx, multiply(Coefficient(a), c));
  return out;
}

Element operator*(const Element& e, const Operator& a) {
  Element out(e.d_);
  for (const auto& [idx, c] : e.terms_) out.add_term(idx, multiply(c, Coefficient(a)));
  return out;
}

bool operator==(const Element& a, const Element& b) {
  if (a.d_ != b.d_ || a.terms_.size() != b.terms_.size()) return false;
  auto ib = b.terms_.begin();
  for (auto ia = a.terms_.begin(); ia != a.terms_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.index() != ib->second.index()) return false;
    if (const auto* s = std::get_if<Scalar>(&ia->second)) {
      if (!(*s == std::get<Scalar>(ib->second))) return false;
    } else if (!(std::get<Operator>(ia->second) == std::get<Operator>(ib->second))) {
      return false;
    }
  }
  return true;
}

std::string Element::to_string() const {
  if (terms_.empty()) return "0";
  std::vector<std::pair<BasisIndex, const Coefficient*>> ordered;
  const BasisIndex dt_idx{0, d_ + 1};
  if (auto it = terms_.find(dt_idx); it != terms_.end()) ordered.emplace_back(it->first, &it->second);
  for (const auto& [idx, c] : terms_) {
    if (idx != dt_idx) ordered.emplace_back(idx, &c);
  }
  std::string out;
  bool first = true;
  for (const auto& [idx, cp] : ordered) {
    const std::string sym = symbol(idx, d_);
    std::string term;
    bool negative = false;
    if (const auto* s = std::get_if<Scalar>(cp)) {
      Scalar c = *s;
      if (is_negative_real(c)) {
        negative = true;
        c = -c;
      }
      term = (c == Scalar(1)) ? sym : c.to_string() + "*" + sym;
    } else {
      term = operator_string(std::get<Operator>(*cp)) + "*" + sym;
    }
    if (first) {
      out += negative ? "-" + term : term;
    } else {
      out += negative ? " - " + term : " + " + term;
    }
    first = false;
  }
  return out;
}

Element dt(int d) { return Element::basis(d, 0, d + 1); }
Element annihilation(int d, int k) { return Element::basis(d, 0, k); }
Element creation(int d, int k) { return Element::basis(d, k, d + 1); }
Element exchange(int d, int i, int j) { return Element::basis(d, i, j); }

Element standard_noise(const Scalar& eps) {
  return creation() + annihilation() + eps * exchange();
}

Element wiener() { return standard_noise(Scalar(0)); }
Element compensated_poisson() { return standard_noise(Scalar(1)); }

Element momentum_noise(const Scalar& hbar) {
  return (Scalar::i() * hbar) * (annihilation() - creation());
}

Element mul(const Element& a, const Element& b) {
  require_same_d(a, b);
  const int d = a.d();
  Element out(d);
  for (const auto& [ia, ca] : a.terms()) {
    // dL(mu, i) dL(k, nu) survives only for i == k in 1..d.
    if (ia.nu > d) continue;
    for (const auto& [ib, cb] : b.terms()) {
      if (ib.mu != ia.nu) continue;
      out.add_term({ia.mu, ib.nu}, multiply(ca, cb));
    }
  }
  return out;
}

Element star(const Element& a) {
  const int d = a.d();
  auto flip = [d](int x) { return x == 0 ? d + 1 : (x == d + 1 ? 0 : x); };
  Element out(d);
  for (const auto& [idx, c] : a.terms()) out.add_term({flip(idx.nu), flip(idx.mu)}, adjoint(c));
  return out;
}

Element commutator(const Element& a, const Element& b) { return mul(a, b) - mul(b, a); }

Element ito_correction(const Element& dx, const Element& dy) {
  if (dx.kind() == CoefficientKind::scalar || dy.kind() == CoefficientKind::scalar) {
    throw std::invalid_argument("ito_correction expects operator-coefficient differentials");
  }
  return mul(dx, dy);
}

Element product_differential(const Operator& x, const Element& dx, const Operator& y,
                             const Element& dy) {
  if (x.dim() != y.dim()) throw std::invalid_argument("product_differential: dimension mismatch");
  return dx * y + x * dy + ito_correction(dx, dy);
}

TriangularRep::TriangularRep(int size) : n_(size), a_(static_cast<size_t>(size * size)) {}

bool TriangularRep::is_block_upper_triangular() const {
  // Block of row/col index: "-" -> 0, 1..d -> 1, "+" -> 2.
  auto block = [this](int x) { return x == 0 ? 0 : (x == n_ - 1 ? 2 : 1); };
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c)
      if (block(r) > block(c) && !(*this)(r, c).is_zero()) return false;
  return true;
}

TriangularRep operator*(const TriangularRep& a, const TriangularRep& b) {
  if (a.n_ != b.n_) throw std::invalid_argument("TriangularRep size mismatch");
  TriangularRep out(a.n_);
  for (int r = 0; r < a.n_; ++r)
    for (int c = 0; c < a.n_; ++c) {
      Scalar acc(0);
      for (int k = 0; k < a.n_; ++k) {
        if (a(r, k).is_zero() || b(k, c).is_zero()) continue;
        acc = acc + a(r, k) * b(k, c);
      }
      out(r, c) = acc;
    }
  return out;
}

TriangularRep operator+(const TriangularRep& a, const TriangularRep& b) {
  if (a.n_ != b.n_) throw std::invalid_argument("TriangularRep size mismatch");
  TriangularRep out(a.n_);
  for (size_t i = 0; i < a.a_.size(); ++i) out.a_[i] = a.a_[i] + b.a_[i];
  return out;
}

TriangularRep operator-(const TriangularRep& a, const TriangularRep& b) {
  if (a.n_ != b.n_) throw std::invalid_argument("TriangularRep size mismatch");
  TriangularRep out(a.n_);
  for (size_t i = 0; i < a.a_.size(); ++i) out.a_[i] = a.a_[i] - b.a_[i];
  return out;
}

bool operator==(const TriangularRep& a, const TriangularRep& b) {
  if (a.n_ != b.n_) return false;
  for (size_t i = 0; i < a.a_.size(); ++i)
    if (!(a.a_[i] == b.a_[i])) return false;
  return true;
}

TriangularRep matrix_rep(const Element& a) {
  if (a.kind() == CoefficientKind::op) {
    throw std::invalid_argument("matrix_rep requires scalar coefficients");
  }
  TriangularRep rep(a.d() + 2);
  for (const auto& [idx, c] : a.terms()) rep(idx.mu, idx.nu) = std::get<Scalar>(c);
  return rep;
}

std::vector<TableCheck> verify_d1_table() {
  std::vector<TableCheck> out;
  const Element zero(1);
  const std::vector<std::pair<std::string, Element>> basis = {
      {"dt", dt()}, {"dL(-)", annihilation()}, {"dL(+)", creation()}, {"dL", exchange()}};
  // Expected products from the canonical table; everything else vanishes.
  auto expected = [&](const std::string& x, const std::string& y) -> Element {
    if (x == "dL(-)" && y == "dL(+)") return dt();
    if (x == "dL(-)" && y == "dL") return annihilation();
    if (x == "dL" && y == "dL(+)") return creation();
    if (x == "dL" && y == "dL") return exchange();
    return zero;
  };
  for (const auto& [xn, x] : basis) {
    for (const auto& [yn, y] : basis) {
      const Element got = mul(x, y);
      const Element want = expected(xn, yn);
      out.push_back({xn + " * " + yn, want.to_string(), got.to_string(), got == want});
    }
  }
  const TriangularRep rt = matrix_rep(dt());
  const TriangularRep rw = matrix_rep(wiener());
  const TriangularRep rm = matrix_rep(compensated_poisson());
  auto check_rep = [&](const std::string& name, const TriangularRep& lhs, const Element& want) {
    const bool ok = lhs == matrix_rep(want);
    out.push_back({name, want.to_string(), ok ? want.to_string() : "mismatch", ok});
  };
  check_rep("d_w d_m - d_t", rw * rm - rt, annihilation());
  check_rep("d_m d_w - d_t", rm * rw - rt, creation());
  check_rep("d_m - d_w", rm - rw, exchange());
  return out;
}

}  // namespace qfilt::ito
