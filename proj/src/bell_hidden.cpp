#include "qfilt/bell_hidden.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfilt::bell {

namespace {

constexpr double kUnitTol = 1e-12;

void require_lambda(double lambda) {
  if (!(std::abs(lambda) <= 0.5)) throw std::invalid_argument("lambda must lie in [-1/2, 1/2]");
}

// Fixed unit vector orthogonal to r (e_x-based unless r is close to e_x).
Vec3 secondary_axis(const Vec3& r) {
  if (r.norm() == 0.0) return Vec3::UnitZ();
  const Vec3 n = r.normalized();
  const Vec3 ref = std::abs(n.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  return (ref - ref.dot(n) * n).normalized();
}

int equator_sign(const Vec3& e, const Vec3& r) {
  const Vec3 a = secondary_axis(r);
  const double ea = e.dot(a);
  if (ea != 0.0) return ea > 0.0 ? 1 : -1;
  const Vec3 b = r.norm() == 0.0 ? Vec3::UnitX() : Vec3(r.normalized().cross(a));
  const double eb = e.dot(b);
  if (eb != 0.0) return eb > 0.0 ? 1 : -1;
  const double ec = r.norm() == 0.0 ? e.y() : e.dot(r);
  return ec >= 0.0 ? 1 : -1;
}

int s_of_u(double u, double lambda, const Vec3& e, const Vec3& r) {
  if (u > 0.0) return u >= 2.0 * lambda ? 1 : -1;
  if (u < 0.0) return u > -2.0 * lambda ? 1 : -1;
  // limit of u -> 0 from the side picked by the secondary frame
  if (equator_sign(e, r) > 0) return lambda <= 0.0 ? 1 : -1;
  return lambda > 0.0 ? 1 : -1;
}

// Sorted breakpoints of the lambda step functions, clipped to [-1/2, 1/2].
std::vector<double> breakpoints(std::initializer_list<double> us) {
  std::vector<double> b{-0.5, 0.0, 0.5};
  for (double u : us) {
    b.push_back(0.5 * u);
    b.push_back(-0.5 * u);
  }
  for (double& x : b) x = std::clamp(x, -0.5, 0.5);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

Vec3 unit_perpendicular(const Vec3& n) {
  const Vec3 ref = std::abs(n.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  return (ref - ref.dot(n) * n).normalized();
}

}  // namespace

Direction::Direction(const Vec3& e) : e_(e) {
  if (!e_.allFinite() || std::abs(e_.norm() - 1.0) > kUnitTol) {
    throw std::invalid_argument("direction must be a unit vector");
  }
}

int s_lambda(const Direction& e, double lambda, const BlochVector& r) {
  require_lambda(lambda);
  return s_of_u(e.vec().dot(r.vec()), lambda, e.vec(), r.vec());
}

int chi_plus(const Direction& e, double lambda, const BlochVector& r) {
  return (1 + s_lambda(e, lambda, r)) / 2;
}

double lambda_mean(const Direction& e, const BlochVector& r) {
  const double u = e.vec().dot(r.vec());
  const std::vector<double> b = breakpoints({u});
  double acc = 0.0;
  for (size_t i = 0; i + 1 < b.size(); ++i) {
    const double mid = 0.5 * (b[i] + b[i + 1]);
    acc += (b[i + 1] - b[i]) * s_of_u(u, mid, e.vec(), r.vec());
  }
  return acc;
}

double lambda_mean_midpoint(const Direction& e, const BlochVector& r, int n) {
  if (n < 1) throw std::invalid_argument("midpoint rule needs n >= 1");
  const double u = e.vec().dot(r.vec());
  const double h = 1.0 / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += s_of_u(u, -0.5 + (i + 0.5) * h, e.vec(), r.vec());
  return acc * h;
}

DiscontinuityReport discontinuity_probe(double lambda, const BlochVector& r,
                                        const std::vector<double>& separations) {
  require_lambda(lambda);
  DiscontinuityReport rep;
  const double rn = r.norm();
  if (rn == 0.0 || (lambda > 0.0 && 2.0 * lambda > rn)) {
    rep.boundary = "no boundary";
    return rep;
  }
  const Vec3 n = r.vec() / rn;
  const Vec3 a = unit_perpendicular(n);
  // Polar angle of the boundary measured from r.
  const double theta0 = lambda > 0.0 ? std::acos(2.0 * lambda / rn) : 0.5 * std::numbers::pi;
  rep.has_boundary = true;
  rep.boundary = lambda > 0.0 ? "circle" : "equator";
  rep.e_boundary = std::cos(theta0) * n + std::sin(theta0) * a;
  for (double d : separations) {
    if (!(d > 0.0)) throw std::invalid_argument("separations must be positive");
    DiscontinuityWitness w;
    w.separation = d;
    const double tp = theta0 - 0.5 * d, tm = theta0 + 0.5 * d;
    w.e_plus = std::cos(tp) * n + std::sin(tp) * a;
    w.e_minus = std::cos(tm) * n + std::sin(tm) * a;
    w.s_plus = s_of_u(w.e_plus.dot(r.vec()), lambda, w.e_plus, r.vec());
    w.s_minus = s_of_u(w.e_minus.dot(r.vec()), lambda, w.e_minus, r.vec());
    rep.jump = std::max(rep.jump, std::abs(w.s_plus - w.s_minus));
    rep.witnesses.push_back(w);
  }
  return rep;
}

double second_moment(const Direction& e, const Direction& f, const BlochVector& r) {
  const double ue = e.vec().dot(r.vec());
  const double uf = f.vec().dot(r.vec());
  const std::vector<double> b = breakpoints({ue, uf});
  double acc = 0.0;
  for (size_t i = 0; i + 1 < b.size(); ++i) {
    const double mid = 0.5 * (b[i] + b[i + 1]);
    const int ce = (1 + s_of_u(ue, mid, e.vec(), r.vec())) / 2;
    const int cf = (1 + s_of_u(uf, mid, f.vec(), r.vec())) / 2;
    acc += (b[i + 1] - b[i]) * (ce * cf);
  }
  return acc;
}

AffinityReport affinity_sweep(const Direction& e, const Direction& f, const BlochVector& r1,
                              const BlochVector& r2, const std::vector<double>& alphas) {
  AffinityReport rep;
  const double m1 = second_moment(e, f, r1);
  const double m2 = second_moment(e, f, r2);
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    const BlochVector r(Vec3(a * r1.vec() + (1.0 - a) * r2.vec()));
    AffinityPoint p;
    p.alpha = a;
    p.moment = second_moment(e, f, r);
    p.interpolated = a * m1 + (1.0 - a) * m2;
    p.deviation = std::abs(p.moment - p.interpolated);
    rep.max_deviation = std::max(rep.max_deviation, p.deviation);
    rep.points.push_back(p);
  }
  return rep;
}

std::vector<Direction> fibonacci_directions(int n) {
  if (n < 1) throw std::invalid_argument("need at least one direction");
  std::vector<Direction> out;
  out.reserve(static_cast<size_t>(n));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.emplace_back(Vec3(rho * std::cos(phi), rho * std::sin(phi), z).normalized());
  }
  return out;
}

}  // namespace qfilt::bell
