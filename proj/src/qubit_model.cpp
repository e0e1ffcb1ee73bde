#include "qfilt/qubit_model.hpp"

#include "qfilt/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace qfilt {

namespace {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

constexpr double kColinearSine = 1e-10;
constexpr double kSubstepScale = 2e-3;
constexpr double kMinDenominator = 1e-12;

Mat3 cross_matrix(const Vec3& k) {
  Mat3 m;
  m << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return m;
}

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite components");
}

// Orthonormal right-handed frame (e1, e2, e) with e along l (or k, or e_z).
struct Frame {
  Vec3 e1, e2, e;
};

Frame colinear_frame(const Vec3& k, const Vec3& l) {
  Frame f;
  if (l.norm() > 0.0) {
    f.e = l.normalized();
  } else if (k.norm() > 0.0) {
    f.e = k.normalized();
  } else {
    f.e = Vec3::UnitZ();
  }
  const Vec3 ref = std::abs(f.e.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  f.e1 = (ref - ref.dot(f.e) * f.e).normalized();
  f.e2 = f.e.cross(f.e1);
  return f;
}

Vec3 counting_drift(const Vec3& r, const Vec3& k, const Vec3& l, double sq) {
  // dr/dt = -r x k + 2 nu^{1/2} ((l.r) r - l)
  return -r.cross(k) + 2.0 * sq * (l.dot(r) * r - l);
}

Mat4 pi_p_generator(const QubitScenario& s) {
  const double sq = std::sqrt(s.nu);
  const double ll = s.l.squaredNorm();
  Mat4 m = Mat4::Zero();
  m(0, 0) = -ll;
  m.block<1, 3>(0, 1) = -2.0 * sq * s.l.transpose();
  m.block<3, 1>(1, 0) = -2.0 * sq * s.l;
  m.block<3, 3>(1, 1) = -ll * Mat3::Identity() + cross_matrix(s.k);
  return m;
}

Mat4 pi_p_jump(const QubitScenario& s) {
  const double a = 1.0 / std::sqrt(s.nu);
  const double ll = s.l.squaredNorm();
  Mat4 m = Mat4::Zero();
  m(0, 0) = 1.0 + a * a * ll;
  m.block<1, 3>(0, 1) = 2.0 * a * s.l.transpose();
  m.block<3, 1>(1, 0) = 2.0 * a * s.l;
  m.block<3, 3>(1, 1) = (1.0 - a * a * ll) * Mat3::Identity() + 2.0 * a * a * s.l * s.l.transpose();
  return m;
}

void validate_jumps(const std::vector<double>& jumps, const TimeGrid& grid) {
  double prev = 0.0;
  for (double t : jumps) {
    if (!(t > 0.0) || t > grid.T || t < prev) {
      throw std::invalid_argument("jump times must be ascending within (0, T]");
    }
    prev = t;
  }
}

}  // namespace

QubitScenario QubitScenario::from_h(const Vec3& h, const Vec3& l, double nu, double hbar) {
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  QubitScenario s;
  s.k = 2.0 * h / hbar;
  s.l = l;
  s.nu = nu;
  s.validate();
  return s;
}

void QubitScenario::validate() const {
  require_finite(k, "k");
  require_finite(l, "l");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("nu must be positive");
}

DiffusionModel QubitScenario::diffusion_model(double hbar) const {
  return DiffusionModel(pauli(h(hbar)), pauli(l), hbar);
}

JumpModel QubitScenario::jump_model(double hbar) const {
  return jump_to_diffusion_embedding(pauli(l), pauli(h(hbar)), nu, hbar);
}

bool PiPState::is_positive() const { return pi > 0.0 && p.norm() <= pi + 1e-9; }

BlochPath bloch_counting_filter(const QubitScenario& s, const BlochVector& r0,
                                const std::vector<double>& jump_times, const TimeGrid& grid) {
  s.validate();
  validate_jumps(jump_times, grid);
  const double nu = s.nu;
  const double sq = std::sqrt(nu);
  const double ll = s.l.squaredNorm();
  const double rate = 2.0 * sq * s.l.norm() + s.k.norm() + ll;
  BlochPath out;
  out.grid = grid;
  Vec3 r = r0.vec();
  auto intensity = [&](const Vec3& v) { return nu + 2.0 * sq * s.l.dot(v) + ll; };
  auto push = [&]() {
    out.r.push_back(r);
    out.intensity.push_back(intensity(r));
  };
  auto evolve = [&](double span) {
    if (span <= 0.0) return;
    const int n = std::max(1, static_cast<int>(std::ceil(span * rate / kSubstepScale)));
    const double h = span / n;
    for (int i = 0; i < n; ++i) {
      const Vec3 k1 = counting_drift(r, s.k, s.l, sq);
      const Vec3 k2 = counting_drift(r + 0.5 * h * k1, s.k, s.l, sq);
      const Vec3 k3 = counting_drift(r + 0.5 * h * k2, s.k, s.l, sq);
      const Vec3 k4 = counting_drift(r + h * k3, s.k, s.l, sq);
      r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  };
  push();
  size_t e = 0;
  for (int k = 0; k < grid.steps; ++k) {
    double t = grid.t(k);
    const double t_end = grid.t(k + 1);
    while (e < jump_times.size() && jump_times[e] <= t_end) {
      evolve(jump_times[e] - t);
      const double den = intensity(r);
      if (den < kMinDenominator) {
        out.aborted = true;
        out.diagnostic = "counting intensity below 1e-12 at t = " + std::to_string(jump_times[e]);
        return out;
      }
      r = ((nu - ll) * r + 2.0 * sq * s.l + 2.0 * s.l.dot(r) * s.l) / den;
      t = jump_times[e];
      ++e;
    }
    evolve(t_end - t);
    push();
  }
  return out;
}

PiPPath linear_pi_p_counting(const QubitScenario& s, const BlochVector& r0,
                             const std::vector<double>& jump_times, const TimeGrid& grid) {
  s.validate();
  validate_jumps(jump_times, grid);
  const Mat4 gen = pi_p_generator(s);
  const Mat4 jump = pi_p_jump(s);
  const Mat4 full = Mat4(gen * grid.dt).exp();
  PiPPath out;
  out.grid = grid;
  Vec4 v;
  v << 1.0, r0.vec();
  auto push = [&]() { out.states.push_back({v(0), v.tail<3>()}); };
  push();
  size_t e = 0;
  for (int k = 0; k < grid.steps; ++k) {
    double t = grid.t(k);
    const double t_end = grid.t(k + 1);
    bool jumped = false;
    while (e < jump_times.size() && jump_times[e] <= t_end) {
      const double span = jump_times[e] - t;
      if (span > 0.0) v = Mat4(gen * span).exp() * v;
      v = jump * v;
      t = jump_times[e];
      jumped = true;
      ++e;
    }
    if (!jumped) {
      v = full * v;
    } else if (t_end > t) {
      v = Mat4(gen * (t_end - t)).exp() * v;
    }
    if (!(v(0) > 0.0) || !v.allFinite()) {
      out.aborted = true;
      out.diagnostic = "likelihood pi lost positivity at t = " + std::to_string(t_end);
      return out;
    }
    push();
  }
  return out;
}

bool is_colinear(const Vec3& k, const Vec3& l) {
  const double nk = k.norm();
  const double nl = l.norm();
  if (nk == 0.0 || nl == 0.0) return true;
  return k.cross(l).norm() <= kColinearSine * nk * nl;
}

ColinearSolution closed_form_colinear(const Vec3& k, const Vec3& l, const BlochVector& r0,
                                      double w, double t) {
  require_finite(k, "k");
  require_finite(l, "l");
  if (!is_colinear(k, l)) throw std::invalid_argument("closed form needs k colinear with l");
  if (!(t >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("closed form needs t >= 0, finite w");
  const Frame f = colinear_frame(k, l);
  const double ln = l.norm();
  const double kappa = k.dot(f.e);
  const Vec3& r = r0.vec();
  const double x = r.dot(f.e1), y = r.dot(f.e2), z = r.dot(f.e);
  const double a = 2.0 * ln * w;
  const double decay = 2.0 * ln * ln * t;
  ColinearSolution sol;
  sol.pi_plus = 0.5 * (1.0 + z) * std::exp(a - decay);
  sol.pi_minus = 0.5 * (1.0 - z) * std::exp(-a - decay);
  sol.pi = sol.pi_plus + sol.pi_minus;
  const double c = std::cos(kappa * t), sn = std::sin(kappa * t);
  const double px = x * c - y * sn, py = y * c + x * sn;
  sol.p = (sol.pi_plus - sol.pi_minus) * f.e + std::exp(-decay) * (px * f.e1 + py * f.e2);
  const double th = std::tanh(a);
  const double z_w = (th + z) / (1.0 + z * th);
  const double denom = std::cosh(a) + z * std::sinh(a);
  sol.r = z_w * f.e + (px * f.e1 + py * f.e2) / denom;
  return sol;
}

PiPPath diffusive_pi_p(const Vec3& k, const Vec3& l, const BlochVector& r0, const NoisePath& w,
                       DiffusiveScheme scheme) {
  require_finite(k, "k");
  require_finite(l, "l");
  if (w.kind != NoiseKind::wiener) throw std::invalid_argument("diffusive (pi, p) needs Wiener noise");
  const TimeGrid& grid = w.grid;
  PiPPath out;
  out.grid = grid;
  out.states.push_back({1.0, r0.vec()});
  const double ll = l.squaredNorm();
  const double dt = grid.dt;
  if (scheme == DiffusiveScheme::euler) {
    double pi = 1.0;
    Vec3 p = r0.vec();
    for (int i = 0; i < grid.steps; ++i) {
      const double dw = w.increments[static_cast<size_t>(i)];
      const double npi = pi + 2.0 * l.dot(p) * dw;
      const Vec3 np = p - (p.cross(k) + 2.0 * ll * p - 2.0 * l.dot(p) * l) * dt + 2.0 * pi * dw * l;
      pi = npi;
      p = np;
      if (!(pi > 0.0) || !p.allFinite()) {
        out.aborted = true;
        out.diagnostic = "likelihood pi lost positivity at t = " + std::to_string(grid.t(i + 1));
        return out;
      }
      out.states.push_back({pi, p});
    }
    return out;
  }
  if (!is_colinear(k, l)) throw std::invalid_argument("exponential scheme needs k colinear with l");
  const Frame f = colinear_frame(k, l);
  const double ln = l.norm();
  const double kappa = k.dot(f.e);
  const Vec3& r = r0.vec();
  const double x = r.dot(f.e1), y = r.dot(f.e2), z = r.dot(f.e);
  double pp = 0.5 * (1.0 + z), pm = 0.5 * (1.0 - z);
  for (int i = 0; i < grid.steps; ++i) {
    const double dw = w.increments[static_cast<size_t>(i)];
    pp *= std::exp(2.0 * ln * dw - 2.0 * ll * dt);
    pm *= std::exp(-2.0 * ln * dw - 2.0 * ll * dt);
    const double t = grid.t(i + 1);
    const double c = std::cos(kappa * t), sn = std::sin(kappa * t);
    const double decay = std::exp(-2.0 * ll * t);
    const Vec3 p = (pp - pm) * f.e + decay * ((x * c - y * sn) * f.e1 + (y * c + x * sn) * f.e2);
    out.states.push_back({pp + pm, p});
  }
  return out;
}

std::vector<Vec3> bloch_master_solve(const Vec3& k, const Vec3& l, const BlochVector& r0,
                                     const TimeGrid& grid) {
  require_finite(k, "k");
  require_finite(l, "l");
  // dr/dt = k x r - 2 (l.l) r + 2 l (l.r)
  const Mat3 m = cross_matrix(k) - 2.0 * l.squaredNorm() * Mat3::Identity() + 2.0 * l * l.transpose();
  const Mat3 step = Mat3(m * grid.dt).exp();
  std::vector<Vec3> out;
  out.reserve(static_cast<size_t>(grid.steps) + 1);
  Vec3 r = r0.vec();
  out.push_back(r);
  for (int i = 0; i < grid.steps; ++i) {
    r = step * r;
    out.push_back(r);
  }
  return out;
}

double localized_z(double l_norm, double z, double w) {
  const double th = std::tanh(2.0 * l_norm * w);
  return (th + z) / (1.0 + z * th);
}

LocalizationStats localization_statistic(double l_norm, double t, double z, std::uint64_t n,
                                         std::uint64_t seed, LocalizationMeasure measure) {
  if (!(l_norm >= 0.0) || !(t > 0.0) || !(std::abs(z) <= 1.0) || n == 0) {
    throw std::invalid_argument("localization needs |l| >= 0, t > 0, |z| <= 1, n >= 1");
  }
  PhiloxStream rng(seed, StreamId::localization, 0);
  CompensatedSum sz, sz2, sw;
  std::uint64_t localized = 0, excluded = 0;
  const double st = std::sqrt(t);
  for (std::uint64_t i = 0; i < n; ++i) {
    double w;
    if (measure == LocalizationMeasure::output) {
      const double sign = rng.uniform() < 0.5 * (1.0 + z) ? 1.0 : -1.0;
      w = 2.0 * l_norm * sign * t + st * rng.normal();
    } else {
      w = st * rng.normal();
    }
    const double zw = localized_z(l_norm, z, w);
    sz.add(zw);
    sz2.add(zw * zw);
    if (measure == LocalizationMeasure::input) {
      // pi_+ - pi_- under the reference law
      const double d = 2.0 * l_norm * l_norm * t;
      sw.add(0.5 * (1.0 + z) * std::exp(2.0 * l_norm * w - d) -
             0.5 * (1.0 - z) * std::exp(-2.0 * l_norm * w - d));
    }
    if (std::abs(w) < 1e-12) {
      ++excluded;
    } else if (std::abs(zw) > 0.99) {
      ++localized;
    }
  }
  LocalizationStats s;
  const double dn = static_cast<double>(n);
  s.n = n;
  s.excluded = excluded;
  s.mean_z = sz.value() / dn;
  s.mean_z2 = sz2.value() / dn;
  s.weighted_mean_z = measure == LocalizationMeasure::input ? sw.value() / dn : s.mean_z;
  s.localized_fraction = n > excluded ? static_cast<double>(localized) / static_cast<double>(n - excluded) : 0.0;
  return s;
}

}  // namespace qfilt
