#include "qfilt/trajectories.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qfilt {

namespace {

constexpr double kTraceDriftTol = 1e-6;
constexpr double kDegenerateJump = 1e-14;

bool finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) return false;
  return true;
}

void require_normalized(const StateVector& psi) {
  if (!psi.is_normalized()) {
    throw std::invalid_argument("initial state must be normalized, |psi| = " +
                                std::to_string(psi.norm()));
  }
}

void require_rho(const Operator& rho0) {
  // Validates Hermiticity, unit trace and positivity.
  DensityMatrix check(rho0);
  (void)check;
}

template <class Rhs>
DensityPath rk4(const Operator& rho0, const TimeGrid& grid, Rhs rhs) {
  DensityPath out;
  out.reserve(static_cast<size_t>(grid.steps) + 1);
  Matrix rho = rho0.matrix();
  const double tr0 = rho.trace().real();
  out.emplace_back(rho);
  const double h = grid.dt;
  for (int k = 0; k < grid.steps; ++k) {
    const Matrix k1 = rhs(rho);
    const Matrix k2 = rhs(Matrix(rho + 0.5 * h * k1));
    const Matrix k3 = rhs(Matrix(rho + 0.5 * h * k2));
    const Matrix k4 = rhs(Matrix(rho + h * k3));
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double drift = std::abs(rho.trace().real() - tr0);
    if (drift > kTraceDriftTol || !rho.allFinite()) {
      throw std::runtime_error("step size rejected: trace drift " + std::to_string(drift) +
                               " at t = " + std::to_string(grid.t(k + 1)));
    }
    out.emplace_back(rho);
  }
  return out;
}

TrajectoryRecord make_record(const TimeGrid& grid, SampleMeasure measure, bool normalized,
                             bool counting) {
  TrajectoryRecord rec;
  rec.grid = grid;
  rec.measure = measure;
  rec.normalized_states = normalized;
  const size_t n = static_cast<size_t>(grid.steps) + 1;
  rec.states.reserve(n);
  rec.weight.reserve(n);
  rec.obs.reserve(n);
  rec.innovation.reserve(n);
  if (counting) rec.intensity.reserve(n);
  return rec;
}

void abort_record(TrajectoryRecord& rec, const std::string& why, int step) {
  rec.aborted = true;
  rec.diagnostic = why + " at step " + std::to_string(step) + " (t = " +
                   std::to_string(rec.grid.t(step)) + ")";
}

double re_expect(const Matrix& a, const Vector& psi) { return psi.dot(a * psi).real(); }

TrajectoryRecord diffusive_run(const DiffusionModel& model, const StateVector& psi0,
                               const NoisePath& noise, bool normalize, DiffusiveDrive drive) {
  if (noise.kind != NoiseKind::wiener) throw std::invalid_argument("diffusive run needs Wiener noise");
  if (psi0.dim() != model.L.dim()) throw std::invalid_argument("state/model dimension mismatch");
  require_normalized(psi0);
  const TimeGrid& grid = noise.grid;
  const SampleMeasure measure =
      drive == DiffusiveDrive::innovation ? SampleMeasure::output : SampleMeasure::input;
  TrajectoryRecord rec = make_record(grid, measure, normalize, false);
  const Matrix L = model.L.matrix();
  const double dt = grid.dt;
  const Matrix drift = expm(Matrix(-dt * model.K().matrix()));
  Vector x = psi0.amplitudes();
  double pi = 1.0;
  rec.states.push_back(x);
  rec.weight.push_back(1.0);
  rec.obs.push_back(0.0);
  rec.innovation.push_back(0.0);
  for (int k = 0; k < grid.steps; ++k) {
    const double n2 = x.squaredNorm();
    const double mean_l = 2.0 * re_expect(L, x) / n2;
    double dy, dwt;
    if (drive == DiffusiveDrive::innovation) {
      dwt = noise.increments[static_cast<size_t>(k)];
      dy = dwt + mean_l * dt;
    } else {
      dy = noise.increments[static_cast<size_t>(k)];
      dwt = dy - mean_l * dt;
    }
    Vector next = drift * x + dy * (L * x);
    if (!finite(next) || next.squaredNorm() == 0.0) {
      abort_record(rec, "non-finite or vanishing state", k + 1);
      return rec;
    }
    if (normalize) {
      const double m2 = next.squaredNorm();
      pi *= m2;
      next /= std::sqrt(m2);
    } else {
      pi = next.squaredNorm();
    }
    x = next;
    rec.states.push_back(x);
    rec.weight.push_back(pi);
    rec.obs.push_back(dy);
    rec.innovation.push_back(dwt);
  }
  return rec;
}

TrajectoryRecord jump_run(const JumpModel& model, const StateVector& psi0, const NoisePath& noise,
                          bool normalize) {
  if (noise.kind != NoiseKind::poisson) throw std::invalid_argument("jump run needs Poisson noise");
  if (psi0.dim() != model.C.dim()) throw std::invalid_argument("state/model dimension mismatch");
  require_normalized(psi0);
  const TimeGrid& grid = noise.grid;
  TrajectoryRecord rec = make_record(grid, SampleMeasure::input, normalize, true);
  const Matrix A = model.A().matrix();
  const Matrix C = model.C.matrix();
  const Matrix full = expm(Matrix(-grid.dt * A));
  const double nu = model.nu;
  const double sq = std::sqrt(nu);
  Vector x = psi0.amplitudes();
  double log_pi = 0.0;

  auto intensity = [&](const Vector& v) { return nu * (C * v).squaredNorm() / v.squaredNorm(); };
  auto weight = [&]() { return normalize ? std::exp(log_pi) : x.squaredNorm(); };
  auto renorm = [&]() {
    if (!normalize) return;
    const double n2 = x.squaredNorm();
    log_pi += std::log(n2);
    x /= std::sqrt(n2);
  };

  rec.states.push_back(x);
  rec.weight.push_back(1.0);
  rec.obs.push_back(0.0);
  rec.innovation.push_back(0.0);
  rec.intensity.push_back(intensity(x));

  size_t e = 0;
  const auto& ev = noise.event_times;
  for (int k = 0; k < grid.steps; ++k) {
    double t = grid.t(k);
    const double t_end = grid.t(k + 1);
    double dn = 0.0;
    double comp = 0.0;
    // Segment flow; comp accumulates nu s - ln(|u|^2/|x|^2).
    auto flow = [&](const Matrix& m, double s) {
      const double before = x.squaredNorm();
      x = m * x;
      comp += nu * s - std::log(x.squaredNorm() / before);
      renorm();
    };
    while (e < ev.size() && ev[e] <= t_end) {
      const double s = ev[e] - t;
      if (s > 0.0) flow(expm(Matrix(-s * A)), s);
      const Vector cx = C * x;
      if (!(cx.norm() >= kDegenerateJump * x.norm())) {
        abort_record(rec, "degenerate jump |C psi| < 1e-14", k + 1);
        return rec;
      }
      x = cx;
      renorm();
      dn += 1.0;
      rec.jump_times.push_back(ev[e]);
      t = ev[e];
      ++e;
    }
    const double s = t_end - t;
    if (t == grid.t(k)) {
      flow(full, s);
    } else if (s > 0.0) {
      flow(expm(Matrix(-s * A)), s);
    }
    if (!finite(x) || x.squaredNorm() == 0.0) {
      abort_record(rec, "non-finite or vanishing state", k + 1);
      return rec;
    }
    rec.states.push_back(x);
    rec.weight.push_back(weight());
    rec.obs.push_back(dn / sq - sq * grid.dt);
    rec.innovation.push_back((dn - comp) / sq);
    rec.intensity.push_back(intensity(x));
  }
  return rec;
}

}  // namespace

TimeGrid TimeGrid::make(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0) || !std::isfinite(T) || !std::isfinite(dt)) {
    throw std::invalid_argument("time grid needs positive finite T and dt");
  }
  if (dt > T) throw std::invalid_argument("time step exceeds horizon");
  const double ratio = T / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * ratio) {
    throw std::invalid_argument("T / dt must be an integer, got " + std::to_string(ratio));
  }
  if (steps > static_cast<double>(std::numeric_limits<int>::max())) {
    throw std::invalid_argument("too many grid steps");
  }
  TimeGrid g;
  g.T = T;
  g.dt = dt;
  g.steps = static_cast<int>(steps);
  return g;
}

int TimeGrid::index_of(double t) const {
  const double k = std::round(t / dt);
  if (k < 0 || k > steps) throw std::out_of_range("time outside the grid");
  return static_cast<int>(k);
}

DiffusionModel::DiffusionModel(Operator h, Operator l, double hbar_)
    : H(std::move(h)), L(std::move(l)), hbar(hbar_) {
  if (H.dim() != L.dim()) throw std::invalid_argument("H and L dimensions differ");
  if (!H.is_hermitian()) throw std::invalid_argument("H must be Hermitian");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
}

Operator DiffusionModel::K() const {
  return 0.5 * (L.adjoint() * L) + cplx(0.0, 1.0 / hbar) * H;
}

JumpModel::JumpModel(Operator c, Operator e, double nu_, double hbar_)
    : C(std::move(c)), E(std::move(e)), nu(nu_), hbar(hbar_) {
  if (C.dim() != E.dim()) throw std::invalid_argument("C and E dimensions differ");
  if (!E.is_hermitian()) throw std::invalid_argument("E must be Hermitian");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("nu must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
}

Operator JumpModel::G() const {
  return (0.5 * nu) * (C.adjoint() * C) + cplx(0.0, 1.0 / hbar) * E;
}

Operator JumpModel::A() const { return G() - (0.5 * nu) * Operator::identity(C.dim()); }

JumpModel jump_to_diffusion_embedding(const Operator& L, const Operator& H, double nu,
                                      double hbar) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  const Operator I = Operator::identity(L.dim());
  const Operator C = I + (1.0 / std::sqrt(nu)) * L;
  // nu^{1/2}/(2i) = -i nu^{1/2}/2
  const Operator E = H + cplx(0.0, -0.5 * std::sqrt(nu)) * (L - L.adjoint());
  return JumpModel(C, E, nu, hbar);
}

NoisePath wiener_path(const TimeGrid& grid, std::uint64_t seed, std::uint64_t index) {
  NoisePath p;
  p.kind = NoiseKind::wiener;
  p.grid = grid;
  p.seed = seed;
  p.index = index;
  p.increments.resize(static_cast<size_t>(grid.steps));
  PhiloxStream rng(seed, StreamId::wiener, index);
  const double s = std::sqrt(grid.dt);
  for (auto& dw : p.increments) dw = s * rng.normal();
  return p;
}

NoisePath poisson_path_from_events(const TimeGrid& grid, double rate,
                                   std::vector<double> event_times) {
  NoisePath p;
  p.kind = NoiseKind::poisson;
  p.grid = grid;
  p.rate = rate;
  p.increments.assign(static_cast<size_t>(grid.steps), 0.0);
  double prev = 0.0;
  int k = 0;
  for (double t : event_times) {
    if (!(t > 0.0) || t > grid.T || t < prev) {
      throw std::invalid_argument("event times must be ascending within (0, T]");
    }
    while (k < grid.steps - 1 && t > grid.t(k + 1)) ++k;
    p.increments[static_cast<size_t>(k)] += 1.0;
    prev = t;
  }
  p.event_times = std::move(event_times);
  return p;
}

NoisePath poisson_path(const TimeGrid& grid, double rate, std::uint64_t seed,
                       std::uint64_t index) {
  if (!(rate > 0.0)) throw std::invalid_argument("Poisson rate must be positive");
  PhiloxStream rng(seed, StreamId::poisson, index);
  std::vector<double> events;
  double t = rng.exponential(rate);
  while (t <= grid.T) {
    events.push_back(t);
    t += rng.exponential(rate);
  }
  NoisePath p = poisson_path_from_events(grid, rate, std::move(events));
  p.seed = seed;
  p.index = index;
  return p;
}

Operator TrajectoryRecord::projector(int k) const {
  const Vector& v = states.at(static_cast<size_t>(k));
  return Operator(Matrix(v * v.adjoint() / v.squaredNorm()));
}

Operator TrajectoryRecord::density(int k) const {
  const Vector& v = states.at(static_cast<size_t>(k));
  if (!normalized_states) return Operator(Matrix(v * v.adjoint()));
  return Operator(Matrix(weight.at(static_cast<size_t>(k)) * (v * v.adjoint())));
}

DensityPath integrate_lindblad(const DiffusionModel& model, const Operator& rho0,
                               const TimeGrid& grid) {
  if (rho0.dim() != model.L.dim()) throw std::invalid_argument("rho0/model dimension mismatch");
  require_rho(rho0);
  const Matrix K = model.K().matrix();
  const Matrix Kd = K.adjoint();
  const Matrix L = model.L.matrix();
  const Matrix Ld = L.adjoint();
  return rk4(rho0, grid, [&](const Matrix& r) -> Matrix { return -(K * r + r * Kd) + L * r * Ld; });
}

DensityPath integrate_jump_master(const JumpModel& model, const Operator& rho0,
                                  const TimeGrid& grid) {
  if (rho0.dim() != model.C.dim()) throw std::invalid_argument("rho0/model dimension mismatch");
  require_rho(rho0);
  const Matrix G = model.G().matrix();
  const Matrix Gd = G.adjoint();
  const Matrix C = model.C.matrix();
  const Matrix Cd = C.adjoint();
  const double nu = model.nu;
  return rk4(rho0, grid,
             [&](const Matrix& r) -> Matrix { return -(G * r + r * Gd) + nu * (C * r * Cd); });
}

TrajectoryRecord simulate_linear_diffusive(const DiffusionModel& model, const StateVector& psi0,
                                           const NoisePath& noise) {
  return diffusive_run(model, psi0, noise, false, DiffusiveDrive::observation);
}

TrajectoryRecord simulate_nonlinear_diffusive(const DiffusionModel& model, const StateVector& psi0,
                                              const NoisePath& noise, DiffusiveDrive drive) {
  return diffusive_run(model, psi0, noise, true, drive);
}

TrajectoryRecord simulate_linear_jump(const JumpModel& model, const StateVector& psi0,
                                      const NoisePath& noise) {
  return jump_run(model, psi0, noise, false);
}

TrajectoryRecord simulate_nonlinear_jump(const JumpModel& model, const StateVector& psi0,
                                         const NoisePath& noise) {
  return jump_run(model, psi0, noise, true);
}

TrajectoryRecord simulate_nonlinear_jump_thinned(const JumpModel& model, const StateVector& psi0,
                                                 const TimeGrid& grid, std::uint64_t seed,
                                                 std::uint64_t index) {
  if (psi0.dim() != model.C.dim()) throw std::invalid_argument("state/model dimension mismatch");
  require_normalized(psi0);
  TrajectoryRecord rec = make_record(grid, SampleMeasure::output, true, true);
  const Matrix B = model.G().matrix();
  const Matrix C = model.C.matrix();
  const Matrix full = expm(Matrix(-grid.dt * B));
  const double nu = model.nu;
  const double sq = std::sqrt(nu);
  const double smax = model.C.spectral_norm();
  const double bound = nu * smax * smax;
  PhiloxStream rng(seed, StreamId::thinning, index);
  auto next_gap = [&]() {
    return bound > 0.0 ? rng.exponential(bound) : std::numeric_limits<double>::infinity();
  };

  Vector x = psi0.amplitudes();
  double log_pi = 0.0;
  auto intensity = [&](const Vector& v) { return nu * (C * v).squaredNorm(); };

  rec.states.push_back(x);
  rec.weight.push_back(1.0);
  rec.obs.push_back(0.0);
  rec.innovation.push_back(0.0);
  rec.intensity.push_back(intensity(x));

  double t = 0.0;
  double candidate = next_gap();
  for (int k = 0; k < grid.steps; ++k) {
    const double t_end = grid.t(k + 1);
    double dn = 0.0;
    double comp = 0.0;
    // Normalized flow exp(-B s); -ln|u|^2 is the exact compensator of the
    // segment and nu s + ln|u|^2 its log-likelihood contribution.
    auto flow = [&](const Matrix& m, double s) {
      x = m * x;
      const double n2 = x.squaredNorm();
      comp -= std::log(n2);
      log_pi += nu * s + std::log(n2);
      x /= std::sqrt(n2);
    };
    while (candidate <= t_end) {
      const double s = candidate - t;
      if (s > 0.0) flow(expm(Matrix(-s * B)), s);
      t = candidate;
      const double lam = intensity(x);
      if (lam > bound * (1.0 + 1e-12)) {
        abort_record(rec, "thinning bound exceeded", k + 1);
        return rec;
      }
      if (rng.uniform() * bound < lam) {
        const Vector cx = C * x;
        const double cn = cx.norm();
        if (cn < kDegenerateJump) {
          abort_record(rec, "degenerate jump |C psi| < 1e-14", k + 1);
          return rec;
        }
        log_pi += 2.0 * std::log(cn);
        x = cx / cn;
        dn += 1.0;
        rec.jump_times.push_back(t);
      }
      candidate = t + next_gap();
    }
    const double s = t_end - t;
    if (t == grid.t(k)) {
      flow(full, s);
    } else if (s > 0.0) {
      flow(expm(Matrix(-s * B)), s);
    }
    t = t_end;
    if (!finite(x)) {
      abort_record(rec, "non-finite state", k + 1);
      return rec;
    }
    rec.states.push_back(x);
    rec.weight.push_back(std::exp(log_pi));
    rec.obs.push_back(dn / sq - sq * grid.dt);
    rec.innovation.push_back((dn - comp) / sq);
    rec.intensity.push_back(intensity(x));
  }
  return rec;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

DensityAccumulator::DensityAccumulator(int dim, const TimeGrid& grid, AverageMode mode)
    : dim_(dim), grid_(grid), mode_(mode) {
  if (!is_supported_dim(dim)) throw std::invalid_argument("unsupported dimension");
  sums_.resize(static_cast<size_t>(grid.steps + 1) * static_cast<size_t>(2 * dim * dim + 1));
}

void DensityAccumulator::add(const TrajectoryRecord& rec) {
  if (!(rec.grid == grid_)) throw std::invalid_argument("record grid does not match ensemble grid");
  const bool want_output = mode_ == AverageMode::output_measure;
  if ((rec.measure == SampleMeasure::output) != want_output) {
    throw std::invalid_argument(want_output
                                    ? "output-measure averaging needs output-measure records"
                                    : "input-measure averaging needs input-measure records");
  }
  if (rec.aborted) {
    ++aborted_;
    return;
  }
  if (rec.samples() != grid_.steps + 1) throw std::invalid_argument("record length mismatch");
  if (rec.states.front().size() != dim_) throw std::invalid_argument("record dimension mismatch");
  const size_t stride = static_cast<size_t>(2 * dim_ * dim_ + 1);
  for (int k = 0; k <= grid_.steps; ++k) {
    const Vector& v = rec.states[static_cast<size_t>(k)];
    const double n2 = v.squaredNorm();
    const double pi = rec.weight[static_cast<size_t>(k)];
    double scale, w;
    switch (mode_) {
      case AverageMode::input_measure:
        // chi chi^dag: pi for normalized storage, 1 for raw chi
        scale = rec.normalized_states ? pi : 1.0;
        w = 1.0;
        break;
      case AverageMode::weighted_posterior:
        scale = pi / n2;
        w = pi;
        break;
      default:
        scale = 1.0 / n2;
        w = 1.0;
        break;
    }
    CompensatedSum* s = &sums_[static_cast<size_t>(k) * stride];
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) {
        const cplx z = scale * v(r) * std::conj(v(c));
        s[2 * (r * dim_ + c)].add(z.real());
        s[2 * (r * dim_ + c) + 1].add(z.imag());
      }
    s[stride - 1].add(w);
  }
  ++count_;
}

DensityPath DensityAccumulator::mean() const {
  if (count_ == 0) throw std::runtime_error("no completed trajectories to average");
  const size_t stride = static_cast<size_t>(2 * dim_ * dim_ + 1);
  DensityPath out;
  out.reserve(static_cast<size_t>(grid_.steps) + 1);
  for (int k = 0; k <= grid_.steps; ++k) {
    const CompensatedSum* s = &sums_[static_cast<size_t>(k) * stride];
    const double w = s[stride - 1].value();
    Matrix m(dim_, dim_);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c)
        m(r, c) = cplx(s[2 * (r * dim_ + c)].value(), s[2 * (r * dim_ + c) + 1].value()) / w;
    out.emplace_back(m);
  }
  return out;
}

DensityPath ensemble_average(const std::vector<TrajectoryRecord>& records, AverageMode mode) {
  if (records.empty()) throw std::invalid_argument("ensemble_average needs at least one record");
  DensityAccumulator acc(static_cast<int>(records.front().states.front().size()),
                         records.front().grid, mode);
  for (const auto& r : records) acc.add(r);
  return acc.mean();
}

}  // namespace qfilt
