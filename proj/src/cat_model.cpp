#include "qfilt/cat_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qfilt::cat {

namespace {

constexpr double kOffDiagonalMass = 1e-10;
constexpr double kZeroProbability = 1e-14;
constexpr double kFamilyTol = 1e-10;

void require_bit(int b) {
  if (b != 0 && b != 1) throw std::invalid_argument("bit index must be 0 or 1");
}

Operator basis_projector(int tau) {
  Matrix m = Matrix::Zero(2, 2);
  m(tau, tau) = 1.0;
  return Operator(m);
}

}  // namespace

BitAmplitude delta(int tau) {
  require_bit(tau);
  BitAmplitude a{0.0, 0.0};
  a[static_cast<size_t>(tau)] = 1.0;
  return a;
}

double norm(const BitAmplitude& a) { return std::sqrt(std::norm(a[0]) + std::norm(a[1])); }

StateVector to_state(const BitAmplitude& a) {
  Vector v(2);
  v << a[0], a[1];
  return StateVector(v);
}

double PairAmplitude::norm() const {
  double s = 0.0;
  for (const auto& z : a) s += std::norm(z);
  return std::sqrt(s);
}

StateVector PairAmplitude::to_state() const {
  Vector v(4);
  v << a[0], a[1], a[2], a[3];
  return StateVector(v);
}

PairAmplitude interact(const BitAmplitude& psi, const BitAmplitude& phi) {
  PairAmplitude chi;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      chi.a[static_cast<size_t>(2 * s + t)] = psi[static_cast<size_t>(s)] * phi[static_cast<size_t>(s ^ t)];
  return chi;
}

DensityMatrix compound_density(const PairAmplitude& chi) {
  const double off = std::norm(chi(0, 1)) + std::norm(chi(1, 0));
  if (off > kOffDiagonalMass) {
    throw std::invalid_argument("pair amplitude is not classically correlated: off-diagonal mass " +
                                std::to_string(off));
  }
  const double n2 = chi.norm() * chi.norm();
  if (!(n2 > 0.0)) throw std::invalid_argument("zero pair amplitude");
  // Keep only tau-diagonal blocks of chi chi^dag.
  Matrix m = Matrix::Zero(4, 4);
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp)
      for (int t = 0; t < 2; ++t) m(2 * s + t, 2 * sp + t) = chi(s, t) * std::conj(chi(sp, t));
  return DensityMatrix(Operator(m), std::abs(n2 - 1.0) <= kNormTol ? TraceContract::unit
                                                                    : TraceContract::positive);
}

Operator compound_block(const DensityMatrix& compound, int tau) {
  require_bit(tau);
  if (compound.dim() != 4) throw std::invalid_argument("compound density must have dimension 4");
  Matrix m(2, 2);
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp) m(s, sp) = compound.matrix()(2 * s + tau, 2 * sp + tau);
  return Operator(m);
}

DensityMatrix partial_trace_system(const DensityMatrix& compound) {
  if (compound.dim() != 4) throw std::invalid_argument("partial trace needs dimension 4");
  return DensityMatrix(compound_block(compound, 0) + compound_block(compound, 1));
}

double outcome_probability(const DensityMatrix& compound, int tau) {
  return compound_block(compound, tau).trace().real();
}

DensityMatrix bayes_condition(const DensityMatrix& compound, int tau) {
  const double p = outcome_probability(compound, tau);
  if (!(p > kZeroProbability)) {
    throw std::domain_error("cannot condition on outcome " + std::to_string(tau) +
                            " of probability " + std::to_string(p));
  }
  return DensityMatrix((1.0 / p) * compound_block(compound, tau));
}

bool is_projector(const Operator& E, double tol) {
  if (!E.is_hermitian(tol)) return false;
  return ((E * E).matrix() - E.matrix()).cwiseAbs().maxCoeff() <= tol;
}

ProjectionResult projection_postulate(const StateVector& psi, const Operator& E) {
  if (psi.dim() != E.dim()) throw std::invalid_argument("state/projector dimension mismatch");
  if (!is_projector(E)) throw std::invalid_argument("E is not an orthogonal projector");
  if (!psi.is_normalized()) throw std::invalid_argument("state must be normalized");
  const Operator F = Operator::identity(E.dim()) - E;
  const Operator p = psi.outer();
  const Operator mixed = E * p * E + F * p * F;
  const double lambda = E.apply(psi.amplitudes()).squaredNorm();
  const double mu = F.apply(psi.amplitudes()).squaredNorm();
  return {DensityMatrix(mixed), lambda, mu};
}

StateVector luders_project(const StateVector& psi, const Operator& E) {
  if (psi.dim() != E.dim()) throw std::invalid_argument("state/projector dimension mismatch");
  if (!is_projector(E)) throw std::invalid_argument("E is not an orthogonal projector");
  const Vector v = E.apply(psi.amplitudes());
  const double n = v.norm();
  if (!(n > kZeroProbability)) throw std::domain_error("projection onto a zero-probability branch");
  return StateVector(Vector(v / n));
}

ReductionFamily::ReductionFamily(std::vector<std::string> labels, std::vector<Operator> ops,
                                 std::vector<double> weights)
    : labels_(std::move(labels)), ops_(std::move(ops)), weights_(std::move(weights)) {
  if (ops_.empty()) throw std::invalid_argument("reduction family is empty");
  if (labels_.size() != ops_.size() || weights_.size() != ops_.size()) {
    throw std::invalid_argument("reduction family: labels, operators and weights differ in size");
  }
  const int dim = ops_.front().dim();
  Operator sum = Operator::zero(dim);
  for (size_t i = 0; i < ops_.size(); ++i) {
    if (ops_[i].dim() != dim) throw std::invalid_argument("reduction family: mixed dimensions");
    if (!(weights_[i] > 0.0)) throw std::invalid_argument("reduction family: weights must be positive");
    sum += weights_[i] * (ops_[i].adjoint() * ops_[i]);
  }
  const double dev = (sum.matrix() - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (dev > kFamilyTol) {
    throw std::invalid_argument("reduction family violates sum mu V^dag V = I by " +
                                std::to_string(dev));
  }
}

ReductionFamily ReductionFamily::computational_projectors() {
  return ReductionFamily({"0", "1"}, {basis_projector(0), basis_projector(1)}, {1.0, 1.0});
}

std::vector<ReductionOutcome> reduction_apply(const ReductionFamily& family,
                                              const StateVector& psi) {
  if (!psi.is_normalized()) throw std::invalid_argument("state must be normalized");
  std::vector<ReductionOutcome> out;
  for (size_t i = 0; i < family.size(); ++i) {
    if (family.op(i).dim() != psi.dim()) throw std::invalid_argument("state/family dimension mismatch");
    const Vector v = family.op(i).apply(psi.amplitudes());
    ReductionOutcome o;
    o.label = family.label(i);
    o.probability = family.weight(i) * v.squaredNorm();
    if (v.norm() > kZeroProbability) o.posterior = StateVector(Vector(v / v.norm()));
    out.push_back(std::move(o));
  }
  return out;
}

Operator cat_observable(const BitAmplitude& g) {
  Matrix m = Matrix::Zero(4, 4);
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t) m(2 * s + t, 2 * s + t) = g[static_cast<size_t>(s ^ t)];
  return Operator(m);
}

NondemolitionReport nondemolition_check(const Operator& F, const BitAmplitude& g,
                                        const StateVector& psi) {
  if (F.dim() != 2 || psi.dim() != 2) throw std::invalid_argument("nondemolition check is for one bit");
  const Operator G = cat_observable(g);
  const Operator FI = kron(F, Operator::identity(2));
  const Operator c = FI * G - G * FI;
  Vector chi0(4);
  chi0 << psi[0], 0.0, psi[1], 0.0;
  return {c.apply(chi0).norm(), c.spectral_norm()};
}

NondemolitionReport nondemolition_check(const BitAmplitude& f, const BitAmplitude& g,
                                        const StateVector& psi) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = f[0];
  m(1, 1) = f[1];
  return nondemolition_check(Operator(m), g, psi);
}

ReducedObservables reduced_observables(const Operator& F, const BitAmplitude& g) {
  if (F.dim() != 2) throw std::invalid_argument("reduced observables are for one bit");
  Operator x0 = Operator::zero(2);
  Operator y0 = Operator::zero(2);
  for (int t = 0; t < 2; ++t) {
    const Operator e = basis_projector(t);
    x0 += e * F * e;
    y0 += g[static_cast<size_t>(t)] * e;
  }
  return {x0, y0};
}

}  // namespace qfilt::cat
