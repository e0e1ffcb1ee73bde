#pragma once

// Instantaneous measurement of a bit by a "cat" meter bit: the controlled
// shift interaction, compound and reduced states, Bayes conditioning,
// projection postulates, finite reduction families and nondemolition
// commutator checks. Pair index convention: 2 * sigma + tau, system bit
// sigma first, meter bit tau second.

#include "qfilt/statespace.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace qfilt::cat {

using BitAmplitude = std::array<cplx, 2>;

/// Computational basis vector delta_tau.
BitAmplitude delta(int tau);
double norm(const BitAmplitude& a);
StateVector to_state(const BitAmplitude& a);

struct PairAmplitude {
  std::array<cplx, 4> a{};

  cplx operator()(int sigma, int tau) const { return a[static_cast<size_t>(2 * sigma + tau)]; }
  double norm() const;
  StateVector to_state() const;
};

/// chi(sigma, tau) = psi(sigma) phi(tau xor sigma).
PairAmplitude interact(const BitAmplitude& psi, const BitAmplitude& phi);

/// Block-diagonal compound density sum_tau rho(tau) (x) P_tau. Rejects chi
/// with more than 1e-10 mass off the sigma == tau diagonal.
DensityMatrix compound_density(const PairAmplitude& chi);

/// Trace over the meter bit.
DensityMatrix partial_trace_system(const DensityMatrix& compound);

/// Unnormalized block rho(tau) of a compound density.
Operator compound_block(const DensityMatrix& compound, int tau);

/// rho(tau) / pi(tau). Throws std::domain_error when pi(tau) <= 1e-14.
DensityMatrix bayes_condition(const DensityMatrix& compound, int tau);

/// Probability pi(tau) = Tr rho(tau).
double outcome_probability(const DensityMatrix& compound, int tau);

struct ProjectionResult {
  DensityMatrix mixed;
  double lambda = 0.0;
  double mu = 0.0;
};

/// Mixture E P_psi E + F P_psi F with F = I - E.
ProjectionResult projection_postulate(const StateVector& psi, const Operator& E);

/// E psi / |E psi|. Throws std::domain_error when |E psi| <= 1e-14.
StateVector luders_project(const StateVector& psi, const Operator& E);

bool is_projector(const Operator& E, double tol = 1e-12);

struct ReductionOutcome {
  std::string label;
  double probability = 0.0;
  /// Absent when the outcome has probability below 1e-14.
  std::optional<StateVector> posterior;
};

/// Finite family V(y) with base weights mu(y) and sum mu V^dag V = I.
class ReductionFamily {
 public:
  ReductionFamily(std::vector<std::string> labels, std::vector<Operator> ops,
                  std::vector<double> weights);

  /// Projection-valued family {E(0), E(1)} in the computational basis.
  static ReductionFamily computational_projectors();

  size_t size() const { return ops_.size(); }
  const Operator& op(size_t i) const { return ops_.at(i); }
  double weight(size_t i) const { return weights_.at(i); }
  const std::string& label(size_t i) const { return labels_.at(i); }

 private:
  std::vector<std::string> labels_;
  std::vector<Operator> ops_;
  std::vector<double> weights_;
};

/// Outcome probabilities mu(y) |V(y) psi|^2 and posteriors V(y)psi / |V(y)psi|.
std::vector<ReductionOutcome> reduction_apply(const ReductionFamily& family,
                                              const StateVector& psi);

struct NondemolitionReport {
  /// |[F (x) I, G] chi0|.
  double on_initial = 0.0;
  /// Spectral norm of [F (x) I, G].
  double full = 0.0;
};

/// G = diag g(sigma xor tau) on the pair space.
Operator cat_observable(const BitAmplitude& g);

/// Checks with chi0 = psi (x) delta_0.
NondemolitionReport nondemolition_check(const Operator& F, const BitAmplitude& g,
                                        const StateVector& psi);
/// Diagonal F = diag(f).
NondemolitionReport nondemolition_check(const BitAmplitude& f, const BitAmplitude& g,
                                        const StateVector& psi);

struct ReducedObservables {
  /// X0 = sum_tau E(tau) F E(tau).
  Operator x0;
  /// Y0 = sum_tau g(tau) E(tau).
  Operator y0;
};

ReducedObservables reduced_observables(const Operator& F, const BitAmplitude& g);

}  // namespace qfilt::cat
