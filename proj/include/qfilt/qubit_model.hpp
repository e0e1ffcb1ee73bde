#pragma once

// Open qubit with H = sigma(h), L = sigma(l) (l real, so L is Hermitian),
// observed either by counting with collapse C = I + nu^{-1/2} L or by its
// diffusive limit. All dynamics are written for Bloch vectors r, or for the
// unnormalized pair (pi, p) with rho = (sigma(p) + pi I) / 2.

#include "qfilt/statespace.hpp"
#include "qfilt/trajectories.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qfilt {

struct QubitScenario {
  /// Rotation vector k = 2 h / hbar.
  Vec3 k = Vec3::Zero();
  Vec3 l = Vec3::Zero();
  double nu = 1.0;

  static QubitScenario from_h(const Vec3& h, const Vec3& l, double nu, double hbar = 1.0);
  Vec3 h(double hbar = 1.0) const { return 0.5 * hbar * k; }
  /// Operator-level model (H = sigma(h), L = sigma(l)).
  DiffusionModel diffusion_model(double hbar = 1.0) const;
  /// Counting model from the jump embedding of L at intensity nu.
  JumpModel jump_model(double hbar = 1.0) const;
  void validate() const;
};

struct PiPState {
  double pi = 1.0;
  Vec3 p = Vec3::Zero();

  Vec3 r() const { return p / pi; }
  /// Checks pi > 0 and |p| <= pi + 1e-9.
  bool is_positive() const;
};

struct BlochPath {
  TimeGrid grid;
  std::vector<Vec3> r;
  /// nu + 2 nu^{1/2} l.r + l.l at each grid point.
  std::vector<double> intensity;
  bool aborted = false;
  std::string diagnostic;
};

struct PiPPath {
  TimeGrid grid;
  std::vector<PiPState> states;
  bool aborted = false;
  std::string diagnostic;
};

/// Nonlinear Bloch-level counting filter on prescribed jump times.
BlochPath bloch_counting_filter(const QubitScenario& s, const BlochVector& r0,
                                const std::vector<double>& jump_times, const TimeGrid& grid);

/// Linear (pi, p) counting system driven by y_t = nu^{-1/2} n_t - nu^{1/2} t,
/// integrated with the exact exponential flow between jumps.
PiPPath linear_pi_p_counting(const QubitScenario& s, const BlochVector& r0,
                             const std::vector<double>& jump_times, const TimeGrid& grid);

enum class DiffusiveScheme {
  euler,
  /// Exact geometric factors for pi_+- and the spiral for p_perp; needs k
  /// colinear with l.
  exponential,
};

/// Diffusive (pi, p) system dpi = 2 l.p dw, dp + (p x k + 2 l.l p - 2 (l.p) l) dt = 2 l pi dw.
PiPPath diffusive_pi_p(const Vec3& k, const Vec3& l, const BlochVector& r0, const NoisePath& w,
                       DiffusiveScheme scheme = DiffusiveScheme::euler);

struct ColinearSolution {
  double pi_plus = 0.0;
  double pi_minus = 0.0;
  double pi = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 r = Vec3::Zero();
};

/// True when k and l are colinear (sine of the angle below 1e-10) or one
/// of them vanishes.
bool is_colinear(const Vec3& k, const Vec3& l);

/// Closed-form diffusive solution for k colinear with l, given w_t and t.
ColinearSolution closed_form_colinear(const Vec3& k, const Vec3& l, const BlochVector& r0,
                                      double w, double t);

/// dr/dt + r x k + 2 (l.l) r = 2 (l.r) l, exact matrix exponential per step.
std::vector<Vec3> bloch_master_solve(const Vec3& k, const Vec3& l, const BlochVector& r0,
                                     const TimeGrid& grid);

enum class LocalizationMeasure {
  /// w_t ~ N(0, t).
  input,
  /// w_t drawn from the observation law of the diffusive channel.
  output,
};

struct LocalizationStats {
  double mean_z = 0.0;
  double mean_z2 = 0.0;
  /// Fraction of counted samples with |z| > 0.99.
  double localized_fraction = 0.0;
  /// Likelihood-weighted mean of z (input measure only; equals z in law).
  double weighted_mean_z = 0.0;
  std::uint64_t n = 0;
  /// Samples with |w_t| < 1e-12 left out of the localized fraction.
  std::uint64_t excluded = 0;
};

/// z_omega(t) = (tanh(2|l|w) + z) / (1 + z tanh(2|l|w)) sampled over w_t.
LocalizationStats localization_statistic(double l_norm, double t, double z, std::uint64_t n,
                                         std::uint64_t seed,
                                         LocalizationMeasure measure = LocalizationMeasure::input);

/// The same formula for a single w.
double localized_z(double l_norm, double z, double w);

}  // namespace qfilt
