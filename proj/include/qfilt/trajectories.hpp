#pragma once

// Stochastic decoherence and filtering equations for a finite system driven
// by one diffusive or counting channel, their deterministic averages, and
// deterministic ensemble reduction.
//
// Record conventions: every path vector has steps + 1 entries indexed by grid
// point. Increment-valued paths (obs, innovation) store at index k the
// increment over (t_{k-1}, t_k] and hold 0 at k = 0.

#include "qfilt/rng.hpp"
#include "qfilt/statespace.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace qfilt {

struct TimeGrid {
  double T = 1.0;
  double dt = 1e-3;
  int steps = 1000;

  /// Requires 0 < dt <= T and T/dt integral to 1e-9 relative.
  static TimeGrid make(double T, double dt);
  double t(int k) const { return static_cast<double>(k) * dt; }
  /// Grid index closest to time t.
  int index_of(double t) const;
  bool operator==(const TimeGrid& o) const { return steps == o.steps && dt == o.dt; }
};

/// dchi + K chi dt = L chi dy with K = L^dag L / 2 + (i/hbar) H.
struct DiffusionModel {
  Operator H;
  Operator L;
  double hbar = 1.0;

  DiffusionModel(Operator h, Operator l, double hbar_ = 1.0);
  Operator K() const;
};

/// Counting model with collapse C, energy E and intensity nu;
/// G = (nu/2) C^dag C + (i/hbar) E.
struct JumpModel {
  Operator C;
  Operator E;
  double nu = 1.0;
  double hbar = 1.0;

  JumpModel(Operator c, Operator e, double nu_, double hbar_ = 1.0);
  Operator G() const;
  /// Linear between-jump generator A = (nu/2)(C^dag C - I) + (i/hbar) E.
  Operator A() const;
};

/// C = I + nu^{-1/2} L, E = H + (nu^{1/2} / 2i)(L - L^dag).
JumpModel jump_to_diffusion_embedding(const Operator& L, const Operator& H, double nu,
                                      double hbar = 1.0);

enum class NoiseKind { wiener, poisson };

struct NoisePath {
  NoiseKind kind = NoiseKind::wiener;
  TimeGrid grid;
  /// Wiener: dw_k ~ N(0, dt). Poisson: event count in the step.
  std::vector<double> increments;
  /// Poisson only: exact event times, ascending.
  std::vector<double> event_times;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

NoisePath wiener_path(const TimeGrid& grid, std::uint64_t seed, std::uint64_t index);
/// Poisson path of the given rate with exponential inter-arrival times.
NoisePath poisson_path(const TimeGrid& grid, double rate, std::uint64_t seed,
                       std::uint64_t index);
/// Poisson path with prescribed event times (for replaying observed data).
NoisePath poisson_path_from_events(const TimeGrid& grid, double rate,
                                   std::vector<double> event_times);

/// Probability measure the record was sampled under: input (reference
/// Wiener/Poisson noise) or output (the observation's own law).
enum class SampleMeasure { input, output };

struct TrajectoryRecord {
  TimeGrid grid;
  SampleMeasure measure = SampleMeasure::input;
  /// True when states are normalized posteriors, false for linear chi.
  bool normalized_states = false;
  std::vector<Vector> states;
  /// Likelihood weight pi(t) = |chi(t)|^2.
  std::vector<double> weight;
  std::vector<double> obs;
  std::vector<double> innovation;
  /// Conditional intensity nu |C psi|^2 at each grid point (counting only).
  std::vector<double> intensity;
  std::vector<double> jump_times;
  bool aborted = false;
  std::string diagnostic;

  int samples() const { return static_cast<int>(states.size()); }
  /// |psi><psi| of the normalized state.
  Operator projector(int k) const;
  /// Unnormalized density pi |psi><psi| (= chi chi^dag).
  Operator density(int k) const;
};

using DensityPath = std::vector<Operator>;

/// Classical RK4 for drho/dt + K rho + rho K^dag = L rho L^dag.
/// Throws std::runtime_error if the trace drifts by more than 1e-6.
DensityPath integrate_lindblad(const DiffusionModel& model, const Operator& rho0,
                               const TimeGrid& grid);
/// RK4 for drho/dt = -(G rho + rho G^dag) + nu C rho C^dag.
DensityPath integrate_jump_master(const JumpModel& model, const Operator& rho0,
                                  const TimeGrid& grid);

/// Euler-Maruyama step with exact drift: chi' = exp(-K dt) chi + L chi dy, with dy the given Wiener
/// increments (input measure).
TrajectoryRecord simulate_linear_diffusive(const DiffusionModel& model, const StateVector& psi0,
                                           const NoisePath& noise);

enum class DiffusiveDrive {
  /// Noise increments are the observation dy under the input measure.
  observation,
  /// Noise increments are the innovation dw~; dy = dw~ + 2 Re<L> dt
  /// samples the output measure.
  innovation,
};

/// Per-step normalization of the linear Euler-Maruyama update.
TrajectoryRecord simulate_nonlinear_diffusive(const DiffusionModel& model, const StateVector& psi0,
                                              const NoisePath& noise,
                                              DiffusiveDrive drive = DiffusiveDrive::observation);

/// Exact between-jump flow exp(-A s) and chi -> C chi at each input event.
/// Observation dy = nu^{-1/2} dn - nu^{1/2} dt; innovation
/// nu^{-1/2}(dn - int nu |C psi|^2 ds).
TrajectoryRecord simulate_linear_jump(const JumpModel& model, const StateVector& psi0,
                                      const NoisePath& noise);
/// Posterior given an observed input-measure counting path: the linear
/// solution normalized step by step, weight pi = |chi|^2.
TrajectoryRecord simulate_nonlinear_jump(const JumpModel& model, const StateVector& psi0,
                                         const NoisePath& noise);
/// Posterior sampled under the output measure by thinning with bound
/// nu * sigma_max(C)^2. Weight is the likelihood ratio against the
/// reference Poisson(nu) law.
TrajectoryRecord simulate_nonlinear_jump_thinned(const JumpModel& model, const StateVector& psi0,
                                                 const TimeGrid& grid, std::uint64_t seed,
                                                 std::uint64_t index);

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

enum class AverageMode {
  /// Unweighted mean of chi chi^dag over input-measure records.
  input_measure,
  /// Mean of posterior projectors weighted by pi, normalized by sum of pi.
  weighted_posterior,
  /// Unweighted mean of posterior projectors over output-measure records.
  output_measure,
};

/// Streaming reduction of density paths; records must be added in a fixed
/// order for bit-reproducible results. Aborted records are counted and
/// skipped.
class DensityAccumulator {
 public:
  DensityAccumulator(int dim, const TimeGrid& grid, AverageMode mode);

  void add(const TrajectoryRecord& rec);
  DensityPath mean() const;
  long long count() const { return count_; }
  long long aborted() const { return aborted_; }

 private:
  int dim_;
  TimeGrid grid_;
  AverageMode mode_;
  long long count_ = 0;
  long long aborted_ = 0;
  // Per sample: 2 * dim * dim real parts, then the weight.
  std::vector<CompensatedSum> sums_;
};

DensityPath ensemble_average(const std::vector<TrajectoryRecord>& records, AverageMode mode);

struct EnsembleOptions {
  std::uint64_t n = 1;
  int workers = 1;
  std::uint64_t chunk = 256;
};

/// Runs make(i) for i in [0, n) across workers and folds results with
/// fold(i, result) strictly in index order.
template <class Make, class Fold>
void run_ensemble(const EnsembleOptions& opt, Make&& make, Fold&& fold) {
  using R = std::invoke_result_t<Make&, std::uint64_t>;
  const int workers = opt.workers < 1 ? 1 : opt.workers;
  const std::uint64_t chunk = opt.chunk < 1 ? 1 : opt.chunk;
  for (std::uint64_t start = 0; start < opt.n; start += chunk) {
    const std::uint64_t m = std::min(chunk, opt.n - start);
    std::vector<std::optional<R>> slots(m);
    if (workers == 1) {
      for (std::uint64_t i = 0; i < m; ++i) slots[i].emplace(make(start + i));
    } else {
      std::exception_ptr err;
      std::mutex err_mu;
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::uint64_t i = static_cast<std::uint64_t>(w); i < m;
                 i += static_cast<std::uint64_t>(workers)) {
              slots[i].emplace(make(start + i));
            }
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      if (err) std::rethrow_exception(err);
    }
    for (std::uint64_t i = 0; i < m; ++i) fold(start + i, *slots[i]);
  }
}

}  // namespace qfilt
