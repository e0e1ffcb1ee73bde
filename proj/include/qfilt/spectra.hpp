#pragma once

// Mean energy of a radiation mode of frequency omega at temperature tau,
// all written through x = hbar omega / (k tau).

namespace qfilt::spectra {

struct SpectralPoint {
  double omega = 1.0;
  double tau = 1.0;
  double hbar = 1.0;
  double k = 1.0;

  /// Throws unless omega, tau, hbar, k are positive and finite.
  void validate() const;
  double x() const { return hbar * omega / (k * tau); }
};

enum class Law { planck, rayleigh, wien, classical };

/// Above this x the Planck law is evaluated as its Wien asymptote.
inline constexpr double kOverflowX = 700.0;

double spectral_energy(const SpectralPoint& p, Law law);

/// (e^x - 1)^{-1}.
double mean_quanta(const SpectralPoint& p);

struct SeriesResult {
  /// sum_{n=0}^{n_max} n p_n.
  double sum = 0.0;
  /// sum_{n=0}^{n_max} p_n.
  double probability_mass = 0.0;
  /// Exact tail sum_{n > n_max} n p_n, an upper bound on the truncation error.
  double remainder = 0.0;
};

/// Geometric distribution p_n = (1 - e^{-x}) e^{-n x}.
SeriesResult mean_quanta_series(const SpectralPoint& p, int n_max);

const char* law_name(Law law);

}  // namespace qfilt::spectra
