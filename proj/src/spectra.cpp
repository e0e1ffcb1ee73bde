#include "qfilt/spectra.hpp"

#include <cmath>
#include <stdexcept>

namespace qfilt::spectra {

void SpectralPoint::validate() const {
  auto ok = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!ok(omega) || !ok(tau) || !ok(hbar) || !ok(k)) {
    throw std::invalid_argument("spectral point needs positive finite omega, tau, hbar, k");
  }
}

double spectral_energy(const SpectralPoint& p, Law law) {
  p.validate();
  const double x = p.x();
  const double quantum = p.hbar * p.omega;
  const double thermal = p.k * p.tau;
  switch (law) {
    case Law::planck:
      if (x > kOverflowX) return quantum * std::exp(-x);
      return quantum / std::expm1(x);
    case Law::rayleigh:
      return thermal - 0.5 * quantum;
    case Law::wien:
      return quantum * std::exp(-x);
    case Law::classical:
      return thermal;
  }
  throw std::invalid_argument("unknown spectral law");
}

double mean_quanta(const SpectralPoint& p) {
  p.validate();
  const double x = p.x();
  if (x > kOverflowX) return std::exp(-x);
  return 1.0 / std::expm1(x);
}

SeriesResult mean_quanta_series(const SpectralPoint& p, int n_max) {
  p.validate();
  if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
  const double x = p.x();
  const double q = std::exp(-x);
  const double one_minus_q = -std::expm1(-x);
  SeriesResult r;
  double qn = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    const double pn = one_minus_q * qn;
    r.sum += n * pn;
    r.probability_mass += pn;
    qn *= q;
  }
  // sum_{n>M} n q^n (1 - q) = q^{M+1} (M + 1 - M q) / (1 - q)
  const double m = n_max;
  r.remainder = qn * (m + 1.0 - m * q) / one_minus_q;
  return r;
}

const char* law_name(Law law) {
  switch (law) {
    case Law::planck: return "planck";
    case Law::rayleigh: return "rayleigh";
    case Law::wien: return "wien";
    case Law::classical: return "classical";
  }
  return "unknown";
}

}  // namespace qfilt::spectra
