// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance [scratch_dir]

#include "cli/config.hpp"
#include "cli/scenarios.hpp"
#include "qfilt/bell_hidden.hpp"
#include "qfilt/cat_model.hpp"
#include "qfilt/ito_algebra.hpp"
#include "qfilt/qubit_model.hpp"
#include "qfilt/spectra.hpp"
#include "qfilt/trajectories.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace qfilt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const double kHalf = 1.0 / std::sqrt(2.0);

StateVector balanced() {
  Vector v(2);
  v << kHalf, kHalf;
  return StateVector(v);
}

// Qubit with H = sigma_z / 2, L = sigma_z, psi0 = (1,1)/sqrt 2:
// rho_01(t) = exp(-(2 + i) t) / 2, diagonal constant 1/2.
cplx rho01_exact(double t) { return 0.5 * std::exp(cplx(-2.0 * t, -t)); }
Vec3 bloch_exact(double t) { return Vec3(std::exp(-2 * t) * std::cos(t), std::exp(-2 * t) * std::sin(t), 0.0); }

Vec3 bloch_of(const Operator& rho) {
  const Matrix& m = rho.matrix();
  const double tr = (m(0, 0) + m(1, 1)).real();
  return Vec3(2 * m(0, 1).real(), -2 * m(0, 1).imag(), (m(0, 0) - m(1, 1)).real()) / tr;
}

// ---------------------------------------------------------------------------

Outcome c1_ito() {
  using namespace qfilt::ito;
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (int a_mu = 0; a_mu <= 1; ++a_mu)
    for (int a_nu = 1; a_nu <= 2; ++a_nu)
      for (int b_mu = 0; b_mu <= 1; ++b_mu)
        for (int b_nu = 1; b_nu <= 2; ++b_nu) {
          // dL_mu^nu dL_mu'^nu' = delta^nu_mu' dL_mu^nu' with the delta
          // vanishing on the (-) and (+) indices
          Element expect(1);
          if (a_nu == b_mu && a_nu == 1) expect = Element::basis(1, a_mu, b_nu);
          if (!(mul(Element::basis(1, a_mu, a_nu), Element::basis(1, b_mu, b_nu)) == expect)) ++mismatches;
        }
  o.require(mismatches == 0, std::to_string(16 - mismatches) + "/16 basis products");
  const auto w = matrix_rep(wiener()), m = matrix_rep(compensated_poisson()), t = matrix_rep(dt());
  const bool ids = w * m - t == matrix_rep(annihilation()) && m * w - t == matrix_rep(creation()) &&
                   m - w == matrix_rep(exchange());
  o.require(ids, "matrix identities");
  const auto table = verify_d1_table();
  const bool lib = std::all_of(table.begin(), table.end(), [](const TableCheck& c) { return c.pass; });
  o.require(lib, "library self-check " + std::to_string(table.size()) + " rows");
  const double secs = seconds_since(t0);
  o.require(secs < 1.0, "runtime " + fmt("%.3f", secs) + " s");
  return o;
}

Outcome c2_decoherence_mean() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const DiffusionModel model(pauli(Vec3(0, 0, 0.5)), pauli(Vec3(0, 0, 1)));
  const TimeGrid grid = TimeGrid::make(1.0, 1e-3);
  DensityAccumulator acc(2, grid, AverageMode::input_measure);
  EnsembleOptions opt;
  opt.n = 10000;
  run_ensemble(
      opt, [&](std::uint64_t i) { return simulate_linear_diffusive(model, balanced(), wiener_path(grid, 7, i)); },
      [&](std::uint64_t, const TrajectoryRecord& r) { acc.add(r); });
  const DensityPath mean = acc.mean();
  double worst = 0.0;
  for (double t : {0.25, 0.5, 1.0}) {
    Matrix exact(2, 2);
    exact << 0.5, rho01_exact(t), std::conj(rho01_exact(t)), 0.5;
    const Matrix& m = mean[static_cast<size_t>(grid.index_of(t))].matrix();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        worst = std::max({worst, std::abs(m(i, j).real() - exact(i, j).real()),
                          std::abs(m(i, j).imag() - exact(i, j).imag())});
      }
  }
  o.require(worst <= 0.05, "max component deviation " + fmt("%.4g", worst) + " <= 0.05");
  o.require(acc.aborted() == 0, "aborted " + std::to_string(acc.aborted()));
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime " + fmt("%.2f", secs) + " s");
  return o;
}

// pi_+-(t) = (1 +- z)/2 exp(+-2|l| w_t - 2|l|^2 t)
double pi_pm_error(const PiPPath& path, const NoisePath& w, const Vec3& l, const Vec3& r0) {
  const double ln = l.norm();
  const Vec3 e = l / ln;
  const double z = e.dot(r0);
  double wt = 0.0, worst = 0.0;
  for (size_t n = 0; n < path.states.size(); ++n) {
    if (n > 0) wt += w.increments[n - 1];
    const double t = w.grid.t(static_cast<int>(n));
    const double plus = 0.5 * (1 + z) * std::exp(2 * ln * wt - 2 * ln * ln * t);
    const double minus = 0.5 * (1 - z) * std::exp(-2 * ln * wt - 2 * ln * ln * t);
    const PiPState& s = path.states[n];
    const double zp = e.dot(s.p);
    worst = std::max({worst, std::abs(0.5 * (s.pi + zp) - plus), std::abs(0.5 * (s.pi - zp) - minus)});
  }
  return worst;
}

Outcome c3_closed_form() {
  Outcome o;
  const Vec3 l(0, 0, 1), k(0, 0, 1), r0(1, 0, 0);
  {
    const TimeGrid grid = TimeGrid::make(1.0, 1e-3);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
      const NoisePath w = wiener_path(grid, 7, i);
      worst = std::max(worst, pi_pm_error(diffusive_pi_p(k, l, BlochVector(r0), w, DiffusiveScheme::exponential), w, l, r0));
    }
    o.require(worst <= 1e-10, "exponential scheme sup error over 100 paths " + fmt("%.3g", worst) + " <= 1e-10");
  }
  {
    const TimeGrid grid = TimeGrid::make(1.0, 1e-4);
    const NoisePath w = wiener_path(grid, 7, 0);
    const double err = pi_pm_error(diffusive_pi_p(k, l, BlochVector(r0), w, DiffusiveScheme::euler), w, l, r0);
    o.require(err <= 1e-2, "Euler dt=1e-4 seed 7 path 0 sup error " + fmt("%.4g", err) + " <= 1e-2");
  }
  return o;
}

Outcome c4_localization() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const LocalizationStats s = localization_statistic(20.0, 1.0, 0.0, 10000, 7);
  // E[tanh^2(40 w)], w ~ N(0, 1)
  const auto f = [](double w) {
    const double th = std::tanh(40.0 * w);
    return th * th * std::exp(-0.5 * w * w) / std::sqrt(2.0 * M_PI);
  };
  double oracle = 0.0;
  const double nodes[] = {-12.0, -1.0, -0.1, 0.0, 0.1, 1.0, 12.0};
  for (int i = 0; i + 1 < 7; ++i)
    oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, nodes[i], nodes[i + 1], 15, 1e-14);
  o.require(s.mean_z2 >= 0.97, "E[z^2] " + fmt("%.5f", s.mean_z2) + " >= 0.97");
  o.require(std::abs(s.mean_z2 - oracle) <= 0.01,
            "quadrature oracle " + fmt("%.5f", oracle) + ", |diff| " + fmt("%.2g", std::abs(s.mean_z2 - oracle)) + " <= 0.01");
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s");
  return o;
}

Outcome c5_central_limit() {
  Outcome o;
  const double nu = 1e4;
  const JumpModel model = jump_to_diffusion_embedding(pauli(Vec3(0, 0, 1)), pauli(Vec3(0, 0, 0.5)), nu);
  const TimeGrid grid = TimeGrid::make(1.0, 1e-3);
  DensityAccumulator acc(2, grid, AverageMode::output_measure);
  EnsembleOptions opt;
  opt.n = 10000;
  run_ensemble(
      opt, [&](std::uint64_t i) { return simulate_nonlinear_jump_thinned(model, balanced(), grid, 7, i); },
      [&](std::uint64_t, const TrajectoryRecord& r) { acc.add(r); });
  const DensityPath mean = acc.mean();
  double worst = 0.0;
  for (int k = 0; k <= grid.steps; ++k)
    worst = std::max(worst, (bloch_of(mean[static_cast<size_t>(k)]) - bloch_exact(grid.t(k))).cwiseAbs().maxCoeff());
  o.require(worst <= 0.05, "nu=1e4 sup Bloch distance " + fmt("%.4g", worst) + " <= 0.05");
  o.require(acc.aborted() == 0, "aborted " + std::to_string(acc.aborted()));
  return o;
}

Outcome c6_innovation() {
  Outcome o;
  const double T = 1.0;
  const std::uint64_t N = 10000;
  const double bound = 3.0 * std::sqrt(T / static_cast<double>(N));
  const Operator H = pauli(Vec3(0, 0, 0.5)), L = pauli(Vec3(0, 0, 1));
  {
    const DiffusionModel model(H, L);
    const TimeGrid grid = TimeGrid::make(T, 1e-3);
    double sum = 0.0;
    EnsembleOptions opt;
    opt.n = N;
    run_ensemble(
        opt,
        [&](std::uint64_t i) {
          return simulate_nonlinear_diffusive(model, balanced(), wiener_path(grid, 7, i), DiffusiveDrive::innovation);
        },
        [&](std::uint64_t, const TrajectoryRecord& r) {
          // w~_T = y_T - int 2 Re<L> dt, recomputed from the observation record
          double w = 0.0;
          for (int k = 1; k < r.samples(); ++k) {
            const Vector& x = r.states[static_cast<size_t>(k - 1)];
            const double mean_l = 2.0 * (x.adjoint() * L.matrix() * x)(0, 0).real() / x.squaredNorm();
            w += r.obs[static_cast<size_t>(k)] - mean_l * grid.dt;
          }
          sum += w;
        });
    const double mean = sum / static_cast<double>(N);
    o.require(std::abs(mean) <= bound, "diffusive mean w~_T " + fmt("%.4g", mean) + " within " + fmt("%.3g", bound));
  }
  {
    const JumpModel model = jump_to_diffusion_embedding(L, H, 100.0);
    const TimeGrid grid = TimeGrid::make(T, 1e-3);
    double sum = 0.0;
    EnsembleOptions opt;
    opt.n = N;
    run_ensemble(
        opt, [&](std::uint64_t i) { return simulate_nonlinear_jump_thinned(model, balanced(), grid, 7, i); },
        [&](std::uint64_t, const TrajectoryRecord& r) {
          double w = 0.0;
          for (double x : r.innovation) w += x;
          sum += w;
        });
    const double mean = sum / static_cast<double>(N);
    o.require(std::abs(mean) <= bound, "counting mean innovation " + fmt("%.4g", mean) + " within " + fmt("%.3g", bound));
  }
  return o;
}

double shannon_bits(double p) {
  double h = 0.0;
  for (double q : {p, 1.0 - p})
    if (q > 0) h -= q * std::log2(q);
  return h;
}

Outcome c7_cat() {
  using namespace qfilt::cat;
  Outcome o;
  const DensityMatrix comp = compound_density(interact({kHalf, kHalf}, delta(0)));
  const double s = von_neumann_entropy(partial_trace_system(comp));
  o.require(std::abs(s - 1.0) <= 1e-12, "balanced entropy " + fmt("%.15f", s));

  double bayes = 0.0, ent = 0.0;
  const int triples[][3] = {{3, 4, 5}, {5, 12, 13}, {8, 15, 17}};
  for (const auto& tr : triples) {
    const double a = static_cast<double>(tr[0]) / tr[2], b = static_cast<double>(tr[1]) / tr[2];
    const DensityMatrix c = compound_density(interact({a, b}, delta(0)));
    const DensityMatrix red = partial_trace_system(c);
    Matrix rebuilt = Matrix::Zero(2, 2);
    for (int tau = 0; tau < 2; ++tau) rebuilt += outcome_probability(c, tau) * bayes_condition(c, tau).matrix();
    bayes = std::max(bayes, (rebuilt - red.matrix()).cwiseAbs().maxCoeff());
    ent = std::max({ent, std::abs(von_neumann_entropy(c) - von_neumann_entropy(red)),
                    std::abs(von_neumann_entropy(red) - shannon_bits(a * a))});
  }
  o.require(bayes <= 1e-15, "Bayes reconstruction " + fmt("%.2g", bayes));
  o.require(ent <= 1e-12, "entropy identities " + fmt("%.2g", ent));
  const auto diag = nondemolition_check(BitAmplitude{1.0, -1.0}, BitAmplitude{0.0, 1.0}, balanced());
  o.require(diag.on_initial <= 1e-14, "diagonal F on chi0 " + fmt("%.2g", diag.on_initial));
  const auto full = nondemolition_check(sigma_x(), BitAmplitude{0.0, 1.0}, balanced());
  o.require(full.full > 0.5, "sigma_x full commutator " + fmt("%.4g", full.full) + " > 0.5");
  return o;
}

Outcome c8_bell() {
  using namespace qfilt::bell;
  Outcome o;
  const BlochVector ez(0, 0, 1);
  double worst = 0.0;
  for (const auto& e : fibonacci_directions(100)) worst = std::max(worst, std::abs(lambda_mean(e, ez) - e.vec().z()));
  o.require(worst <= 1e-9, "lambda mean over 100 directions " + fmt("%.2g", worst));
  const DiscontinuityReport d = discontinuity_probe(0.1, ez, {1e-2, 1e-4, 1e-6});
  bool witnessed = d.has_boundary && !d.witnesses.empty();
  for (const auto& w : d.witnesses)
    witnessed = witnessed && w.s_plus != w.s_minus &&
                s_lambda(Direction(w.e_plus), 0.1, ez) == w.s_plus && s_lambda(Direction(w.e_minus), 0.1, ez) == w.s_minus;
  o.require(witnessed, "discontinuity witness at lambda=0.1 (" + d.boundary + ")");
  const Direction dz(Vec3(0, 0, 1)), dx(Vec3(1, 0, 0));
  const double col = affinity_sweep(dz, dz, BlochVector(0, 0, 0.9), BlochVector(0, 0, -0.3)).max_deviation;
  const double orth = affinity_sweep(dz, dx, BlochVector(0.6, 0, 0.8), BlochVector(0.8, 0, 0.6)).max_deviation;
  o.require(col <= 1e-9, "colinear affinity deviation " + fmt("%.2g", col));
  o.require(orth > 1e-3, "orthogonal affinity deviation " + fmt("%.4g", orth) + " > 1e-3");
  return o;
}

Outcome c9_planck() {
  using namespace qfilt::spectra;
  Outcome o;
  const auto at = [](double x) { return SpectralPoint{x, 1.0, 1.0, 1.0}; };
  const auto planck_ld = [](long double x) { return x / std::expm1(x); };
  const double lo = std::abs(spectral_energy(at(0.1), Law::planck) - spectral_energy(at(0.1), Law::rayleigh));
  const double oracle_lo = static_cast<double>(std::abs(planck_ld(0.1L) - (1.0L - 0.05L)));
  o.require(lo <= 1e-3, "|planck-rayleigh| at x=0.1 " + fmt("%.3g", lo) + " (oracle " + fmt("%.3g", oracle_lo) + ")");
  const double p7 = spectral_energy(at(7.0), Law::planck);
  const double hi = std::abs(p7 - spectral_energy(at(7.0), Law::wien)) / p7;
  const double oracle_hi = static_cast<double>(std::exp(-7.0L));
  o.require(hi <= 1e-3, "wien relative at x=7 " + fmt("%.3g", hi) + " (oracle " + fmt("%.3g", oracle_hi) + ")");
  double series = 0.0;
  for (double x : {0.1, 0.5, 1.0, 3.0, 7.0}) {
    const double exact = static_cast<double>(1.0L / std::expm1(static_cast<long double>(x)));
    series = std::max(series, std::abs(mean_quanta_series(at(x), 2000).sum - exact));
  }
  o.require(series <= 1e-12, "series vs closed form " + fmt("%.2g", series));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c10_determinism(const fs::path& scratch) {
  using namespace qfilt::cli;
  Outcome o;
  const std::string small = "grid:\n  T: 0.2\n  dt: 0.01\nensemble:\n  N: 600\n  seed: 21\n";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"diffusive", small},
      {"diffusive-input", small + "scheme:\n  measure: input\n"},
      {"jump", small},
      {"jump-input", small + "scheme:\n  measure: input\n"},
      {"qubit-counting", small},
      {"qubit-diffusive", small},
      {"closed-form", "params:\n  samples: 5000\n"},
      {"cat", ""},
      {"bell", ""},
      {"spectra", ""},
      {"ito-check", ""},
  };
  int files = 0, differing = 0;
  for (const auto& [name, body] : runs) {
    const std::string scenario = name.substr(0, name.find("-input"));
    std::vector<fs::path> dirs;
    for (const char* tag : {"a_w1", "b_w1", "c_w3"}) {
      const fs::path d = scratch / (name + "_" + tag);
      fs::remove_all(d);
      ScenarioConfig c = parse_config("scenario: " + scenario + "\n" + body);
      c.workers = std::string(tag).find("w3") != std::string::npos ? 3 : 1;
      run_scenario(c, d.string());
      dirs.push_back(d);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const std::string ref = slurp(e.path());
      ++files;
      for (size_t i = 1; i < dirs.size(); ++i) {
        if (slurp(dirs[i] / e.path().filename()) != ref) {
          ++differing;
          std::printf("  differs: %s vs %s\n", e.path().string().c_str(), (dirs[i] / e.path().filename()).string().c_str());
        }
      }
    }
  }
  o.require(differing == 0 && files > 0,
            std::to_string(files) + " files across " + std::to_string(runs.size()) + " runs, " +
                std::to_string(differing) + " differing");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "qfilt_acceptance";
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 ito table exactness", c1_ito},
      {"C2 decoherence mean identity", c2_decoherence_mean},
      {"C3 closed-form regression", c3_closed_form},
      {"C4 localization", c4_localization},
      {"C5 jump to diffusion limit", c5_central_limit},
      {"C6 innovation martingale", c6_innovation},
      {"C7 cat model exactness", c7_cat},
      {"C8 hidden variable identity", c8_bell},
      {"C9 planck limits", c9_planck},
      {"C10 determinism", [&] { return c10_determinism(scratch); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
