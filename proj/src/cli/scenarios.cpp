#include "cli/scenarios.hpp"

#include "qfilt/bell_hidden.hpp"
#include "qfilt/cat_model.hpp"
#include "qfilt/ito_algebra.hpp"
#include "qfilt/qubit_model.hpp"
#include "qfilt/spectra.hpp"
#include "qfilt/trajectories.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>

namespace qfilt::cli {

namespace {

struct Context {
  const ScenarioConfig& cfg;
  ArtifactWriter& out;
  RunResult& result;
  std::vector<std::string> diagnostics;
};

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json cplx_json(cplx z) { return Json::array({z.real(), z.imag()}); }

Json matrix_json(const Operator& op) {
  Json rows = Json::array();
  for (int i = 0; i < op.dim(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < op.dim(); ++j) row.push_back(cplx_json(op(i, j)));
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::string> density_columns(int dim) {
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const std::string base = "rho" + std::to_string(i) + std::to_string(j);
      cols.push_back(base + "_re");
      cols.push_back(base + "_im");
    }
  }
  cols.push_back("trace");
  return cols;
}

Table density_table(const TimeGrid& grid, const DensityPath& path) {
  const int dim = path.front().dim();
  Table t(density_columns(dim));
  for (size_t k = 0; k < path.size(); ++k) {
    std::vector<double> row{grid.t(static_cast<int>(k))};
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        row.push_back(path[k](i, j).real());
        row.push_back(path[k](i, j).imag());
      }
    }
    row.push_back(path[k].trace().real());
    t.add_row(std::move(row));
  }
  return t;
}

Table record_table(const TrajectoryRecord& rec) {
  const int dim = rec.states.empty() ? 2 : static_cast<int>(rec.states.front().size());
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < dim; ++i) {
    cols.push_back("psi" + std::to_string(i) + "_re");
    cols.push_back("psi" + std::to_string(i) + "_im");
  }
  for (const char* c : {"weight", "obs_increment", "innovation"}) cols.emplace_back(c);
  const bool counting = !rec.intensity.empty();
  if (counting) cols.emplace_back("intensity");
  Table t(cols);
  for (int k = 0; k < rec.samples(); ++k) {
    std::vector<double> row{rec.grid.t(k)};
    for (int i = 0; i < dim; ++i) {
      row.push_back(rec.states[static_cast<size_t>(k)](i).real());
      row.push_back(rec.states[static_cast<size_t>(k)](i).imag());
    }
    row.push_back(rec.weight[static_cast<size_t>(k)]);
    row.push_back(rec.obs[static_cast<size_t>(k)]);
    row.push_back(rec.innovation[static_cast<size_t>(k)]);
    if (counting) row.push_back(rec.intensity[static_cast<size_t>(k)]);
    t.add_row(std::move(row));
  }
  return t;
}

/// Entry-wise max |a - b| over the whole path and at selected times.
Json path_deviation(const TimeGrid& grid, const DensityPath& a, const DensityPath& b) {
  auto dev_at = [&](size_t k) {
    return (a[k].matrix() - b[k].matrix()).cwiseAbs().maxCoeff();
  };
  // component-wise: real and imaginary parts separately
  auto comp_dev = [&](size_t k) {
    const Matrix d = a[k].matrix() - b[k].matrix();
    return std::max(d.real().cwiseAbs().maxCoeff(), d.imag().cwiseAbs().maxCoeff());
  };
  double sup = 0.0;
  for (size_t k = 0; k < a.size(); ++k) sup = std::max(sup, comp_dev(k));
  Json at = Json::array();
  for (double t : {0.25, 0.5, 1.0}) {
    if (t > grid.T + 1e-12) continue;
    const auto k = static_cast<size_t>(grid.index_of(t));
    at.push_back({{"t", grid.t(static_cast<int>(k))},
                  {"max_component_dev", comp_dev(k)},
                  {"max_modulus_dev", dev_at(k)}});
  }
  Json j;
  j["sup_component_dev"] = sup;
  j["at"] = at;
  if (a.front().dim() == 2) {
    double bsup = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
      bsup = std::max(bsup, (bloch_components(a[k]) - bloch_components(b[k])).cwiseAbs().maxCoeff());
    }
    j["bloch_sup_dev"] = bsup;
  }
  return j;
}

int model_dim(const ScenarioConfig& c) {
  if (c.C) return c.C->build().dim();
  if (c.L) return c.L->build().dim();
  if (c.H) return c.H->build().dim();
  return 2;
}

Operator hamiltonian(const ScenarioConfig& c, int dim) {
  if (c.H) return c.H->build();
  if (dim != 2) return Operator::zero(dim);
  return pauli(0.5 * c.hbar_or_default() * c.k_resolved());
}

Operator coupling(const ScenarioConfig& c, int dim) {
  if (c.L) return c.L->build();
  if (dim != 2) throw ConfigError(c.line_of("model.H"), "model.L is required for 4x4 models");
  return pauli(c.l_or_default());
}

EnsembleOptions ensemble_options(const ScenarioConfig& c) {
  EnsembleOptions opt;
  opt.n = c.N_or_default();
  opt.workers = c.workers_or_default();
  return opt;
}

/// Streaming mean, plain and weighted, of w~_T = sum of innovation increments.
struct InnovationStats {
  CompensatedSum sum, wsum, weights, sq;
  std::uint64_t n = 0;

  void add(const TrajectoryRecord& rec) {
    if (rec.aborted) return;
    CompensatedSum path;
    for (double x : rec.innovation) path.add(x);
    const double v = path.value();
    const double w = rec.weight.back();
    sum.add(v);
    sq.add(v * v);
    wsum.add(w * v);
    weights.add(w);
    ++n;
  }
  Json to_json(double T) const {
    const double dn = static_cast<double>(n);
    Json j;
    j["n"] = n;
    j["mean"] = n ? sum.value() / dn : 0.0;
    j["second_moment"] = n ? sq.value() / dn : 0.0;
    j["weighted_mean"] = n ? wsum.value() / weights.value() : 0.0;
    j["bound_3sigma"] = n ? 3.0 * std::sqrt(T / dn) : 0.0;
    return j;
  }
};

void run_diffusive(Context& ctx) {
  const auto& c = ctx.cfg;
  const int dim = model_dim(c);
  const DiffusionModel model(hamiltonian(c, dim), coupling(c, dim), c.hbar_or_default());
  const StateVector psi = c.psi_resolved(dim);
  const TimeGrid grid = TimeGrid::make(c.T_or_default(), c.dt_or_default());
  const bool input = c.measure_or_default() == "input";
  const std::uint64_t seed = c.seed_or_default();

  DensityAccumulator acc(dim, grid, input ? AverageMode::input_measure : AverageMode::output_measure);
  std::optional<DensityAccumulator> wacc;
  if (input) wacc.emplace(dim, grid, AverageMode::weighted_posterior);
  InnovationStats innov;
  CompensatedSum weight_T;
  TrajectoryRecord first;

  run_ensemble(
      ensemble_options(c),
      [&](std::uint64_t i) {
        const NoisePath noise = wiener_path(grid, seed, i);
        return input ? simulate_linear_diffusive(model, psi, noise)
                     : simulate_nonlinear_diffusive(model, psi, noise, DiffusiveDrive::innovation);
      },
      [&](std::uint64_t i, const TrajectoryRecord& rec) {
        acc.add(rec);
        if (wacc) wacc->add(rec);
        innov.add(rec);
        if (!rec.aborted) weight_T.add(rec.weight.back());
        if (rec.aborted) ctx.diagnostics.push_back("trajectory " + std::to_string(i) + ": " + rec.diagnostic);
        if (i == 0) first = rec;
      });

  const DensityPath mean = acc.mean();
  const DensityPath lind = integrate_lindblad(model, psi.outer(), grid);
  ctx.out.write_csv("ensemble_mean.csv", density_table(grid, mean));
  ctx.out.write_csv("lindblad.csv", density_table(grid, lind));
  ctx.out.write_csv("trajectory_0.csv", record_table(first));

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "diffusive";
  j["measure"] = input ? "input" : "output";
  j["n"] = acc.count();
  j["aborted"] = acc.aborted();
  j["ensemble_vs_lindblad"] = path_deviation(grid, mean, lind);
  if (wacc) {
    const DensityPath wmean = wacc->mean();
    ctx.out.write_csv("weighted_posterior.csv", density_table(grid, wmean));
    j["weighted_posterior_vs_lindblad"] = path_deviation(grid, wmean, lind);
    j["weighted_posterior_vs_input"] = path_deviation(grid, wmean, mean);
  }
  const double dn = static_cast<double>(std::max<long long>(1, acc.count()));
  j["mean_weight_T"] = weight_T.value() / dn;
  j["innovation_T"] = innov.to_json(grid.T);
  ctx.result.aborted += static_cast<std::uint64_t>(acc.aborted());
  ctx.out.write_json("comparison.json", j);
  ctx.result.report = j;
}

void run_jump(Context& ctx) {
  const auto& c = ctx.cfg;
  const int dim = model_dim(c);
  const double nu = c.nu_or_default();
  const double hbar = c.hbar_or_default();
  std::optional<DiffusionModel> diff;
  std::optional<JumpModel> model;
  if (c.C) {
    model.emplace(c.C->build(), c.E->build(), nu, hbar);
  } else {
    diff.emplace(hamiltonian(c, dim), coupling(c, dim), hbar);
    model.emplace(jump_to_diffusion_embedding(diff->L, diff->H, nu, hbar));
  }
  const StateVector psi = c.psi_resolved(dim);
  const TimeGrid grid = TimeGrid::make(c.T_or_default(), c.dt_or_default());
  const bool input = c.measure_or_default() == "input";
  const std::uint64_t seed = c.seed_or_default();

  DensityAccumulator acc(dim, grid, input ? AverageMode::input_measure : AverageMode::output_measure);
  std::optional<DensityAccumulator> wacc;
  if (input) wacc.emplace(dim, grid, AverageMode::weighted_posterior);
  InnovationStats innov;
  CompensatedSum jumps, integrated_intensity;
  TrajectoryRecord first;

  run_ensemble(
      ensemble_options(c),
      [&](std::uint64_t i) {
        if (input) return simulate_linear_jump(*model, psi, poisson_path(grid, nu, seed, i));
        return simulate_nonlinear_jump_thinned(*model, psi, grid, seed, i);
      },
      [&](std::uint64_t i, const TrajectoryRecord& rec) {
        acc.add(rec);
        if (wacc) wacc->add(rec);
        innov.add(rec);
        if (!rec.aborted) {
          jumps.add(static_cast<double>(rec.jump_times.size()));
          // trapezoid rule for the integrated conditional intensity
          double s = 0.0;
          for (size_t k = 1; k < rec.intensity.size(); ++k)
            s += 0.5 * (rec.intensity[k - 1] + rec.intensity[k]) * grid.dt;
          integrated_intensity.add(s);
        } else {
          ctx.diagnostics.push_back("trajectory " + std::to_string(i) + ": " + rec.diagnostic);
        }
        if (i == 0) first = rec;
      });

  const DensityPath mean = acc.mean();
  const DensityPath master = integrate_jump_master(*model, psi.outer(), grid);
  ctx.out.write_csv("ensemble_mean.csv", density_table(grid, mean));
  ctx.out.write_csv("jump_master.csv", density_table(grid, master));
  ctx.out.write_csv("trajectory_0.csv", record_table(first));

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "jump";
  j["measure"] = input ? "input" : "output";
  j["nu"] = nu;
  j["C"] = matrix_json(model->C);
  j["E"] = matrix_json(model->E);
  j["n"] = acc.count();
  j["aborted"] = acc.aborted();
  j["ensemble_vs_jump_master"] = path_deviation(grid, mean, master);
  if (diff) {
    const DensityPath lind = integrate_lindblad(*diff, psi.outer(), grid);
    ctx.out.write_csv("lindblad.csv", density_table(grid, lind));
    j["ensemble_vs_lindblad"] = path_deviation(grid, mean, lind);
    j["jump_master_vs_lindblad"] = path_deviation(grid, master, lind);
  }
  if (wacc) {
    const DensityPath wmean = wacc->mean();
    ctx.out.write_csv("weighted_posterior.csv", density_table(grid, wmean));
    j["weighted_posterior_vs_jump_master"] = path_deviation(grid, wmean, master);
  }
  const double dn = static_cast<double>(std::max<long long>(1, acc.count()));
  j["mean_jumps"] = jumps.value() / dn;
  j["mean_integrated_intensity"] = integrated_intensity.value() / dn;
  j["innovation_T"] = innov.to_json(grid.T);
  ctx.result.aborted += static_cast<std::uint64_t>(acc.aborted());
  ctx.out.write_json("comparison.json", j);
  ctx.result.report = j;
}

void run_qubit_counting(Context& ctx) {
  const auto& c = ctx.cfg;
  const QubitScenario s{c.k_resolved(), c.l_or_default(), c.nu_or_default()};
  s.validate();
  const BlochVector r0(c.r0_resolved());
  const TimeGrid grid = TimeGrid::make(c.T_or_default(), c.dt_or_default());
  const std::uint64_t seed = c.seed_or_default();
  const size_t n_pts = static_cast<size_t>(grid.steps) + 1;

  std::vector<CompensatedSum> pi_sum(n_pts), p_sum(3 * n_pts);
  double max_ratio_dev = 0.0;
  std::uint64_t count = 0, aborted = 0;
  std::optional<std::pair<PiPPath, BlochPath>> first;

  struct Pair {
    PiPPath lin;
    BlochPath bloch;
  };
  run_ensemble(
      ensemble_options(c),
      [&](std::uint64_t i) {
        const NoisePath n = poisson_path(grid, s.nu, seed, i);
        return Pair{linear_pi_p_counting(s, r0, n.event_times, grid),
                    bloch_counting_filter(s, r0, n.event_times, grid)};
      },
      [&](std::uint64_t i, const Pair& p) {
        if (i == 0) first.emplace(p.lin, p.bloch);
        if (p.lin.aborted || p.bloch.aborted) {
          ++aborted;
          ctx.diagnostics.push_back("trajectory " + std::to_string(i) + ": " + p.lin.diagnostic +
                                    p.bloch.diagnostic);
          return;
        }
        ++count;
        for (size_t k = 0; k < n_pts; ++k) {
          const PiPState& st = p.lin.states[k];
          pi_sum[k].add(st.pi);
          for (int a = 0; a < 3; ++a) p_sum[3 * k + static_cast<size_t>(a)].add(st.p(a));
          max_ratio_dev = std::max(max_ratio_dev, (st.r() - p.bloch.r[k]).cwiseAbs().maxCoeff());
        }
      });

  const std::vector<Vec3> master = bloch_master_solve(s.k, s.l, r0, grid);
  const double dn = static_cast<double>(std::max<std::uint64_t>(1, count));
  Table mean({"t", "pi_mean", "px_mean", "py_mean", "pz_mean", "rx_weighted", "ry_weighted",
              "rz_weighted", "rx_master", "ry_master", "rz_master"});
  double sup_pi = 0.0, sup_p = 0.0, sup_w = 0.0;
  for (size_t k = 0; k < n_pts; ++k) {
    const double pm = pi_sum[k].value() / dn;
    const Vec3 p(p_sum[3 * k].value() / dn, p_sum[3 * k + 1].value() / dn, p_sum[3 * k + 2].value() / dn);
    const Vec3 rw = p / pm;
    sup_pi = std::max(sup_pi, std::abs(pm - 1.0));
    sup_p = std::max(sup_p, (p - master[k]).cwiseAbs().maxCoeff());
    sup_w = std::max(sup_w, (rw - master[k]).cwiseAbs().maxCoeff());
    mean.add_row({grid.t(static_cast<int>(k)), pm, p.x(), p.y(), p.z(), rw.x(), rw.y(), rw.z(),
                  master[k].x(), master[k].y(), master[k].z()});
  }
  ctx.out.write_csv("ensemble_mean.csv", mean);

  if (first) {
    Table tr({"t", "pi", "p_x", "p_y", "p_z", "r_x", "r_y", "r_z", "intensity"});
    const auto& [lin, bloch] = *first;
    for (size_t k = 0; k < lin.states.size() && k < bloch.r.size(); ++k) {
      const PiPState& st = lin.states[k];
      tr.add_row({grid.t(static_cast<int>(k)), st.pi, st.p.x(), st.p.y(), st.p.z(), bloch.r[k].x(),
                  bloch.r[k].y(), bloch.r[k].z(), bloch.intensity[k]});
    }
    ctx.out.write_csv("trajectory_0.csv", tr);
  }

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "qubit-counting";
  j["measure"] = "input";
  j["k"] = vec_json(s.k);
  j["l"] = vec_json(s.l);
  j["nu"] = s.nu;
  j["n"] = count;
  j["aborted"] = aborted;
  j["max_ratio_vs_filter_dev"] = max_ratio_dev;
  j["sup_mean_pi_minus_one"] = sup_pi;
  j["sup_mean_p_vs_master"] = sup_p;
  j["sup_weighted_r_vs_master"] = sup_w;
  ctx.result.aborted += aborted;
  ctx.out.write_json("comparison.json", j);
  ctx.result.report = j;
}

void run_qubit_diffusive(Context& ctx) {
  const auto& c = ctx.cfg;
  const Vec3 k = c.k_resolved();
  const Vec3 l = c.l_or_default();
  const BlochVector r0(c.r0_resolved());
  const TimeGrid grid = TimeGrid::make(c.T_or_default(), c.dt_or_default());
  const std::uint64_t seed = c.seed_or_default();
  const DiffusiveScheme scheme =
      c.method_or_default() == "exponential" ? DiffusiveScheme::exponential : DiffusiveScheme::euler;
  const bool colinear = is_colinear(k, l);
  const size_t n_pts = static_cast<size_t>(grid.steps) + 1;

  struct PathError {
    double pi_pm = 0.0;  // sup over t of |pi_+-| errors
    double p = 0.0;
    double r = 0.0;
  };
  struct Out {
    PiPPath path;
    PathError err;
  };

  std::vector<CompensatedSum> pi_sum(n_pts), p_sum(3 * n_pts);
  PathError worst;
  CompensatedSum mean_err;
  std::uint64_t count = 0, aborted = 0;
  std::optional<PiPPath> first;

  const Vec3 e = l.norm() > 0.0 ? Vec3(l / l.norm()) : Vec3(0, 0, 1);
  run_ensemble(
      ensemble_options(c),
      [&](std::uint64_t i) {
        const NoisePath w = wiener_path(grid, seed, i);
        Out o{diffusive_pi_p(k, l, r0, w, scheme), {}};
        if (colinear && !o.path.aborted) {
          double wt = 0.0;
          for (size_t n = 0; n < n_pts; ++n) {
            if (n > 0) wt += w.increments[n - 1];
            const ColinearSolution cf = closed_form_colinear(k, l, r0, wt, grid.t(static_cast<int>(n)));
            const PiPState& st = o.path.states[n];
            const double z = e.dot(st.p);
            const double pp = 0.5 * (st.pi + z), pm = 0.5 * (st.pi - z);
            o.err.pi_pm = std::max({o.err.pi_pm, std::abs(pp - cf.pi_plus), std::abs(pm - cf.pi_minus)});
            o.err.p = std::max(o.err.p, (st.p - cf.p).cwiseAbs().maxCoeff());
            o.err.r = std::max(o.err.r, (st.r() - cf.r).cwiseAbs().maxCoeff());
          }
        }
        return o;
      },
      [&](std::uint64_t i, const Out& o) {
        if (i == 0) first = o.path;
        if (o.path.aborted) {
          ++aborted;
          ctx.diagnostics.push_back("trajectory " + std::to_string(i) + ": " + o.path.diagnostic);
          return;
        }
        ++count;
        for (size_t n = 0; n < n_pts; ++n) {
          const PiPState& st = o.path.states[n];
          pi_sum[n].add(st.pi);
          for (int a = 0; a < 3; ++a) p_sum[3 * n + static_cast<size_t>(a)].add(st.p(a));
        }
        worst.pi_pm = std::max(worst.pi_pm, o.err.pi_pm);
        worst.p = std::max(worst.p, o.err.p);
        worst.r = std::max(worst.r, o.err.r);
        mean_err.add(o.err.pi_pm);
      });

  const std::vector<Vec3> master = bloch_master_solve(k, l, r0, grid);
  const double dn = static_cast<double>(std::max<std::uint64_t>(1, count));
  Table mean({"t", "pi_mean", "px_mean", "py_mean", "pz_mean", "rx_master", "ry_master", "rz_master"});
  double sup_pi = 0.0, sup_p = 0.0;
  for (size_t n = 0; n < n_pts; ++n) {
    const double pm = pi_sum[n].value() / dn;
    const Vec3 p(p_sum[3 * n].value() / dn, p_sum[3 * n + 1].value() / dn, p_sum[3 * n + 2].value() / dn);
    sup_pi = std::max(sup_pi, std::abs(pm - 1.0));
    sup_p = std::max(sup_p, (p - master[n]).cwiseAbs().maxCoeff());
    mean.add_row({grid.t(static_cast<int>(n)), pm, p.x(), p.y(), p.z(), master[n].x(), master[n].y(),
                  master[n].z()});
  }
  ctx.out.write_csv("ensemble_mean.csv", mean);
  if (first) {
    Table tr({"t", "pi", "p_x", "p_y", "p_z", "r_x", "r_y", "r_z"});
    for (size_t n = 0; n < first->states.size(); ++n) {
      const PiPState& st = first->states[n];
      const Vec3 r = st.r();
      tr.add_row({grid.t(static_cast<int>(n)), st.pi, st.p.x(), st.p.y(), st.p.z(), r.x(), r.y(), r.z()});
    }
    ctx.out.write_csv("trajectory_0.csv", tr);
  }

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "qubit-diffusive";
  j["scheme"] = c.method_or_default();
  j["k"] = vec_json(k);
  j["l"] = vec_json(l);
  j["r0"] = vec_json(r0.vec());
  j["dt"] = grid.dt;
  j["n"] = count;
  j["aborted"] = aborted;
  j["colinear"] = colinear;
  if (colinear) {
    j["closed_form"] = {{"sup_pi_pm_error", worst.pi_pm},
                        {"mean_sup_pi_pm_error", mean_err.value() / dn},
                        {"sup_p_error", worst.p},
                        {"sup_r_error", worst.r}};
  } else {
    j["closed_form"] = nullptr;
  }
  j["sup_mean_pi_minus_one"] = sup_pi;
  j["sup_mean_p_vs_master"] = sup_p;
  ctx.result.aborted += aborted;
  ctx.out.write_json("comparison.json", j);
  ctx.result.report = j;
}

void run_closed_form(Context& ctx) {
  const auto& c = ctx.cfg;
  const Vec3 k = c.k_resolved();
  const Vec3 l = c.l_or_default();
  const BlochVector r0(c.r0_resolved());
  const double t = c.t.value_or(c.T_or_default());
  const double w = c.w.value_or(0.0);
  const ColinearSolution cf = closed_form_colinear(k, l, r0, w, t);

  const double ln = l.norm();
  const double z = ln > 0.0 ? r0.vec().dot(l) / ln : r0.z();
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "closed-form";
  j["k"] = vec_json(k);
  j["l"] = vec_json(l);
  j["r0"] = vec_json(r0.vec());
  j["t"] = t;
  j["w"] = w;
  j["solution"] = {{"pi_plus", cf.pi_plus}, {"pi_minus", cf.pi_minus}, {"pi", cf.pi},
                   {"p", vec_json(cf.p)}, {"r", vec_json(cf.r)}};
  if (t > 0.0) {
    const std::uint64_t n = c.samples.value_or(c.N_or_default());
    Json loc = Json::object();
    for (auto [name, m] : {std::pair{"input", LocalizationMeasure::input},
                           std::pair{"output", LocalizationMeasure::output}}) {
      const LocalizationStats st = localization_statistic(ln, t, z, n, c.seed_or_default(), m);
      loc[name] = {{"mean_z", st.mean_z},
                   {"mean_z2", st.mean_z2},
                   {"weighted_mean_z", st.weighted_mean_z},
                   {"localized_fraction", st.localized_fraction},
                   {"n", st.n},
                   {"excluded", st.excluded}};
    }
    j["localization"] = loc;

    Table curve({"w", "z"});
    const int pts = c.points.value_or(201);
    const double span = 4.0 * std::sqrt(t);
    for (int i = 0; i < pts; ++i) {
      const double wi = pts > 1 ? -span + 2.0 * span * i / (pts - 1) : 0.0;
      curve.add_row({wi, localized_z(ln, z, wi)});
    }
    ctx.out.write_csv("localization.csv", curve);
  }
  ctx.out.write_json("closed_form.json", j);
  ctx.result.report = j;
}

Json diag_json(const Operator& rho) {
  Json a = Json::array();
  for (int i = 0; i < rho.dim(); ++i) a.push_back(rho(i, i).real());
  return a;
}

void run_cat(Context& ctx) {
  const auto& c = ctx.cfg;
  const StateVector psi = c.psi_resolved(2);
  const cat::BitAmplitude a{psi[0], psi[1]};
  const cat::PairAmplitude chi = cat::interact(a, cat::delta(0));
  const DensityMatrix compound = cat::compound_density(chi);
  const DensityMatrix reduced = cat::partial_trace_system(compound);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "cat";
  j["psi"] = Json::array({cplx_json(psi[0]), cplx_json(psi[1])});
  j["entropy_reduced_bits"] = von_neumann_entropy(reduced);
  j["entropy_compound_bits"] = von_neumann_entropy(compound);
  Eigen::VectorXd probs(2);
  Json outcomes = Json::array();
  for (int tau = 0; tau < 2; ++tau) {
    probs(tau) = cat::outcome_probability(compound, tau);
    Json o{{"tau", tau}, {"probability", probs(tau)}};
    if (probs(tau) > 1e-14) {
      o["posterior_diag"] = diag_json(cat::bayes_condition(compound, tau).op());
    } else {
      o["posterior_diag"] = nullptr;
    }
    outcomes.push_back(o);
  }
  j["outcomes"] = outcomes;
  j["shannon_outcomes_bits"] = shannon_entropy(probs);

  const Operator E0 = cat::ReductionFamily::computational_projectors().op(0);
  const cat::ProjectionResult pr = cat::projection_postulate(psi, E0);
  j["projection_postulate"] = {{"lambda", pr.lambda},
                               {"mu", pr.mu},
                               {"vs_reduced_dev", (pr.mixed.matrix() - reduced.matrix()).cwiseAbs().maxCoeff()}};
  Json fam = Json::array();
  for (const auto& o : cat::reduction_apply(cat::ReductionFamily::computational_projectors(), psi)) {
    Json e{{"label", o.label}, {"probability", o.probability}};
    if (o.posterior)
      e["posterior"] = Json::array({cplx_json((*o.posterior)[0]), cplx_json((*o.posterior)[1])});
    else
      e["posterior"] = nullptr;
    fam.push_back(e);
  }
  j["reduction"] = fam;

  auto to_bits = [](const std::optional<std::vector<cplx>>& v, cplx a0, cplx a1) {
    if (v) return cat::BitAmplitude{(*v)[0], (*v)[1]};
    return cat::BitAmplitude{a0, a1};
  };
  const cat::BitAmplitude g = to_bits(c.g, 0.0, 1.0);
  const cat::BitAmplitude f = to_bits(c.f, 1.0, -1.0);
  const Operator F = c.F ? c.F->build() : sigma_x();
  const auto nd_diag = cat::nondemolition_check(f, g, psi);
  const auto nd_full = cat::nondemolition_check(F, g, psi);
  j["nondemolition"] = {
      {"diagonal_F", {{"on_initial", nd_diag.on_initial}, {"full", nd_diag.full}}},
      {"general_F", {{"on_initial", nd_full.on_initial}, {"full", nd_full.full}}}};
  const auto ro = cat::reduced_observables(F, g);
  j["reduced_observables"] = {{"X0", matrix_json(ro.x0)}, {"Y0", matrix_json(ro.y0)}};
  ctx.out.write_json("cat_report.json", j);
  ctx.result.report = j;
}

void run_bell(Context& ctx) {
  const auto& c = ctx.cfg;
  const BlochVector r(c.r0.value_or(Vec3(0, 0, 1)));
  const int n = c.directions.value_or(100);
  const double lambda = c.lambda.value_or(0.1);

  Table grid({"e_x", "e_y", "e_z", "quantum_expectation", "lambda_mean", "abs_error"});
  double max_err = 0.0;
  for (const auto& e : bell::fibonacci_directions(n)) {
    const double q = e.vec().dot(r.vec());
    const double m = bell::lambda_mean(e, r);
    max_err = std::max(max_err, std::abs(m - q));
    grid.add_row({e.vec().x(), e.vec().y(), e.vec().z(), q, m, std::abs(m - q)});
  }
  ctx.out.write_csv("bell_grid.csv", grid);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "bell";
  j["r"] = vec_json(r.vec());
  j["directions"] = n;
  j["max_abs_error"] = max_err;

  const std::vector<double> seps = c.separations.value_or(std::vector<double>{1e-2, 1e-4, 1e-6});
  const bell::DiscontinuityReport d = bell::discontinuity_probe(lambda, r, seps);
  Json wit = Json::array();
  for (const auto& w : d.witnesses) {
    wit.push_back({{"separation", w.separation},
                   {"e_plus", vec_json(w.e_plus)},
                   {"e_minus", vec_json(w.e_minus)},
                   {"s_plus", w.s_plus},
                   {"s_minus", w.s_minus}});
  }
  j["discontinuity"] = {{"lambda", lambda},
                        {"has_boundary", d.has_boundary},
                        {"boundary", d.boundary},
                        {"e_boundary", vec_json(d.e_boundary)},
                        {"jump", d.jump},
                        {"witnesses", wit}};

  auto sweep_json = [](const bell::AffinityReport& rep) {
    Json pts = Json::array();
    for (const auto& p : rep.points)
      pts.push_back({{"alpha", p.alpha}, {"moment", p.moment}, {"interpolated", p.interpolated},
                     {"deviation", p.deviation}});
    return Json{{"max_deviation", rep.max_deviation}, {"points", pts}};
  };
  const bell::Direction ez(Vec3(0, 0, 1)), ex(Vec3(1, 0, 0));
  j["affinity_colinear"] = sweep_json(
      bell::affinity_sweep(ez, ez, BlochVector(0, 0, 0.9), BlochVector(0, 0, -0.3)));
  j["affinity_orthogonal"] = sweep_json(
      bell::affinity_sweep(ez, ex, BlochVector(0.6, 0, 0.8), BlochVector(0.8, 0, 0.6)));
  ctx.out.write_json("bell_report.json", j);
  ctx.result.report = j;
}

void run_spectra(Context& ctx) {
  using namespace spectra;
  const auto& c = ctx.cfg;
  const double lo = c.x_min.value_or(1e-3), hi = c.x_max.value_or(20.0);
  const int pts = c.points.value_or(200);
  Table t({"x", "classical", "rayleigh", "wien", "planck"});
  bool sandwich = true;
  for (int i = 0; i < pts; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (pts - 1));
    const SpectralPoint p{x, 1.0, 1.0, 1.0};
    const double cl = spectral_energy(p, Law::classical), ra = spectral_energy(p, Law::rayleigh),
                 wi = spectral_energy(p, Law::wien), pl = spectral_energy(p, Law::planck);
    sandwich = sandwich && wi <= pl && pl <= cl;
    t.add_row({x, cl, ra, wi, pl});
  }
  ctx.out.write_csv("spectra.csv", t);

  auto at = [](double x, Law law) { return spectral_energy(SpectralPoint{x, 1.0, 1.0, 1.0}, law); };
  const double x_ray = 0.1, x_wien = 7.0, x_ser = 0.5;
  const int n_max = c.n_max.value_or(200);
  const SpectralPoint ps{x_ser, 1.0, 1.0, 1.0};
  const SeriesResult sr = mean_quanta_series(ps, n_max);
  const SeriesResult mass = mean_quanta_series(ps, 500);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "spectra";
  j["points"] = pts;
  j["sandwich_holds"] = sandwich;
  j["mean_quanta_ln2"] = mean_quanta(SpectralPoint{std::log(2.0), 1.0, 1.0, 1.0});
  j["rayleigh_rel_dev_x0.1"] = std::abs(at(x_ray, Law::planck) - at(x_ray, Law::rayleigh));
  j["wien_rel_dev_x7"] = std::abs(at(x_wien, Law::planck) - at(x_wien, Law::wien)) / at(x_wien, Law::planck);
  j["series"] = {{"x", x_ser},
                 {"n_max", n_max},
                 {"sum", sr.sum},
                 {"closed_form", mean_quanta(ps)},
                 {"abs_dev", std::abs(sr.sum - mean_quanta(ps))},
                 {"remainder_bound", sr.remainder},
                 {"probability_mass_500", mass.probability_mass}};
  ctx.out.write_json("spectra.json", j);
  ctx.result.report = j;
}

void run_ito_check(Context& ctx) {
  const auto checks = ito::verify_d1_table();
  std::string table;
  Json arr = Json::array();
  int failures = 0;
  for (const auto& ch : checks) {
    table += ch.lhs + " = " + ch.actual + (ch.pass ? "  ok" : "  FAIL (expected " + ch.expected + ")") + "\n";
    arr.push_back({{"lhs", ch.lhs}, {"expected", ch.expected}, {"actual", ch.actual}, {"pass", ch.pass}});
    if (!ch.pass) ++failures;
  }
  ctx.out.write_text("ito_table.txt", table);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = "ito-check";
  j["checks"] = arr;
  j["total"] = checks.size();
  j["failures"] = failures;
  ctx.out.write_json("ito_report.json", j);
  ctx.result.report = j;
  if (failures) ctx.result.exit_code = 1;
}

}  // namespace

std::string resolve_out_dir(const ScenarioConfig& c, const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (c.out_dir && !c.out_dir->empty()) return *c.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "qfilt_out";
}

RunResult run_scenario(const ScenarioConfig& c, const std::string& out_dir) {
  validate_config(c);
  static const std::map<std::string, std::function<void(Context&)>> table{
      {"diffusive", run_diffusive},
      {"jump", run_jump},
      {"qubit-counting", run_qubit_counting},
      {"qubit-diffusive", run_qubit_diffusive},
      {"closed-form", run_closed_form},
      {"cat", run_cat},
      {"bell", run_bell},
      {"spectra", run_spectra},
      {"ito-check", run_ito_check},
  };
  RunResult result;
  result.out_dir = out_dir;
  ArtifactWriter writer(out_dir);
  Context ctx{c, writer, result, {}};
  table.at(c.scenario)(ctx);

  // Worker count and output location do not influence the artifacts.
  ScenarioConfig canonical = c;
  canonical.workers.reset();
  canonical.out_dir.reset();
  writer.write_manifest(c.scenario, c.seed_or_default(), serialize_config(canonical), result.aborted,
                        ctx.diagnostics);
  return result;
}

}  // namespace qfilt::cli
