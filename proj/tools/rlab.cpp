#include <cmath>
#include <complex>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "output.hpp"
#include "rlab/acceptance.hpp"
#include "rlab/config.hpp"
#include "rlab/epr.hpp"
#include "rlab/factorization.hpp"
#include "rlab/fokker_planck.hpp"
#include "rlab/grid_io.hpp"
#include "rlab/material.hpp"
#include "rlab/reduction.hpp"
#include "rlab/rng.hpp"

namespace {

using namespace rlab;
using cli::num;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBound = 3;
constexpr int kExitNumerical = 4;

struct Globals {
  std::uint64_t seed = acceptance::kDefaultSeed;
  std::string out = ".";
  std::string format = "both";
  unsigned threads = 0;
  std::string config_path;
  std::vector<std::string> assignments;
};

json envelope(const std::string& command, const RunConfig& cfg, const std::string& section,
              std::uint64_t seed, const std::string& format) {
  json c = cfg.to_json(section);
  c["seed"] = seed;
  c["format"] = format;
  return {{"schema_version", acceptance::kSchemaVersion}, {"command", command}, {"config", c}};
}

DiffusionParams diffusion_params(const RunConfig& cfg, std::uint64_t seed) {
  DiffusionParams p;
  p.tau_red = cfg.real("reduce.tau_red");
  require(p.tau_red > 0.0, "reduce.tau_red must be positive");
  p.dt = cfg.real("reduce.dt") > 0.0 ? cfg.real("reduce.dt") : 0.01 * p.tau_red;
  p.max_time = cfg.real("reduce.max_time") > 0.0 ? cfg.real("reduce.max_time") : 20.0 * p.tau_red;
  p.n_trajectories = cfg.count("reduce.n");
  require(p.n_trajectories > 0, "reduce.n must be positive");
  p.master_seed = seed;
  p.absorption_threshold = cfg.real("reduce.threshold");
  p.n_saved_times = cfg.count("reduce.saved_times");
  return p;
}

RateSchedule rate_schedule(const RunConfig& cfg) {
  if (cfg.text("reduce.schedule") == "constant") return RateSchedule::constant();
  return RateSchedule::proximity(cfg.real("reduce.xi0"), cfg.real("reduce.xi_init"),
                                 cfg.real("reduce.tau_signal"), cfg.real("reduce.tau_red"));
}

int cmd_reduce(const RunConfig& cfg, const Globals& g, const cli::OutputSink& sink) {
  const ChannelDistribution p0(cfg.real_list("reduce.p0"));
  const auto params = diffusion_params(cfg, g.seed);
  const auto schedule = rate_schedule(cfg);
  const double bound = cfg.real("reduce.max_unresolved_fraction");
  require(bound >= 0.0 && bound <= 1.0, "reduce.max_unresolved_fraction must lie in [0, 1]");

  const auto rep = run_ensemble(p0, params, schedule, g.threads);
  const auto f = rep.frequencies();
  std::printf("%-8s %-10s %-10s %-10s %s\n", "channel", "p0", "frequency", "sigma", "z");
  for (std::size_t j = 0; j < p0.size(); ++j) {
    const double sigma = stats::binomial_sigma(p0[j], rep.n_trajectories);
    const double z = sigma > 0.0 ? (f[j] - p0[j]) / sigma : 0.0;
    std::printf("%-8zu %-10.6f %-10.6f %-10.6f %+.3f\n", j, p0[j], f[j], sigma, z);
  }
  const double unresolved =
      static_cast<double>(rep.unresolved_count) / static_cast<double>(rep.n_trajectories);
  std::printf("unresolved %zu (%.4g), mean exit time %.6g\n", rep.unresolved_count, unresolved,
              rep.mean_exit_time());

  json j = envelope("reduce", cfg, "reduce", g.seed, g.format);
  j["report"] = to_json(rep);
  sink.write_json("reduce.json", j);
  if (sink.csv()) {
    auto out = sink.open("reduce_exit_times.csv");
    out << "exit_time\n";
    for (double t : rep.exit_times) out << num(t) << '\n';
  }
  if (unresolved > bound) {
    std::fprintf(stderr, "unresolved fraction %.4g exceeds the bound %.4g\n", unresolved, bound);
    return kExitBound;
  }
  return kExitOk;
}

FpScheme fp_scheme(const std::string& name) {
  if (name == "explicit") return FpScheme::explicit_euler;
  if (name == "crank_nicolson") return FpScheme::crank_nicolson;
  return FpScheme::implicit_euler;
}

int cmd_fp(const RunConfig& cfg, const Globals& g, const cli::OutputSink& sink) {
  FpOptions opt;
  opt.scheme = fp_scheme(cfg.text("fp.scheme"));
  opt.diffusion_scale = cfg.real("fp.diffusion_scale");
  opt.dt = cfg.real("fp.dt");
  opt.output_interval = cfg.real("fp.output_interval");
  const double p_start = cfg.real("fp.p_start");
  const auto cells = cfg.count("fp.cells");
  const double t_end = cfg.real("fp.t_end");
  require(t_end > 0.0, "fp.t_end must be positive");
  const bool compare = cfg.boolean("fp.compare");
  const std::size_t compare_n = cfg.count("fp.compare_n");
  if (compare) require(compare_n > 0, "fp.compare_n must be positive");

  const auto sol = fp_solve(p_start, cells, t_end, opt);
  std::printf("absorbed at p=0: %.9f  at p=1: %.9f  survival: %.3e  mass error: %.2e\n",
              sol.absorbed_0.back(), sol.absorbed_1.back(), sol.survival.back(),
              sol.max_mass_error);

  json j = envelope("fp", cfg, "fp", g.seed, g.format);
  j["solution"] = to_json(sol);
  int status = kExitOk;
  if (compare) {
    auto params = DiffusionParams::for_tau(1.0, compare_n, g.seed);
    params.max_time = std::max(t_end, 20.0);
    const auto mc = run_ensemble(ChannelDistribution({p_start, 1.0 - p_start}), params,
                                 RateSchedule::constant(), g.threads);
    const auto win0 = mc.absorbed_history(0, sol.times);
    const auto win1 = mc.absorbed_history(1, sol.times);
    double sup = 0.0;
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      sup = std::max({sup, std::abs(sol.absorbed_1[k] - win0[k]),
                      std::abs(sol.absorbed_0[k] - win1[k])});
    }
    const double bound = cfg.real("fp.max_sup_norm");
    std::printf("Monte Carlo comparison (%zu trajectories): sup-norm %.5f (bound %.3g)\n",
                compare_n, sup, bound);
    j["comparison"] = {{"trajectories", compare_n}, {"sup_norm", sup}, {"bound", bound}};
    if (sup > bound) status = kExitBound;
  }
  sink.write_json("fp.json", j);
  if (sink.csv()) {
    auto out = sink.open("fp.csv");
    out << "t,survival,absorbed_0,absorbed_1\n";
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      out << num(sol.times[k]) << ',' << num(sol.survival[k]) << ',' << num(sol.absorbed_0[k])
          << ',' << num(sol.absorbed_1[k]) << '\n';
    }
  }
  return status;
}

material::MaterialParams material_params(const RunConfig& cfg) {
  material::MaterialParams p;
  p.L = cfg.real("rate.L");
  p.a = cfg.real("rate.a");
  p.d = cfg.real("rate.d");
  p.lambda_mfp = cfg.real("rate.lambda_mfp");
  p.c_s = cfg.real("rate.c_s");
  p.Delta = cfg.real("rate.Delta");
  p.T_over_Theta = cfg.real("rate.T_over_Theta");
  p.xi = cfg.real("rate.xi");
  if (cfg.real("rate.hbar_omega_over_kT") > 0.0) {
    p.alpha.reset();
    p.hbar_omega_over_kT = cfg.real("rate.hbar_omega_over_kT");
  } else {
    p.alpha = cfg.real("rate.alpha");
  }
  p.validate();
  return p;
}

int cmd_rate(const RunConfig& cfg, const Globals& g, const cli::OutputSink& sink) {
  auto params = material_params(cfg);
  const auto r = material::reduction_rate(params);
  const auto c = material::consistency(params);
  const auto row = [](const char* name, double v, const char* unit, const char* note = "") {
    std::printf("%-28s %-14.6e %-8s %s\n", name, v, unit, note);
  };
  row("N (atoms in pointer)", r.N, "");
  row("N_beta (atoms/subsystem)", r.N_beta, "");
  row("n_beta (phonons/subsystem)", r.n_beta, "");
  row("N / N_beta^2", r.N_over_N_beta_sq, "");
  row("tau (phonon collision)", r.tau, "s");
  row("alpha", r.alpha, "");
  row("e' (thermal overlap)", r.e_prime, "");
  row("delta p subsystem", r.delta_p_subsystem, "s^-1/2");
  row("delta p total", r.delta_p_total_per_sqrt_dt, "s^-1/2");
  row("1/tau_red", r.inv_tau_red, "s^-1");
  char note[64];
  std::snprintf(note, sizeof note, "quoted %.0e", material::kQuotedTauRed);
  row("tau_red", r.tau_red, "s", note);
  std::snprintf(note, sizeof note, "quoted %.0e", material::kQuotedXi0);
  row("xi0", r.xi0, "cm", note);
  row("microscopic / macroscopic", c.ratio, "");

  json j = envelope("rate", cfg, "rate", g.seed, g.format);
  j["breakdown"] = to_json(r);
  j["consistency"] = to_json(c);
  j["quoted"] = {{"tau_red_s", material::kQuotedTauRed}, {"xi0_cm", material::kQuotedXi0}};

  const std::size_t points = cfg.count("rate.sweep_points");
  if (points > 0) {
    require(points >= 2, "rate.sweep_points must be 0 or at least 2");
    const double xi_max = cfg.real("rate.sweep_max");
    require(xi_max > 0.0, "rate.sweep_max must be positive");
    json sweep = json::array();
    std::vector<std::pair<double, double>> rows;
    for (std::size_t k = 0; k < points; ++k) {
      params.xi = xi_max * static_cast<double>(k) / static_cast<double>(points - 1);
      rows.emplace_back(params.xi, material::reduction_rate(params).inv_tau_red);
      sweep.push_back({rows.back().first, rows.back().second});
    }
    j["sweep"] = sweep;
    if (sink.csv()) {
      auto out = sink.open("rate_sweep.csv");
      out << "xi,inv_tau_red\n";
      for (const auto& [xi, rate] : rows) out << num(xi) << ',' << num(rate) << '\n';
    }
  }
  sink.write_json("rate.json", j);
  return kExitOk;
}

epr::EprSchedule::Mode epr_mode(const std::string& name) {
  if (name == "sequential") return epr::EprSchedule::Mode::sequential;
  if (name == "overlapping") return epr::EprSchedule::Mode::overlapping;
  return epr::EprSchedule::Mode::simultaneous;
}

std::complex<double> amplitude(const RunConfig& cfg, const std::string& key) {
  const auto v = cfg.real_list(key);
  require(v.size() == 2, key + " must be given as re,im");
  return {v[0], v[1]};
}

int cmd_epr(const RunConfig& cfg, const Globals& g, const cli::OutputSink& sink) {
  const auto a = amplitude(cfg, "epr.a");
  const auto b = amplitude(cfg, "epr.b");
  const auto thetas = cfg.real_list("epr.theta");
  epr::EprSchedule schedule;
  schedule.mode = epr_mode(cfg.text("epr.mode"));
  schedule.tau_red_1 = cfg.real("epr.tau1");
  schedule.tau_red_2 = cfg.real("epr.tau2");
  schedule.start_delay_2 = cfg.real("epr.delay");
  epr::EprRunOptions opt;
  opt.n_runs = cfg.count("epr.n");
  require(opt.n_runs > 0, "epr.n must be positive");
  opt.dt_fraction = cfg.real("epr.dt_fraction");
  opt.threads = g.threads;
  opt.keep_runs = sink.csv();
  const bool compare = cfg.boolean("epr.compare_schedules");
  const double min_p = cfg.real("epr.min_p_value");
  std::vector<epr::EprState> states;
  for (double theta : thetas) states.push_back(epr::rotate_pair(a, b, theta));

  epr::EprSchedule other = schedule;
  other.mode = schedule.mode == epr::EprSchedule::Mode::sequential
                   ? epr::EprSchedule::Mode::simultaneous
                   : epr::EprSchedule::Mode::sequential;

  std::printf("%-10s %-10s %-10s %-9s %-9s %s\n", "theta", "E", "E_exact", "chi2_p", "max_sig",
              compare ? "schedules_p" : "");
  json j = envelope("epr", cfg, "epr", g.seed, g.format);
  j["points"] = json::array();
  int status = kExitOk;
  for (std::size_t k = 0; k < states.size(); ++k) {
    opt.master_seed = stream_seed(g.seed, 2 * k, 0x657072636c69ULL);
    const auto rep = epr::run_epr_experiment(states[k], schedule, opt);
    json point = to_json(rep);
    const auto chi = rep.chi2();
    std::printf("%-10.6f %-+10.5f %-+10.5f %-9.4f %-9.3f", thetas[k], rep.correlation(),
                rep.expected_correlation(), chi.p_value, rep.max_sigma_deviation());
    if (compare) {
      auto opt2 = opt;
      opt2.keep_runs = false;
      opt2.master_seed = stream_seed(g.seed, 2 * k + 1, 0x657072636c69ULL);
      const auto rep2 = epr::run_epr_experiment(states[k], other, opt2);
      const auto homog = stats::chi2_homogeneity(rep.counts, rep2.counts);
      std::printf(" %.4f", homog.p_value);
      point["comparison"] = {{"schedule", to_json(other)},
                             {"counts", rep2.counts},
                             {"chi2", homog.statistic},
                             {"dof", homog.dof},
                             {"p_value", homog.p_value}};
      if (homog.p_value <= min_p) status = kExitBound;
    }
    std::printf("\n");
    j["points"].push_back(point);
    if (sink.csv()) {
      auto out = sink.open("epr_runs_" + std::to_string(k) + ".csv");
      out << "run_index,outcome_alpha,outcome_beta,exit_time_1,exit_time_2\n";
      for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const auto& r = rep.runs[i];
        out << i << ',' << int(r.outcome_alpha) << ',' << int(r.outcome_beta) << ','
            << num(r.exit_time_1) << ',' << num(r.exit_time_2) << '\n';
      }
    }
  }
  sink.write_json("epr.json", j);
  return status;
}

template <typename Scalar>
void write_value(std::ostream& out, const Scalar& v) {
  out << num(std::real(v)) << ',' << num(std::imag(v));
}

template <typename Scalar>
int factorize_grid(const factor::GriddedFunction<Scalar>& psi, const RunConfig& cfg,
                   const Globals& g, const cli::OutputSink& sink) {
  json j = envelope("factorize", cfg, "factorize", g.seed, g.format);
  j["shape"] = json::array();
  for (std::size_t k = 0; k < psi.ndims(); ++k) j["shape"].push_back(psi.extent(k));
  j["kind"] = std::is_same_v<Scalar, double> ? "real" : "complex";

  if (psi.ndims() == 2) {
    const std::size_t rank = cfg.count("factorize.rank");
    const auto res = factor::factorize2(psi, rank);
    std::printf("norm^2 %.12g\n", res.norm2);
    for (std::size_t k = 0; k < rank; ++k) {
      std::printf("term %zu  eigenvalue %.12g  residual %.6e\n", k, res.eigenvalues[k],
                  res.residuals[k]);
    }
    std::printf("J (quadrature) %.6e%s\n", res.residual_J,
                res.degenerate ? "  (degenerate spectrum: factors not unique)" : "");
    j["result"] = to_json(res);
    if (sink.csv()) {
      auto out = sink.open("factors.csv");
      out << "term,variable,x,re,im\n";
      for (std::size_t k = 0; k < rank; ++k) {
        const auto& f = res.factors[k];
        for (std::size_t i = 0; i < f.phi1.size(); ++i) {
          out << k << ",1," << num(psi.axis(0).nodes[i]) << ',';
          write_value(out, f.phi1[i]);
          out << '\n';
        }
        for (std::size_t i = 0; i < f.phi2.size(); ++i) {
          out << k << ",2," << num(psi.axis(1).nodes[i]) << ',';
          write_value(out, f.phi2[i]);
          out << '\n';
        }
      }
    }
  } else {
    const std::string which = cfg.text("factorize.outer_axis");
    std::vector<factor::Stepwise3Result<Scalar>> runs;
    json jr;
    if (which == "all") {
      const auto cmp = factor::factorize3_all_orders(psi);
      runs.assign(cmp.runs.begin(), cmp.runs.end());
      jr = to_json(cmp);
      for (const auto& r : runs) {
        std::printf("outer axis %zu  residual %.9e\n", r.outer_axis, r.residual);
      }
      std::printf("smallest residual: outer axis %zu (spread %.3e)\n", cmp.best_outer_axis,
                  cmp.spread);
    } else {
      runs.push_back(factor::factorize3_stepwise(psi, std::stoul(which)));
      std::printf("outer axis %zu  residual %.9e\n", runs[0].outer_axis, runs[0].residual);
      jr = {{"runs", {{{"outer_axis", runs[0].outer_axis},
                       {"selected_axes", runs[0].selected},
                       {"residual", runs[0].residual},
                       {"norm2", runs[0].norm2}}}}};
    }
    j["result"] = jr;
    if (sink.csv()) {
      for (const auto& r : runs) {
        auto out = sink.open("chi_outer" + std::to_string(r.outer_axis) + ".csv");
        out << "axis,x,re,im\n";
        const std::array<std::pair<std::size_t, const std::vector<Scalar>*>, 3> parts{
            {{r.selected[0], &r.chi1}, {r.selected[1], &r.chi2}, {r.outer_axis, &r.chi3}}};
        for (const auto& [axis, values] : parts) {
          for (std::size_t i = 0; i < values->size(); ++i) {
            out << axis << ',' << num(psi.axis(axis).nodes[i]) << ',';
            write_value(out, (*values)[i]);
            out << '\n';
          }
        }
      }
    }
  }
  sink.write_json("factorize.json", j);
  return kExitOk;
}

int cmd_factorize(const RunConfig& cfg, const Globals& g, const cli::OutputSink& sink) {
  const std::string& path = cfg.text("factorize.input");
  require(!path.empty(), "factorize.input (grid file) is required");
  const auto grid = factor::read_grid_file(path);
  return std::visit([&](const auto& psi) { return factorize_grid(psi, cfg, g, sink); }, grid);
}

int cmd_selfcheck(const Globals& g, const cli::OutputSink& sink) {
  const auto suite = acceptance::run_all(g.seed, g.threads);
  for (const auto& c : suite.criteria) {
    std::printf("criterion %d %-22s %s  (%.1f s)\n", c.id, c.name.c_str(),
                c.passed ? "PASS" : "FAIL", c.seconds);
  }
  auto report = suite.report();
  report["command"] = "selfcheck";
  report["config"] = {{"seed", g.seed}, {"format", g.format}};
  auto out = sink.open("selfcheck.json");
  out << report.dump(2) << '\n';
  auto timing = sink.open("selfcheck_timing.json");
  timing << suite.timings().dump(2) << '\n';
  return suite.passed() ? kExitOk : kExitBound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-diffusion reduction experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--set", g.assignments, "override one config key (key=value)");

  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"reduce", "Monte Carlo ensemble of channel diffusions"},
           {"fp", "Fokker-Planck solution of the two-channel diffusion"},
           {"rate", "reduction rate from material parameters"},
           {"epr", "two-apparatus correlation experiment"},
           {"factorize", "separable approximation of a gridded wave function"},
           {"selfcheck", "run the acceptance suite"}}) {
    subs[name] = app.add_subcommand(name, help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg.load_file(g.config_path);
    for (const auto& a : g.assignments) cfg.set_assignment(a);
    cli::OutputSink sink;
    sink.dir = g.out;
    sink.format = g.format == "csv" ? cli::Format::csv
                  : g.format == "json" ? cli::Format::json
                                       : cli::Format::both;

    if (subs["reduce"]->parsed()) return cmd_reduce(cfg, g, sink);
    if (subs["fp"]->parsed()) return cmd_fp(cfg, g, sink);
    if (subs["rate"]->parsed()) return cmd_rate(cfg, g, sink);
    if (subs["epr"]->parsed()) return cmd_epr(cfg, g, sink);
    if (subs["factorize"]->parsed()) return cmd_factorize(cfg, g, sink);
    return cmd_selfcheck(g, sink);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
}
