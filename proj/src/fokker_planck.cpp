#include "rlab/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rlab/errors.hpp"

namespace rlab {

namespace {

double diffusion(double p) { return p * (1.0 - p); }

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[i]`
/// multiplies x[i-1], `upper[i]` multiplies x[i+1].
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                       std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
  }
}

/// theta-scheme: theta = 0 explicit, 1/2 Crank-Nicolson, 1 implicit Euler.
void theta_step(FpGrid& grid, double dt, double theta) {
  const std::size_t m = grid.cells();
  const double h = grid.spacing();
  const double s = grid.diffusion_scale();
  const double c = s * dt / (h * h);
  auto& q = grid.density();

  std::vector<double> u(m + 1, 0.0);
  for (std::size_t i = 1; i < m; ++i) u[i] = diffusion(grid.node(i)) * q[i];
  const double out0_old = u[1], out1_old = u[m - 1];

  const std::size_t n = m - 1;
  std::vector<double> rhs(n);
  for (std::size_t i = 1; i < m; ++i) {
    rhs[i - 1] = q[i] + (1.0 - theta) * c * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
  }

  double out0_new = 0.0, out1_new = 0.0;
  if (theta > 0.0) {
    std::vector<double> lower(n, 0.0), diag(n), upper(n, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
      const std::size_t r = i - 1;
      diag[r] = 1.0 + 2.0 * theta * c * diffusion(grid.node(i));
      if (i > 1) lower[r] = -theta * c * diffusion(grid.node(i - 1));
      if (i + 1 < m) upper[r] = -theta * c * diffusion(grid.node(i + 1));
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    out0_new = diffusion(grid.node(1)) * rhs[0];
    out1_new = diffusion(grid.node(m - 1)) * rhs[n - 1];
  }
  for (std::size_t i = 1; i < m; ++i) q[i] = rhs[i - 1];

  const double flux = s * dt / h;
  grid.absorbed_0 += flux * ((1.0 - theta) * out0_old + theta * out0_new);
  grid.absorbed_1 += flux * ((1.0 - theta) * out1_old + theta * out1_new);
  grid.time += dt;
}

}  // namespace

FpGrid::FpGrid(std::size_t cells, double diffusion_scale)
    : cells_(cells), scale_(diffusion_scale), q_(cells + 1, 0.0) {
  require(cells >= 10, "the Fokker-Planck grid needs at least 10 cells");
  require(diffusion_scale > 0.0 && std::isfinite(diffusion_scale),
          "diffusion_scale must be positive");
}

FpGrid FpGrid::pulse(double p_start, std::size_t cells, double diffusion_scale) {
  FpGrid grid(cells, diffusion_scale);
  const double h = grid.spacing();
  const double width = 2.0 * h;
  require(p_start >= width - 1e-12 && p_start <= 1.0 - width + 1e-12,
          "p_start must lie at least two cells inside (0, 1)");
  double total = 0.0;
  for (std::size_t i = 1; i < cells; ++i) {
    const double w = std::max(0.0, 1.0 - std::abs(grid.node(i) - p_start) / width);
    grid.q_[i] = w;
    total += w;
  }
  for (std::size_t i = 1; i < cells; ++i) grid.q_[i] /= total * h;
  return grid;
}

double FpGrid::interior_mass() const noexcept {
  double m = 0.0;
  for (std::size_t i = 1; i < cells_; ++i) m += q_[i];
  return m * spacing();
}

double FpGrid::mean() const noexcept {
  double m = 0.0;
  for (std::size_t i = 1; i < cells_; ++i) m += node(i) * q_[i];
  return m * spacing() + absorbed_1;
}

double FpGrid::min_density() const noexcept {
  double m = 0.0;
  for (std::size_t i = 1; i < cells_; ++i) m = std::min(m, q_[i]);
  return m;
}

double FpGrid::explicit_dt_limit() const noexcept {
  double max_d = 0.0;
  for (std::size_t i = 1; i < cells_; ++i) max_d = std::max(max_d, diffusion(node(i)));
  const double h = spacing();
  return h * h / (2.0 * scale_ * max_d);
}

void fp_step_inplace(FpGrid& grid, double dt, FpScheme scheme) {
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  switch (scheme) {
    case FpScheme::explicit_euler:
      require(dt <= grid.explicit_dt_limit() * (1.0 + 1e-12),
              "dt exceeds the explicit stability limit");
      theta_step(grid, dt, 0.0);
      break;
    case FpScheme::crank_nicolson:
      theta_step(grid, dt, 0.5);
      break;
    case FpScheme::implicit_euler:
      theta_step(grid, dt, 1.0);
      break;
  }
}

FpGrid fp_step(const FpGrid& grid, double dt, FpScheme scheme) {
  FpGrid next = grid;
  fp_step_inplace(next, dt, scheme);
  return next;
}

double FpSolution::interpolate(const std::vector<double>& times,
                               const std::vector<double>& values, double t) {
  if (times.empty()) return std::nan("");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double f = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return values[k - 1] + f * (values[k] - values[k - 1]);
}

stats::TailFit FpSolution::tail_fit(double s_high, double s_low) const {
  return stats::fit_survival_tail(times, survival, s_high, s_low);
}

FpSolution fp_solve(double p_start, std::size_t cells, double t_end, const FpOptions& options) {
  require(p_start > 0.0 && p_start < 1.0, "p_start must lie in (0, 1)");
  require(t_end > 0.0 && std::isfinite(t_end), "t_end must be positive");
  FpGrid grid = FpGrid::pulse(p_start, cells, options.diffusion_scale);

  double dt = options.dt;
  if (dt <= 0.0) {
    dt = options.scheme == FpScheme::explicit_euler ? 0.9 * grid.explicit_dt_limit() : 1e-3;
  }
  const double interval = options.output_interval > 0.0 ? options.output_interval : t_end / 1000.0;
  const auto steps_per_out = static_cast<std::size_t>(std::ceil(interval / dt - 1e-9));
  dt = interval / static_cast<double>(steps_per_out);
  const auto n_out = static_cast<std::size_t>(std::llround(t_end / interval));

  FpSolution sol;
  sol.p_start = p_start;
  sol.cells = cells;
  sol.dt = dt;
  auto record = [&](double t) {
    sol.times.push_back(t);
    sol.survival.push_back(grid.interior_mass());
    sol.absorbed_0.push_back(grid.absorbed_0);
    sol.absorbed_1.push_back(grid.absorbed_1);
    sol.max_mass_error = std::max(sol.max_mass_error, std::abs(grid.total_mass() - 1.0));
    sol.min_density = std::min(sol.min_density, grid.min_density());
  };

  record(0.0);
  std::size_t step = 0;
  const std::size_t startup = options.scheme == FpScheme::crank_nicolson ? options.startup_steps : 0;
  for (std::size_t k = 1; k <= n_out; ++k) {
    for (std::size_t s = 0; s < steps_per_out; ++s, ++step) {
      if (2 * step < startup) {
        fp_step_inplace(grid, 0.5 * dt, FpScheme::implicit_euler);
        fp_step_inplace(grid, 0.5 * dt, FpScheme::implicit_euler);
      } else {
        fp_step_inplace(grid, dt, options.scheme);
      }
    }
    record(static_cast<double>(k) * interval);
  }
  if (sol.max_mass_error > 1e-6) {
    throw NumericalError("Fokker-Planck mass conservation violated by " +
                         std::to_string(sol.max_mass_error));
  }
  return sol;
}

nlohmann::json to_json(const FpSolution& solution) {
  const auto tail = solution.tail_fit(1e-2, 1e-4);
  return {{"p_start", solution.p_start},
          {"cells", solution.cells},
          {"dt", solution.dt},
          {"t_end", solution.times.empty() ? 0.0 : solution.times.back()},
          {"final_absorbed_0", solution.absorbed_0.back()},
          {"final_absorbed_1", solution.absorbed_1.back()},
          {"final_survival", solution.survival.back()},
          {"max_mass_error", solution.max_mass_error},
          {"min_density", solution.min_density},
          {"tail_fit",
           {{"rate", tail.rate}, {"r2", tail.r2}, {"points", tail.points},
            {"s_high", tail.s_high}, {"s_low", tail.s_low}}}};
}

}  // namespace rlab
