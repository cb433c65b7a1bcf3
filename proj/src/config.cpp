#include "rlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "rlab/errors.hpp"

namespace rlab {

namespace {

using Kind = RunConfig::Kind;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used != 0 && used == v.size() && std::isfinite(x),
          [&] { return key + ": '" + v + "' is not a finite number"; }());
  return x;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const bool digits = !v.empty() && std::all_of(v.begin(), v.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
  require(digits, [&] { return key + ": '" + v + "' is not a non-negative integer"; }());
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw ValidationError(key + ": '" + v + "' is out of range");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream s(v);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(parse_real(key, trim(item)));
  require(!out.empty(), key + ": empty list");
  return out;
}

void check(const std::string& key, const RunConfig::Entry& e, const std::string& v) {
  switch (e.kind) {
    case Kind::real: parse_real(key, v); break;
    case Kind::count: parse_count(key, v); break;
    case Kind::boolean: parse_bool(key, v); break;
    case Kind::real_list: parse_list(key, v); break;
    case Kind::text: break;
    case Kind::choice:
      if (std::find(e.choices.begin(), e.choices.end(), v) == e.choices.end()) {
        std::string allowed;
        for (const auto& c : e.choices) allowed += (allowed.empty() ? "" : "|") + c;
        throw ValidationError(key + ": expected one of " + allowed + ", got '" + v + "'");
      }
      break;
  }
}

std::map<std::string, RunConfig::Entry> build_schema() {
  auto real = [](std::string d, std::string help) {
    return RunConfig::Entry{Kind::real, std::move(d), {}, std::move(help)};
  };
  auto count = [](std::string d, std::string help) {
    return RunConfig::Entry{Kind::count, std::move(d), {}, std::move(help)};
  };
  auto boolean = [](std::string d, std::string help) {
    return RunConfig::Entry{Kind::boolean, std::move(d), {}, std::move(help)};
  };
  auto list = [](std::string d, std::string help) {
    return RunConfig::Entry{Kind::real_list, std::move(d), {}, std::move(help)};
  };
  auto choice = [](std::string d, std::vector<std::string> c, std::string help) {
    return RunConfig::Entry{Kind::choice, std::move(d), std::move(c), std::move(help)};
  };
  auto text = [](std::string d, std::string help) {
    return RunConfig::Entry{Kind::text, std::move(d), {}, std::move(help)};
  };

  return {
      {"reduce.p0", list("0.3,0.7", "initial channel probabilities")},
      {"reduce.n", count("10000", "number of trajectories")},
      {"reduce.tau_red", real("1", "reduction time scale (s)")},
      {"reduce.dt", real("0", "time step (s); 0 = 0.01 tau_red")},
      {"reduce.max_time", real("0", "time limit (s); 0 = 20 tau_red")},
      {"reduce.threshold", real("1e-12", "absorption threshold")},
      {"reduce.saved_times", count("21", "samples of the mean trajectory")},
      {"reduce.max_unresolved_fraction", real("0.01", "allowed unresolved fraction")},
      {"reduce.schedule", choice("constant", {"constant", "proximity"}, "rate schedule")},
      {"reduce.xi0", real("1", "proximity: overlap scale xi0 (cm)")},
      {"reduce.xi_init", real("0", "proximity: initial displacement (cm)")},
      {"reduce.tau_signal", real("1", "proximity: growth time of xi (s)")},

      {"fp.p_start", real("0.5", "initial probability of channel 1")},
      {"fp.cells", count("400", "grid cells M")},
      {"fp.t_end", real("8", "final time in units of tau_red")},
      {"fp.scheme", choice("explicit", {"explicit", "crank_nicolson", "implicit"}, "time scheme")},
      {"fp.dt", real("0", "time step; 0 = automatic")},
      {"fp.diffusion_scale", real("0.5", "prefactor of the diffusion term")},
      {"fp.output_interval", real("0", "history spacing; 0 = t_end / 1000")},
      {"fp.compare", boolean("false", "also run the Monte Carlo ensemble")},
      {"fp.compare_n", count("100000", "trajectories for the comparison")},
      {"fp.max_sup_norm", real("0.02", "allowed sup-norm deviation in comparison mode")},

      {"rate.L", real("1", "pointer size (cm)")},
      {"rate.a", real("3e-8", "atomic spacing (cm)")},
      {"rate.d", real("3e-6", "subsystem size (cm)")},
      {"rate.lambda_mfp", real("3e-7", "phonon mean free path (cm)")},
      {"rate.c_s", real("3e5", "sound velocity (cm/s)")},
      {"rate.Delta", real("1e-9", "atomic position spread (cm)")},
      {"rate.T_over_Theta", real("1", "temperature over Debye temperature")},
      {"rate.alpha", real("1", "thermal factor; ignored when hbar_omega_over_kT > 0")},
      {"rate.hbar_omega_over_kT", real("0", "sets alpha = coth(x/2) when positive")},
      {"rate.xi", real("0", "pointer displacement (cm)")},
      {"rate.sweep_points", count("0", "xi sweep samples; 0 disables the sweep")},
      {"rate.sweep_max", real("3e-11", "largest xi of the sweep (cm)")},

      {"epr.a", list("0.7071067811865476,0", "amplitude a as re,im")},
      {"epr.b", list("-0.7071067811865476,0", "amplitude b as re,im")},
      {"epr.theta", list("0,0.5235987755982988,1.0471975511965976,1.5707963267948966",
                         "analyzer angles (rad)")},
      {"epr.n", count("10000", "joint runs per angle")},
      {"epr.mode", choice("simultaneous", {"simultaneous", "sequential", "overlapping"},
                          "apparatus schedule")},
      {"epr.tau1", real("1", "apparatus 1 reduction time")},
      {"epr.tau2", real("1", "apparatus 2 reduction time")},
      {"epr.delay", real("0", "start delay of apparatus 2 (overlapping mode)")},
      {"epr.dt_fraction", real("0.01", "dt as a fraction of min(tau1, tau2)")},
      {"epr.compare_schedules", boolean("false", "also run sequential vs simultaneous")},
      {"epr.min_p_value", real("0.01", "chi-square p-value bound for the comparison")},

      {"factorize.input", text("", "grid file")},
      {"factorize.rank", count("1", "number of separable terms")},
      {"factorize.outer_axis", choice("all", {"all", "0", "1", "2"},
                                      "three-variable mode: outer axis")},
  };
}

}  // namespace

const std::map<std::string, RunConfig::Entry>& RunConfig::schema() {
  static const auto s = build_schema();
  return s;
}

RunConfig::RunConfig() {
  for (const auto& [key, entry] : schema()) values_[key] = entry.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  require(it != schema().end(), [&] { return "unknown config key '" + key + "'"; }());
  const std::string v = trim(value);
  check(key, it->second, v);
  values_[key] = v;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos,
          [&] { return "expected key=value, got '" + assignment + "'"; }());
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::load(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    try {
      set_assignment(body);
    } catch (const ValidationError& e) {
      throw ValidationError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), [&] { return "cannot open config file '" + path + "'"; }());
  load(in, path);
}

const std::string& RunConfig::raw(const std::string& key, Kind kind) const {
  const auto it = schema().find(key);
  require(it != schema().end(), [&] { return "unknown config key '" + key + "'"; }());
  require(it->second.kind == kind || (kind == Kind::text && it->second.kind == Kind::choice),
          [&] { return "config key '" + key + "' read with the wrong type"; }());
  return values_.at(key);
}

double RunConfig::real(const std::string& key) const {
  return parse_real(key, raw(key, Kind::real));
}

std::size_t RunConfig::count(const std::string& key) const {
  return parse_count(key, raw(key, Kind::count));
}

bool RunConfig::boolean(const std::string& key) const {
  return parse_bool(key, raw(key, Kind::boolean));
}

const std::string& RunConfig::text(const std::string& key) const { return raw(key, Kind::text); }

std::vector<double> RunConfig::real_list(const std::string& key) const {
  return parse_list(key, raw(key, Kind::real_list));
}

nlohmann::json RunConfig::to_json(const std::string& section) const {
  nlohmann::json j = nlohmann::json::object();
  const std::string prefix = section.empty() ? "" : section + ".";
  for (const auto& [key, entry] : schema()) {
    if (key.rfind(prefix, 0) != 0) continue;
    switch (entry.kind) {
      case Kind::real: j[key] = real(key); break;
      case Kind::count: j[key] = count(key); break;
      case Kind::boolean: j[key] = boolean(key); break;
      case Kind::real_list: j[key] = real_list(key); break;
      case Kind::text:
      case Kind::choice: j[key] = values_.at(key); break;
    }
  }
  return j;
}

}  // namespace rlab
