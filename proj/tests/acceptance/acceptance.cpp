// Runs `rlab selfcheck` twice with the same seed and different worker
// counts. Criteria 1-8 are read from the first report (runtime bounds from
// its timing file); criterion 9 compares the two reports byte for byte.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rlab/acceptance.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_selfcheck(const fs::path& out, unsigned threads) {
  std::ostringstream cmd;
  cmd << '"' << RLAB_CLI_PATH << "\" selfcheck --seed " << rlab::acceptance::kDefaultSeed
      << " --threads " << threads << " --out \"" << out.string() << "\"";
  std::fflush(stdout);
  return std::system(cmd.str().c_str());
}

std::string summary(const nlohmann::json& c) {
  const auto& d = c["details"];
  switch (c["id"].get<int>()) {
    case 1: {
      double worst = 0.0;
      for (const auto& run : d)
        for (double z : run["z_scores"]) worst = std::max(worst, std::abs(z));
      return "max |z| = " + std::to_string(worst);
    }
    case 2:
      return "sup-norm = " + std::to_string(d["sup_norm"].get<double>()) +
             ", FP final error = " + std::to_string(d["fp_final_error"].get<double>());
    case 3:
      return "MC rate = " + std::to_string(d["mc_rate"].get<double>()) + " (R2 " +
             std::to_string(d["mc_r2"].get<double>()) + "), FP rate = " +
             std::to_string(d["fp_rate"].get<double>()) + ", rel diff = " +
             std::to_string(d["relative_difference"].get<double>());
    case 4:
      return "max/min mean exit time = " + std::to_string(d["max_over_min"].get<double>());
    case 5:
      return "tau_red off by " + std::to_string(d["tau_red_decades_off"].get<double>()) +
             " decades, xi0 off by " + std::to_string(d["xi0_decades_off"].get<double>()) +
             " decades, ratio spread " +
             std::to_string(d["microscopic_ratio_relative_spread"].get<double>());
    case 6: {
      std::ostringstream s;
      s << "max rel errors " << d["max_rel_thermal_vs_ground"].get<double>() << ", "
        << d["max_rel_bound_vs_square"].get<double>();
      return s.str();
    }
    case 7: {
      double worst = 0.0, min_p = 1.0;
      for (const auto& pt : d) {
        worst = std::max(worst, pt["max_sigma_deviation"].get<double>());
        min_p = std::min(min_p, pt["homogeneity_p_value"].get<double>());
      }
      return "max deviation " + std::to_string(worst) + " sigma, min schedule p = " +
             std::to_string(min_p);
    }
    case 8: {
      std::ostringstream s;
      s << "eigenvalue err " << d["max_eigenvalue_error"].get<double>() << ", factor err "
        << d["max_factor_error"].get<double>() << ", separable J "
        << d["max_separable_J"].get<double>() << ", 3-var spread "
        << d["three_variable"]["spread"].get<double>();
      return s.str();
    }
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path base = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rlab_acceptance";
  const fs::path dir_a = base / "threads1", dir_b = base / "threads4";
  fs::remove_all(base);

  run_selfcheck(dir_a, 1);
  run_selfcheck(dir_b, 4);

  const std::string report_a = slurp(dir_a / "selfcheck.json");
  const std::string report_b = slurp(dir_b / "selfcheck.json");
  if (report_a.empty()) {
    std::printf("selfcheck produced no report\n");
    return 1;
  }
  const auto report = nlohmann::json::parse(report_a);
  const auto timing = nlohmann::json::parse(slurp(dir_a / "selfcheck_timing.json"));

  bool all = true;
  for (std::size_t k = 0; k < report["criteria"].size(); ++k) {
    const auto& c = report["criteria"][k];
    const auto& t = timing["criteria"][k];
    const double seconds = t["seconds"].get<double>();
    const double limit = t["time_limit"].get<double>();
    const bool in_time = limit <= 0.0 || seconds <= limit;
    const bool ok = c["passed"].get<bool>() && in_time;
    all = all && ok;
    std::printf("criterion %d %-20s %s  %s; %.1f s%s\n", c["id"].get<int>(),
                c["name"].get<std::string>().c_str(), ok ? "PASS" : "FAIL", summary(c).c_str(),
                seconds, limit > 0.0 ? (" (limit " + std::to_string(int(limit)) + " s)").c_str() : "");
  }
  const bool same = !report_b.empty() && report_a == report_b;
  all = all && same;
  std::printf("criterion 9 %-20s %s  selfcheck JSON with --threads 1 and 4: %s (%zu bytes)\n",
              "determinism", same ? "PASS" : "FAIL", same ? "byte-identical" : "differs",
              report_a.size());
  return all ? 0 : 1;
}
