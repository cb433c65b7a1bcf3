#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rlab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;  // statistical and numerical checks only
  nlohmann::json details;
  double seconds = 0.0;  // wall clock; kept out of the JSON report
  /// Runtime bound in seconds, 0 when the criterion has none.
  double time_limit = 0.0;
};

struct SuiteResult {
  std::uint64_t seed = 0;
  std::vector<CriterionResult> criteria;

  bool passed() const;
  /// Deterministic report: identical bytes for a fixed seed on any thread count.
  nlohmann::json report() const;
  /// Wall-clock timings per criterion.
  nlohmann::json timings() const;
};

CriterionResult born_rule(std::uint64_t seed, unsigned threads);
/// Criteria 2 and 3 share one Monte Carlo ensemble and one Fokker-Planck run.
std::vector<CriterionResult> fp_mc_agreement(std::uint64_t seed, unsigned threads);
CriterionResult channel_count(std::uint64_t seed, unsigned threads);
CriterionResult physical_rates();
CriterionResult overlap_identities(std::uint64_t seed);
CriterionResult epr_correlations(std::uint64_t seed, unsigned threads);
CriterionResult factorization_oracle(std::uint64_t seed);

/// Criteria 1 to 8 in order.
SuiteResult run_all(std::uint64_t seed, unsigned threads);

inline constexpr std::uint64_t kDefaultSeed = 20240917;
inline constexpr int kSchemaVersion = 1;

}  // namespace rlab::acceptance
