#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nashtrack/harness.hpp"

namespace nashtrack {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  std::string replay;          // JSON describing the offending instance, empty on success
  double seconds = 0.0;
  double time_limit = 0.0;     // 0 = unlimited
};

using Check = std::function<CheckResult(const ExperimentConfig&)>;

CheckResult check_derivatives(const ExperimentConfig& config);
CheckResult check_ne_oracle(const ExperimentConfig& config);
CheckResult check_modulus_lower_bound(const ExperimentConfig& config);
CheckResult check_static_convergence(const ExperimentConfig& config);
CheckResult check_dominated_process(const ExperimentConfig& config);
CheckResult check_mdp_greedy(const ExperimentConfig& config);
CheckResult check_norm_and_sojourn(const ExperimentConfig& config);

/// Criteria 6-8 share one sojourn-time sweep; returns three results.
std::vector<CheckResult> check_sweep(const ExperimentConfig& config);

/// Runs everything above in criterion order. `on_result` sees each result as
/// soon as it is available.
std::vector<CheckResult> verify_suite(const ExperimentConfig& config,
                                      const std::function<void(const CheckResult&)>& on_result = {});

/// report.csv plus replay_<id>.json for every failure.
void write_verify_report(const std::vector<CheckResult>& results, const std::filesystem::path& dir);

/// Exhaustive enumeration of stationary policies; refuses above `limit` policies.
double best_enumerated_policy_cost(const MdpKernel& kernel, const std::vector<double>& cost,
                                   std::size_t limit = 1 << 16);

/// MDP used by the verification: two channel states of one scalar chain.
MdpKernel desk_mdp(const MdpSettings& settings);

}  // namespace nashtrack
