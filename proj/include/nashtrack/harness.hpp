#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nashtrack/analysis.hpp"
#include "nashtrack/game.hpp"
#include "nashtrack/mdp.hpp"

namespace nashtrack {

struct MdpSettings {
  std::size_t levels = 8;
  std::vector<double> actions{0.2, 0.4, 0.6, 0.8};
  double jump = 0.1;   // NE distance between the two channel states
  double epsilon = 0.1;
  std::size_t random_policies = 2000;
};

struct VerifySettings {
  std::vector<double> sojourn_times{5.0, 10.0, 20.0, 40.0, 80.0};
  std::size_t domination_trials = 1000;
  std::size_t domination_horizon = 2000;
  std::size_t random_instances = 100;
  std::size_t sojourn_stages = 100000;
};

struct ExperimentConfig {
  std::size_t links = 2;
  std::size_t subcarriers = 2;
  std::size_t q_levels = 2;
  std::vector<double> epsilons{0.01};
  double sigma2 = 10.0;
  std::vector<double> p_max{1.0};  // one entry per link, or a single shared value
  Geometry geometry;
  std::vector<double> mean_gain;  // explicit K*K*N_F means; overrides geometry when set
  std::vector<ScalingKind> policies{ScalingKind::DsgpaOptimal, ScalingKind::GenGpa,
                                    ScalingKind::DiaGpa, ScalingKind::ConGpa};
  DualStep dual;
  double con_stepsize = 0.005;
  std::size_t horizon = 100000;
  std::size_t trials = 8;
  std::uint64_t seed = 1;
  std::optional<std::size_t> burn_in;
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  std::size_t ne_cache_capacity = 1 << 16;
  std::size_t capacity_slots = 200;
  unsigned threads = 1;
  std::string out_dir = "out";
  MdpSettings mdp;
  VerifySettings verify;

  Vec p_max_vector() const;
  FsmcSpec spec(double epsilon) const;
  void validate() const;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Steady-state metrics of one policy at one transition parameter.
struct PolicyPoint {
  ScalingKind policy = ScalingKind::DsgpaOptimal;
  double epsilon = 0.0;
  double mean_sojourn = 0.0;
  std::size_t trials = 0;
  std::size_t burn_in = 0;
  double eae = 0.0;
  double eae_se = 0.0;
  double mse = 0.0;
  double mse_se = 0.0;
  double p_region = 0.0;
  double p_region_se = 0.0;
  double beta = 0.0;   // max contraction modulus seen over all slots and links
  double delta = 0.0;  // max NE distance (exact when enumerated)
  bool exact = false;  // equilibria enumerated rather than solved lazily
  std::size_t uncertified_states = 0;
  std::optional<ErrorBounds> bounds;  // empty when beta >= 1
};

struct CapacityCurve {
  ScalingKind policy = ScalingKind::DsgpaOptimal;
  std::vector<double> sum_capacity;        // trial mean per slot
  std::vector<double> mean_link_capacity;  // trial mean of (1/K) sum_k C_k per slot
};

struct ExperimentResult {
  std::vector<PolicyPoint> points;      // policy-major within each epsilon
  std::vector<CapacityCurve> capacity;  // first epsilon only
};

/// Run every configured policy at every configured epsilon.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Same, with the epsilon list replaced.
std::vector<PolicyPoint> sweep_sojourn(const ExperimentConfig& config,
                                       const std::vector<double>& epsilons);

/// capacity.csv, p_region.csv, eae.csv, mse.csv.
void write_experiment_csvs(const ExperimentResult& result, const std::filesystem::path& dir);
void write_sweep_csv(std::ostream& out, const std::vector<PolicyPoint>& points);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nashtrack
