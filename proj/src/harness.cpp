#include "nashtrack/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

#include "nashtrack/csv.hpp"

namespace nashtrack {

namespace fs = std::filesystem;
using nlohmann::json;

Vec ExperimentConfig::p_max_vector() const {
  if (p_max.size() == 1) return Vec::Constant(static_cast<Eigen::Index>(links), p_max.front());
  require(p_max.size() == links, "p_max needs one entry per link or a single shared value");
  return Eigen::Map<const Vec>(p_max.data(), static_cast<Eigen::Index>(p_max.size()));
}

FsmcSpec ExperimentConfig::spec(double epsilon) const {
  if (!mean_gain.empty())
    return FsmcSpec(links, subcarriers, epsilon, q_levels, mean_gain);
  return FsmcSpec::from_geometry(links, subcarriers, epsilon, q_levels, geometry);
}

void ExperimentConfig::validate() const {
  require(links >= 1, "K must be at least 1");
  require(subcarriers >= 1, "N_F must be at least 1");
  require(q_levels >= 1 && q_levels <= 255, "q_levels must lie in 1..255");
  require(!epsilons.empty(), "need at least one epsilon");
  for (double e : epsilons) require(e > 0.0 && e < 0.5, "epsilon must lie in (0, 0.5)");
  require(sigma2 > 0.0, "sigma2 must be positive");
  require(!p_max.empty(), "p_max must be given");
  for (double p : p_max) require(p > 0.0, "p_max entries must be positive");
  (void)p_max_vector();
  require(geometry.direct_distance > 0.0 && geometry.cross_distance > 0.0 &&
              geometry.path_loss_exponent > 0.0,
          "geometry entries must be positive");
  if (!mean_gain.empty()) {
    require(mean_gain.size() == links * links * subcarriers, "mean_gain needs K*K*N_F entries");
    for (double m : mean_gain) require(m > 0.0, "mean gains must be positive");
  }
  require(!policies.empty(), "need at least one policy");
  require(dual.alpha > 0.0, "alpha must be positive");
  require(con_stepsize > 0.0, "con_stepsize must be positive");
  require(trials >= 1, "trials must be at least 1");
  require(horizon >= 1, "horizon must be at least 1");
  if (burn_in) require(horizon > *burn_in, "horizon must exceed the burn-in");
  require(enumeration_cap >= 1, "enumeration cap must be positive");
  require(ne_cache_capacity >= 1, "NE cache capacity must be positive");
  require(threads >= 1, "threads must be at least 1");
  require(mdp.levels >= 1, "mdp.levels must be at least 1");
  require(!mdp.actions.empty(), "mdp.actions must not be empty");
  for (double b : mdp.actions) require(b > 0.0 && b < 1.0, "mdp.actions must lie in (0, 1)");
  require(mdp.jump >= 0.0, "mdp.jump must be nonnegative");
  require(mdp.epsilon > 0.0 && mdp.epsilon < 0.5, "mdp.epsilon must lie in (0, 0.5)");
  for (double n : verify.sojourn_times) require(n > 1.0, "sojourn times must exceed 1");
  require(verify.domination_trials >= 1 && verify.domination_horizon >= 1, "domination trials and horizon must be positive");
}

namespace {

template <typename T>
void read(const json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  require(doc.is_object(), "config must be a JSON object");
  // Misspelled keys would otherwise fall back to defaults without notice.
  static const std::set<std::string> known{
      "K", "N_F", "q_levels", "epsilon", "mean_sojourn", "sigma2", "p_max", "geometry",
      "mean_gain", "policies", "dual_step", "alpha", "con_stepsize", "horizon", "trials", "seed",
      "burn_in", "enumeration_cap", "ne_cache_capacity", "capacity_slots", "threads", "out", "mdp",
      "verify"};
  for (const auto& item : doc.items())
    require(known.count(item.key()) == 1, "unknown config key '" + item.key() + "'");
  ExperimentConfig c;
  try {
    read(doc, "K", c.links);
    read(doc, "N_F", c.subcarriers);
    read(doc, "q_levels", c.q_levels);
    if (doc.contains("epsilon")) {
      const auto& e = doc.at("epsilon");
      c.epsilons = e.is_array() ? e.get<std::vector<double>>() : std::vector<double>{e.get<double>()};
    }
    if (doc.contains("mean_sojourn")) {
      require(!doc.contains("epsilon"), "give either epsilon or mean_sojourn, not both");
      c.epsilons.clear();
      const auto& n = doc.at("mean_sojourn");
      for (double nbar : n.is_array() ? n.get<std::vector<double>>() : std::vector<double>{n.get<double>()})
        c.epsilons.push_back(epsilon_for_sojourn(nbar, c.links, c.subcarriers));
    }
    read(doc, "sigma2", c.sigma2);
    if (doc.contains("p_max")) {
      const auto& p = doc.at("p_max");
      c.p_max = p.is_array() ? p.get<std::vector<double>>() : std::vector<double>{p.get<double>()};
    }
    if (doc.contains("geometry")) {
      const auto& geo = doc.at("geometry");
      read(geo, "direct_distance", c.geometry.direct_distance);
      read(geo, "cross_distance", c.geometry.cross_distance);
      read(geo, "path_loss_exponent", c.geometry.path_loss_exponent);
    }
    read(doc, "mean_gain", c.mean_gain);
    if (doc.contains("policies")) {
      c.policies.clear();
      for (const auto& name : doc.at("policies").get<std::vector<std::string>>())
        c.policies.push_back(scaling_kind_from_string(name));
    }
    if (doc.contains("dual_step")) c.dual.kind = dual_step_from_string(doc.at("dual_step").get<std::string>());
    read(doc, "alpha", c.dual.alpha);
    read(doc, "con_stepsize", c.con_stepsize);
    read(doc, "horizon", c.horizon);
    read(doc, "trials", c.trials);
    read(doc, "seed", c.seed);
    if (doc.contains("burn_in") && !doc.at("burn_in").is_null())
      c.burn_in = doc.at("burn_in").get<std::size_t>();
    read(doc, "enumeration_cap", c.enumeration_cap);
    read(doc, "ne_cache_capacity", c.ne_cache_capacity);
    read(doc, "capacity_slots", c.capacity_slots);
    read(doc, "threads", c.threads);
    read(doc, "out", c.out_dir);
    if (doc.contains("mdp")) {
      const auto& m = doc.at("mdp");
      read(m, "levels", c.mdp.levels);
      read(m, "actions", c.mdp.actions);
      read(m, "jump", c.mdp.jump);
      read(m, "epsilon", c.mdp.epsilon);
      read(m, "random_policies", c.mdp.random_policies);
    }
    if (doc.contains("verify")) {
      const auto& v = doc.at("verify");
      read(v, "sojourn_times", c.verify.sojourn_times);
      read(v, "domination_trials", c.verify.domination_trials);
      read(v, "domination_horizon", c.verify.domination_horizon);
      read(v, "random_instances", c.verify.random_instances);
      read(v, "sojourn_stages", c.verify.sojourn_stages);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  std::vector<std::string> names;
  for (auto p : policies) names.push_back(to_string(p));
  json doc = {{"K", links},
              {"N_F", subcarriers},
              {"q_levels", q_levels},
              {"epsilon", epsilons},
              {"sigma2", sigma2},
              {"p_max", p_max},
              {"geometry",
               {{"direct_distance", geometry.direct_distance},
                {"cross_distance", geometry.cross_distance},
                {"path_loss_exponent", geometry.path_loss_exponent}}},
              {"policies", names},
              {"dual_step", to_string(dual.kind)},
              {"alpha", dual.alpha},
              {"con_stepsize", con_stepsize},
              {"horizon", horizon},
              {"trials", trials},
              {"seed", seed},
              {"burn_in", burn_in ? json(*burn_in) : json(nullptr)},
              {"enumeration_cap", enumeration_cap},
              {"ne_cache_capacity", ne_cache_capacity},
              {"capacity_slots", capacity_slots},
              {"threads", threads},
              {"out", out_dir},
              {"mdp",
               {{"levels", mdp.levels},
                {"actions", mdp.actions},
                {"jump", mdp.jump},
                {"epsilon", mdp.epsilon},
                {"random_policies", mdp.random_policies}}},
              {"verify",
               {{"sojourn_times", verify.sojourn_times},
                {"domination_trials", verify.domination_trials},
                {"domination_horizon", verify.domination_horizon},
                {"random_instances", verify.random_instances},
                {"sojourn_stages", verify.sojourn_stages}}}};
  if (!mean_gain.empty()) doc["mean_gain"] = mean_gain;
  return doc;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(doc);
}

namespace {

// Channel model, equilibria and constants shared by every policy at one epsilon.
struct Environment {
  FsmcSpec spec;
  double mean_sojourn = std::numeric_limits<double>::infinity();
  bool exact = false;
  std::vector<PowerMatrix> equilibria;  // indexed by joint state rank when exact
  double delta = 0.0;
  double beta_optimal = 0.0;
  std::size_t uncertified = 0;
};

Environment make_environment(const ExperimentConfig& c, double epsilon) {
  Environment env{c.spec(epsilon), std::numeric_limits<double>::infinity(), false, {}, 0.0, 0.0, 0};
  if (c.q_levels > 1)
    env.mean_sojourn = average_sojourn_time(env.spec.nu(), c.links, c.subcarriers);
  try {
    const JointEnumeration en = enumerate_joint_states(env.spec, c.enumeration_cap);
    const NeTable table = ne_distance_table(en.states, env.spec, NoiseModel{c.sigma2},
                                            c.p_max_vector(), NeOptions{}, c.threads);
    env.exact = true;
    env.delta = table.delta;
    env.uncertified = table.uncertified;
    for (std::size_t q = 0; q < en.states.size(); ++q) {
      env.equilibria.push_back(table.solutions[q].p_star);
      env.beta_optimal =
          std::max(env.beta_optimal, cross_interference_sum(gains_of(env.spec, en.states[q])));
    }
  } catch (const StateSpaceTooLarge&) {
    env.exact = false;
  }
  return env;
}

std::size_t burn_in_for(const ExperimentConfig& c, const Environment& env) {
  if (c.burn_in) return *c.burn_in;
  const double nbar = std::isfinite(env.mean_sojourn) ? env.mean_sojourn : 1.0;
  const std::size_t b = default_burn_in(nbar, env.beta_optimal);
  require(b < c.horizon, "horizon must exceed the burn-in (" + std::to_string(b) + " slots)");
  return b;
}

struct TrialStats {
  double eae = 0.0;
  double mse = 0.0;
  std::vector<double> nearest;  // post-burn-in distance to the nearest known equilibrium
  double beta = 0.0;
  double delta_seen = 0.0;
  std::size_t uncertified = 0;
  std::vector<double> sum_capacity;
  std::vector<double> link_capacity;
};

TrialStats run_trial(const ExperimentConfig& c, const Environment& env, ScalingKind kind,
                     std::uint64_t trial, std::size_t burn_in) {
  const NoiseModel noise{c.sigma2};
  const Vec p_max = c.p_max_vector();
  TrackingRun run{ScalingPolicy::of(kind, c.con_stepsize), c.dual, noise, p_max, c.horizon, c.seed,
                  trial};
  std::optional<NeCache> cache;
  if (!env.exact) cache.emplace(env.spec, noise, p_max, NeOptions{}, c.ne_cache_capacity);

  TrialStats stats;
  const std::size_t cap_slots = std::min(c.capacity_slots, c.horizon);
  stats.sum_capacity.reserve(cap_slots);
  stats.link_capacity.reserve(cap_slots);
  stats.nearest.reserve(c.horizon - burn_in);
  std::optional<PowerMatrix> previous;
  run_tracking(env.spec, run, [&](const SlotRecord& r) {
    const PowerMatrix& ne =
        env.exact ? env.equilibria[joint_state_rank(env.spec, *r.state)] : cache->get(*r.state);
    if (!env.exact && r.stage_start) {
      // Lazy mode sees only the jumps that actually happen.
      if (previous) stats.delta_seen = std::max(stats.delta_seen, block_max_norm(ne - *previous));
      previous = ne;
    }
    stats.beta = std::max(stats.beta, r.update.beta.maxCoeff());
    if (r.slot < cap_slots) {
      const GainTensor g = gains_of(env.spec, *r.state);
      const double total = sum_capacity(g, r.update.p_before, noise);
      stats.sum_capacity.push_back(total);
      stats.link_capacity.push_back(total / static_cast<double>(c.links));
    }
    if (r.slot >= burn_in) {
      const double e = block_max_norm(r.update.p_after - ne);
      stats.eae += e;
      stats.mse += e * e;
      stats.nearest.push_back(env.exact ? distance_to_nearest(r.update.p_after, env.equilibria) : e);
    }
  });
  const auto samples = static_cast<double>(c.horizon - burn_in);
  stats.eae /= samples;
  stats.mse /= samples;
  if (cache) stats.uncertified = cache->uncertified();
  return stats;
}

// Trials run on `threads` workers; results land in trial order so the
// reduction is independent of scheduling.
std::vector<TrialStats> run_trials(const ExperimentConfig& c, const Environment& env,
                                   ScalingKind kind, std::size_t burn_in) {
  std::vector<TrialStats> out(c.trials);
  const unsigned workers = std::max(1u, std::min<unsigned>(c.threads, static_cast<unsigned>(c.trials)));
  auto work = [&](unsigned w) {
    for (std::size_t t = w; t < c.trials; t += workers) out[t] = run_trial(c, env, kind, t, burn_in);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return out;
}

void mean_and_se(const std::vector<double>& x, double& mean, double& se) {
  mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  se = 0.0;
  if (x.size() < 2) return;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

PolicyPoint reduce(const ExperimentConfig& c, const Environment& env, ScalingKind kind,
                   double epsilon, std::size_t burn_in, const std::vector<TrialStats>& trials) {
  PolicyPoint pt;
  pt.policy = kind;
  pt.epsilon = epsilon;
  pt.mean_sojourn = env.mean_sojourn;
  pt.trials = c.trials;
  pt.burn_in = burn_in;
  pt.exact = env.exact;
  pt.delta = env.delta;
  pt.uncertified_states = env.uncertified;
  for (const auto& t : trials) {
    pt.beta = std::max(pt.beta, t.beta);
    if (!env.exact) {
      pt.delta = std::max(pt.delta, t.delta_seen);
      pt.uncertified_states += t.uncertified;
    }
  }
  std::vector<double> eae, mse, region;
  for (const auto& t : trials) {
    eae.push_back(t.eae);
    mse.push_back(t.mse);
    const auto outside = std::count_if(t.nearest.begin(), t.nearest.end(),
                                       [&](double d) { return d > pt.delta; });
    region.push_back(static_cast<double>(outside) / static_cast<double>(t.nearest.size()));
  }
  mean_and_se(eae, pt.eae, pt.eae_se);
  mean_and_se(mse, pt.mse, pt.mse_se);
  mean_and_se(region, pt.p_region, pt.p_region_se);
  if (pt.beta < 1.0) {
    pt.bounds = std::isfinite(pt.mean_sojourn)
                    ? theoretical_bounds_for_sojourn(pt.beta, pt.delta, pt.mean_sojourn)
                    : ErrorBounds{};
  }
  return pt;
}

std::vector<PolicyPoint> run_points(const ExperimentConfig& c, const std::vector<double>& epsilons,
                                    std::vector<CapacityCurve>* capacity) {
  std::vector<PolicyPoint> points;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const Environment env = make_environment(c, epsilons[i]);
    const std::size_t burn_in = burn_in_for(c, env);
    for (ScalingKind kind : c.policies) {
      const auto trials = run_trials(c, env, kind, burn_in);
      points.push_back(reduce(c, env, kind, epsilons[i], burn_in, trials));
      if (capacity && i == 0) {
        CapacityCurve curve{kind, {}, {}};
        const std::size_t slots = trials.front().sum_capacity.size();
        curve.sum_capacity.assign(slots, 0.0);
        curve.mean_link_capacity.assign(slots, 0.0);
        for (const auto& t : trials)
          for (std::size_t n = 0; n < slots; ++n) {
            curve.sum_capacity[n] += t.sum_capacity[n] / static_cast<double>(c.trials);
            curve.mean_link_capacity[n] += t.link_capacity[n] / static_cast<double>(c.trials);
          }
        capacity->push_back(std::move(curve));
      }
    }
  }
  return points;
}

std::optional<double> bound_of(const PolicyPoint& p, double ErrorBounds::*field) {
  if (!p.bounds) return std::nullopt;
  return (*p.bounds).*field;
}

double inverse_sojourn(const PolicyPoint& p) {
  return std::isfinite(p.mean_sojourn) ? 1.0 / p.mean_sojourn : 0.0;
}

// Largest value of `field` among the policies sharing p's epsilon.
double max_at_epsilon(const std::vector<PolicyPoint>& points, const PolicyPoint& p,
                      double PolicyPoint::*field) {
  double best = 0.0;
  for (const auto& q : points)
    if (q.epsilon == p.epsilon) best = std::max(best, q.*field);
  return best;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.points = run_points(config, config.epsilons, &result.capacity);
  return result;
}

std::vector<PolicyPoint> sweep_sojourn(const ExperimentConfig& config,
                                       const std::vector<double>& epsilons) {
  ExperimentConfig c = config;
  c.epsilons = epsilons;
  c.validate();
  return run_points(c, epsilons, nullptr);
}

void write_experiment_csvs(const ExperimentResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_csv(dir / "capacity.csv");
    csv::Writer w(out);
    w.header({"slot", "policy", "sum_capacity", "normalized_sum_utility", "mean_link_capacity",
              "normalized_link_capacity"});
    double link_max = 0.0;
    for (const auto& c : result.capacity)
      for (double v : c.mean_link_capacity) link_max = std::max(link_max, v);
    const std::size_t slots = result.capacity.empty() ? 0 : result.capacity.front().sum_capacity.size();
    for (std::size_t n = 0; n < slots; ++n) {
      double sum_max = 0.0;
      for (const auto& c : result.capacity) sum_max = std::max(sum_max, c.sum_capacity[n]);
      for (const auto& c : result.capacity) {
        w << static_cast<std::uint64_t>(n) << to_string(c.policy) << c.sum_capacity[n]
          << (sum_max > 0.0 ? c.sum_capacity[n] / sum_max : 0.0) << c.mean_link_capacity[n]
          << (link_max > 0.0 ? c.mean_link_capacity[n] / link_max : 0.0);
        w.end_row();
      }
    }
  }
  {
    auto out = open_csv(dir / "p_region.csv");
    csv::Writer w(out);
    w.header({"policy", "epsilon", "mean_sojourn", "inv_mean_sojourn", "p_region", "p_region_se",
              "p_region_bound", "beta", "delta"});
    for (const auto& p : result.points) {
      w << to_string(p.policy) << p.epsilon << p.mean_sojourn << inverse_sojourn(p) << p.p_region
        << p.p_region_se << bound_of(p, &ErrorBounds::p_region_bound) << p.beta << p.delta;
      w.end_row();
    }
  }
  for (const auto& [name, value, se, bound] :
       {std::tuple{"eae", &PolicyPoint::eae, &PolicyPoint::eae_se, &ErrorBounds::eae_bound},
        std::tuple{"mse", &PolicyPoint::mse, &PolicyPoint::mse_se, &ErrorBounds::mse_bound}}) {
    auto out = open_csv(dir / (std::string(name) + ".csv"));
    csv::Writer w(out);
    const std::string n(name);
    w.header({"policy", "epsilon", "mean_sojourn", "inv_mean_sojourn", n, n + "_se",
              "normalized_" + n, n + "_bound"});
    for (const auto& p : result.points) {
      const double top = max_at_epsilon(result.points, p, value);
      w << to_string(p.policy) << p.epsilon << p.mean_sojourn << inverse_sojourn(p) << p.*value
        << p.*se << (top > 0.0 ? p.*value / top : 0.0) << bound_of(p, bound);
      w.end_row();
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<PolicyPoint>& points) {
  csv::Writer w(out);
  w.header({"policy", "epsilon", "mean_sojourn", "inv_mean_sojourn", "trials", "burn_in", "beta",
            "delta", "exact", "uncertified_states", "p_region", "p_region_se", "p_region_bound",
            "eae", "eae_se", "eae_bound", "mse", "mse_se", "mse_bound"});
  for (const auto& p : points) {
    w << to_string(p.policy) << p.epsilon << p.mean_sojourn << inverse_sojourn(p)
      << static_cast<std::uint64_t>(p.trials) << static_cast<std::uint64_t>(p.burn_in) << p.beta
      << p.delta << p.exact << static_cast<std::uint64_t>(p.uncertified_states) << p.p_region
      << p.p_region_se << bound_of(p, &ErrorBounds::p_region_bound) << p.eae << p.eae_se
      << bound_of(p, &ErrorBounds::eae_bound) << p.mse << p.mse_se
      << bound_of(p, &ErrorBounds::mse_bound);
    w.end_row();
  }
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two points");
  Mat a(static_cast<Eigen::Index>(x.size()), 2);
  Vec b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "slope fit needs positive data");
    a(static_cast<Eigen::Index>(i), 0) = std::log(x[i]);
    a(static_cast<Eigen::Index>(i), 1) = 1.0;
    b(static_cast<Eigen::Index>(i)) = std::log(y[i]);
  }
  return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace nashtrack
