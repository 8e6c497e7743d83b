#include "nashtrack/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "nashtrack/csv.hpp"

namespace nashtrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Substream purposes for the randomized checks.
enum Purpose : std::uint64_t {
  kDerivatives = 11,
  kNeOracle,
  kModulus,
  kProductNorm,
};

class Draw {
 public:
  Draw(std::uint64_t seed, std::uint64_t purpose) : rng_(seed, substream_id(0, purpose, 0)) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(rng_.uniform() * static_cast<double>(hi - lo + 1));
  }

 private:
  RandomStream rng_;
};

struct Instance {
  GainTensor g;
  PowerMatrix p;
  NoiseModel noise;
  Vec p_max;
};

Instance random_instance(Draw& draw, std::size_t links, std::size_t n, double cross_max) {
  Instance inst{GainTensor(links, n), PowerMatrix(links, n), NoiseModel{draw.uniform(0.1, 2.0)},
                Vec::Ones(static_cast<Eigen::Index>(links))};
  for (std::size_t k = 0; k < links; ++k)
    for (std::size_t j = 0; j < links; ++j)
      for (std::size_t s = 0; s < n; ++s)
        inst.g(k, j, s) = k == j ? draw.uniform(0.5, 2.0) : draw.uniform(0.0, cross_max);
  for (Eigen::Index k = 0; k < inst.p.rows(); ++k)
    for (Eigen::Index s = 0; s < inst.p.cols(); ++s) inst.p(k, s) = draw.uniform(0.05, 1.0);
  return inst;
}

json to_json(const GainTensor& g) {
  return {{"K", g.links()}, {"N_F", g.subcarriers()}, {"g", g.data()}};
}

json to_json(const PowerMatrix& p) {
  json rows = json::array();
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    std::vector<double> row;
    for (Eigen::Index s = 0; s < p.cols(); ++s) row.push_back(p(k, s));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Instance& inst) {
  json doc = to_json(inst.g);
  doc["p"] = to_json(inst.p);
  doc["sigma2"] = inst.noise.sigma2;
  return doc;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

bool close(double measured, double expected) {
  return std::abs(measured - expected) <= std::max(1e-6, 1e-4 * std::abs(expected));
}

double lagrangian(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise, LinkIndex k,
                  double lambda, double p_max) {
  return link_capacity(g, p, noise, k) - lambda * (p.row(static_cast<Eigen::Index>(k)).sum() - p_max);
}

template <typename F>
CheckResult timed(int id, std::string name, double limit, F&& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  r.time_limit = limit;
  const auto start = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit > 0.0 && r.seconds > limit) {
    r.passed = false;
    r.detail += "; exceeded the " + fmt(limit) + " s budget";
  }
  return r;
}

}  // namespace

CheckResult check_derivatives(const ExperimentConfig& config) {
  return timed(1, "derivative correctness", 10.0, [&](CheckResult& r) {
    Draw draw(config.seed, kDerivatives);
    std::size_t compared = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < config.verify.random_instances && r.replay.empty(); ++i) {
      const std::size_t links = draw.index(1, 4);
      const std::size_t n = draw.index(1, 8);
      const Instance inst = random_instance(draw, links, n, 0.5);
      for (std::size_t k = 0; k < links && r.replay.empty(); ++k) {
        const double lambda = draw.uniform(0.0, 1.0);
        const Vec f = gradient(inst.g, inst.p, inst.noise, k, lambda);
        for (std::size_t s = 0; s < n; ++s) {
          const double h = 1e-5 * std::max(1.0, inst.p(k, s));
          PowerMatrix up = inst.p, down = inst.p;
          up(k, s) += h;
          down(k, s) -= h;
          const double fd = (lagrangian(inst.g, up, inst.noise, k, lambda, 1.0) -
                             lagrangian(inst.g, down, inst.noise, k, lambda, 1.0)) / (2.0 * h);
          ++compared;
          worst = std::max(worst, std::abs(fd - f(s)) / std::max(1.0, std::abs(f(s))));
          if (!close(fd, f(s))) {
            r.replay = to_json(inst).dump();
            r.detail = "gradient mismatch at k=" + std::to_string(k) + " s=" + std::to_string(s);
            break;
          }
        }
        for (std::size_t j = 0; j < links && r.replay.empty(); ++j) {
          const DiagMatrix eta = hessian_block(inst.g, inst.p, inst.noise, k, j);
          for (std::size_t t = 0; t < n && r.replay.empty(); ++t) {
            const double h = 1e-5 * std::max(1.0, inst.p(j, t));
            PowerMatrix up = inst.p, down = inst.p;
            up(j, t) += h;
            down(j, t) -= h;
            const Vec fd = (gradient(inst.g, up, inst.noise, k, lambda) -
                            gradient(inst.g, down, inst.noise, k, lambda)) / (2.0 * h);
            for (std::size_t s = 0; s < n; ++s) {
              const double expected = s == t ? eta.diagonal()(s) : 0.0;
              ++compared;
              worst = std::max(worst, std::abs(fd(s) - expected) / std::max(1.0, std::abs(expected)));
              if (!close(fd(s), expected)) {
                r.replay = to_json(inst).dump();
                r.detail = "Hessian mismatch at block (" + std::to_string(k) + "," +
                           std::to_string(j) + ")";
                break;
              }
            }
          }
        }
      }
    }
    r.passed = r.replay.empty();
    if (r.passed)
      r.detail = std::to_string(compared) + " entries over " +
                 std::to_string(config.verify.random_instances) + " instances, worst scaled error " +
                 fmt(worst);
  });
}

CheckResult check_ne_oracle(const ExperimentConfig& config) {
  return timed(2, "NE oracle", 30.0, [&](CheckResult& r) {
    Draw draw(config.seed, kNeOracle);
    double worst_single = 0.0;
    double worst_deviation = 0.0;
    std::size_t uncertified = 0;
    for (std::size_t i = 0; i < config.verify.random_instances && r.replay.empty(); ++i) {
      const Instance inst = random_instance(draw, 1, draw.index(1, 8), 0.0);
      const NeSolution sol = solve_ne(inst.g, inst.noise, inst.p_max);
      const Vec floor = Vec::Constant(static_cast<Eigen::Index>(inst.g.subcarriers()), inst.noise.sigma2);
      const Vec wf = waterfill(inst.g.direct(0), floor, inst.p_max(0)).power;
      const double diff = (sol.p_star.row(0).transpose() - wf).cwiseAbs().maxCoeff();
      worst_single = std::max(worst_single, diff);
      if (diff > 1e-8) {
        r.replay = to_json(inst).dump();
        r.detail = "K=1 equilibrium differs from water-filling by " + fmt(diff);
      }
    }
    for (std::size_t i = 0; i < 2 * config.verify.random_instances && r.replay.empty(); ++i) {
      const std::size_t links = 2 + i % 2;
      Instance inst = random_instance(draw, links, draw.index(1, 8), 0.4);
      if (!uniqueness_condition(inst.g, inst.p_max).holds) {
        ++uncertified;
        continue;
      }
      const NeSolution sol = solve_ne(inst.g, inst.noise, inst.p_max);
      const double dev = unilateral_deviation(inst.g, inst.noise, inst.p_max, sol.p_star);
      worst_deviation = std::max(worst_deviation, dev);
      if (!sol.converged || dev >= 1e-8) {
        r.replay = to_json(inst).dump();
        r.detail = "unilateral deviation " + fmt(dev) + " for K=" + std::to_string(links);
      }
    }
    r.passed = r.replay.empty();
    if (r.passed)
      r.detail = "max K=1 gap " + fmt(worst_single) + ", max unilateral deviation " +
                 fmt(worst_deviation) + " (" + std::to_string(uncertified) +
                 " draws skipped for violating uniqueness)";
  });
}

CheckResult check_modulus_lower_bound(const ExperimentConfig& config) {
  return timed(3, "contraction modulus lower bound", 30.0, [&](CheckResult& r) {
    Draw draw(config.seed, kModulus);
    constexpr std::size_t kInstances = 1000;
    constexpr std::size_t kScalings = 1000;
    double min_slack = std::numeric_limits<double>::infinity();
    double max_gap = 0.0;
    for (std::size_t i = 0; i < kInstances && r.replay.empty(); ++i) {
      const std::size_t links = draw.index(2, 4);
      const std::size_t n = draw.index(1, 8);
      // Cross ratios stay below 1/3 so the bound sum is below one. Above one a
      // scaling that shrinks every step gets beta near 1 < sum and the bound fails.
      const Instance inst = random_instance(draw, links, n, 0.15);
      for (std::size_t k = 0; k < links; ++k) {
        const double bound = modulus_lower_bound(inst.g, k);
        const DiagMatrix opt = optimal_scaling(inst.g, inst.p, inst.noise, k);
        const double gap = std::abs(contraction_modulus(inst.g, inst.p, inst.noise, k, opt) - bound);
        max_gap = std::max(max_gap, gap);
        if (gap > 1e-12) {
          r.replay = to_json(inst).dump();
          r.detail = "optimal scaling misses the bound by " + fmt(gap);
          break;
        }
      }
      for (std::size_t t = 0; t < kScalings && r.replay.empty(); ++t) {
        const std::size_t k = draw.index(0, links - 1);
        Vec d(static_cast<Eigen::Index>(n));
        for (auto& v : d) v = draw.log_uniform(1e-3, 1e3);
        const double beta = contraction_modulus(inst.g, inst.p, inst.noise, k, DiagMatrix(d));
        const double slack = beta - modulus_lower_bound(inst.g, k);
        min_slack = std::min(min_slack, slack);
        if (slack < -1e-12) {
          json doc = to_json(inst);
          doc["k"] = k;
          doc["scaling"] = std::vector<double>(d.data(), d.data() + d.size());
          r.replay = doc.dump();
          r.detail = "modulus below the bound by " + fmt(-slack);
        }
      }
    }
    r.passed = r.replay.empty();
    if (r.passed)
      r.detail = "min slack " + fmt(min_slack) + " over " + std::to_string(kInstances * kScalings) +
                 " scalings, max gap at optimal scaling " + fmt(max_gap);
  });
}

CheckResult check_static_convergence(const ExperimentConfig& config) {
  return timed(4, "static-channel linear convergence", 5.0, [&](CheckResult& r) {
    ExperimentConfig c = config;
    c.q_levels = 1;
    const FsmcSpec spec = c.spec(c.epsilons.front());
    const GainTensor g = gains_of(spec, JointChannelState{std::vector<std::uint8_t>(spec.chain_count(), 0)});
    const NoiseModel noise{c.sigma2};
    const Vec p_max = c.p_max_vector();
    if (!alt_sufficient_condition(g)) {
      r.detail = "the static channel violates the diagonal-dominance condition";
      r.replay = to_json(g).dump();
      return;
    }
    const PowerMatrix ne = solve_ne(g, noise, p_max).p_star;
    Tracker tracker(ScalingPolicy::of(ScalingKind::DsgpaOptimal), c.dual, noise, p_max,
                    c.subcarriers);
    // Start from a corner of the feasible set: the uniform split is already the
    // equilibrium of a frequency-flat static channel.
    tracker.mutable_state().p.setZero();
    tracker.mutable_state().p.col(0) = p_max;
    std::vector<double> err{block_max_norm(tracker.state().p - ne)};
    double beta = 0.0;
    for (int n = 0; n < 500 && err.back() > 1e-13; ++n) {
      const SlotUpdate u = tracker.step(g);
      beta = std::max(beta, u.beta.maxCoeff());
      err.push_back(block_max_norm(u.p_after - ne));
    }
    double worst = 0.0;
    std::size_t worst_slot = 0;
    for (std::size_t n = 3; n + 1 < err.size(); ++n) {
      if (err[n] <= 1e-9) break;
      if (err[n + 1] / err[n] > worst) {
        worst = err[n + 1] / err[n];
        worst_slot = n;
      }
    }
    const bool reached = err.back() <= 1e-8;
    r.passed = reached && worst <= beta + 0.05;
    r.detail = "beta " + fmt(beta) + ", worst ratio after slot 3 " + fmt(worst) + " (slot " +
               std::to_string(worst_slot) + "), final error " + fmt(err.back()) + " after " +
               std::to_string(err.size() - 1) + " slots";
    if (!r.passed) r.replay = to_json(g).dump();
  });
}

CheckResult check_dominated_process(const ExperimentConfig& config) {
  return timed(5, "dominated error process", 0.0, [&](CheckResult& r) {
    const double epsilon = config.epsilons.front();
    const FsmcSpec spec = config.spec(epsilon);
    const NoiseModel noise{config.sigma2};
    const Vec p_max = config.p_max_vector();
    const JointEnumeration en = enumerate_joint_states(spec, config.enumeration_cap);
    const NeTable table = ne_distance_table(en.states, spec, noise, p_max, {}, config.threads);
    double beta = 0.0;
    for (const auto& s : en.states) beta = std::max(beta, cross_interference_sum(gains_of(spec, s)));
    const double cap = table.delta * beta / (1.0 - beta);
    NeLookup lookup = [&](const JointChannelState& s) -> const PowerMatrix& {
      return table.solutions[joint_state_rank(spec, s)].p_star;
    };

    std::size_t stages = 0, dominated_fail = 0, cap_fail = 0;
    double worst_excess = 0.0, worst_dominated = 0.0;
    json first_failure;
    for (std::size_t t = 0; t < config.verify.domination_trials; ++t) {
      TrackingRun run{ScalingPolicy::of(ScalingKind::DsgpaOptimal), config.dual, noise, p_max,
                      config.verify.domination_horizon, config.seed, t};
      const TrackingTrace trace = run_tracking(spec, run);
      const auto records = stage_records(trace, lookup);
      const auto dominated = dominated_error_process(records, records.front().initial_error);
      for (std::size_t m = 0; m < records.size(); ++m) {
        ++stages;
        worst_dominated = std::max(worst_dominated, dominated[m]);
        const double excess = records[m].initial_error - dominated[m];
        worst_excess = std::max(worst_excess, excess);
        if (excess > 1e-9) {
          ++dominated_fail;
          if (first_failure.is_null())
            first_failure = {{"trial", t}, {"stage", m + 1}, {"seed", config.seed},
                             {"epsilon", epsilon}, {"initial_error", records[m].initial_error},
                             {"dominated", dominated[m]}};
        }
        if (dominated[m] > cap + 1e-9) ++cap_fail;
      }
    }
    r.passed = dominated_fail == 0 && cap_fail == 0;
    r.detail = std::to_string(dominated_fail) + "/" + std::to_string(stages) +
               " stage-initial errors above the dominated process (max excess " + fmt(worst_excess) +
               "); " + std::to_string(cap_fail) + " dominated values above delta*beta/(1-beta) = " +
               fmt(cap) + " (max " + fmt(worst_dominated) + ", delta " + fmt(table.delta) +
               ", beta " + fmt(beta) + ")";
    if (!first_failure.is_null()) r.replay = first_failure.dump();
  });
}

std::vector<CheckResult> check_sweep(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.policies = {ScalingKind::DsgpaOptimal, ScalingKind::GenGpa, ScalingKind::DiaGpa,
                ScalingKind::ConGpa};
  std::vector<double> epsilons;
  for (double nbar : c.verify.sojourn_times)
    epsilons.push_back(epsilon_for_sojourn(nbar, c.links, c.subcarriers));

  std::vector<PolicyPoint> points;
  CheckResult order = timed(6, "order of growth", 600.0, [&](CheckResult& r) {
    points = sweep_sojourn(c, epsilons);
    std::vector<double> x, eae, mse;
    std::string failures;
    for (const auto& p : points) {
      if (p.policy != ScalingKind::DsgpaOptimal) continue;
      x.push_back(1.0 / p.mean_sojourn);
      eae.push_back(p.eae);
      mse.push_back(p.mse);
      if (!p.bounds) {
        failures += " bounds void at Nbar=" + fmt(p.mean_sojourn) + " (beta " + fmt(p.beta) + ")";
        continue;
      }
      if (p.eae > 1.2 * p.bounds->eae_bound)
        failures += " EAE " + fmt(p.eae) + " > 1.2 x " + fmt(p.bounds->eae_bound) + " at Nbar=" +
                    fmt(p.mean_sojourn) + ";";
      if (p.mse > 1.2 * p.bounds->mse_bound)
        failures += " MSE " + fmt(p.mse) + " > 1.2 x " + fmt(p.bounds->mse_bound) + " at Nbar=" +
                    fmt(p.mean_sojourn) + ";";
    }
    const double s_eae = log_log_slope(x, eae);
    const double s_mse = log_log_slope(x, mse);
    double ratio_eae = 0.0, ratio_mse = 0.0;
    for (const auto& p : points)
      if (p.policy == ScalingKind::DsgpaOptimal && p.bounds) {
        ratio_eae = std::max(ratio_eae, p.eae / p.bounds->eae_bound);
        ratio_mse = std::max(ratio_mse, p.mse / p.bounds->mse_bound);
      }
    r.passed = failures.empty() && std::abs(s_eae - 1.0) <= 0.25 && std::abs(s_mse - 1.0) <= 0.25;
    r.detail = "slopes EAE " + fmt(s_eae) + ", MSE " + fmt(s_mse) + "; worst empirical/bound EAE " +
               fmt(ratio_eae) + ", MSE " + fmt(ratio_mse) + failures;
  });

  CheckResult region = timed(7, "region stability", 0.0, [&](CheckResult& r) {
    std::vector<const PolicyPoint*> ds;
    for (const auto& p : points)
      if (p.policy == ScalingKind::DsgpaOptimal) ds.push_back(&p);
    std::sort(ds.begin(), ds.end(),
              [](auto* a, auto* b) { return a->mean_sojourn < b->mean_sojourn; });
    std::string failures;
    double worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double bound = ds[i]->bounds ? ds[i]->bounds->p_region_bound : 1.0;
      const double margin = ds[i]->p_region - (bound + 2.0 * ds[i]->p_region_se);
      worst_margin = std::max(worst_margin, margin);
      if (margin > 0.0) failures += " P_region above bound at Nbar=" + fmt(ds[i]->mean_sojourn) + ";";
      if (i > 0) {
        const double noise = 2.0 * std::hypot(ds[i]->p_region_se, ds[i - 1]->p_region_se);
        if (ds[i]->p_region > ds[i - 1]->p_region + noise)
          failures += " P_region increases from Nbar=" + fmt(ds[i - 1]->mean_sojourn) + " to " +
                      fmt(ds[i]->mean_sojourn) + ";";
      }
    }
    std::string values;
    for (auto* p : ds) values += (values.empty() ? "" : " ") + fmt(p->p_region);
    r.passed = failures.empty();
    r.detail = "P_region by increasing Nbar: " + values + "; max excess over bound " +
               fmt(worst_margin) + failures;
  });

  CheckResult ordering = timed(8, "baseline ordering", 0.0, [&](CheckResult& r) {
    std::string failures;
    double min_gap_dia = std::numeric_limits<double>::infinity();
    double min_gap_con = std::numeric_limits<double>::infinity();
    double worst_gen = 0.0;
    for (const auto& p : points) {
      if (p.policy != ScalingKind::DsgpaOptimal) continue;
      for (const auto& q : points) {
        if (q.epsilon != p.epsilon || q.policy == p.policy) continue;
        const double se = std::hypot(p.eae_se, q.eae_se);
        const double gap = (q.eae - p.eae) / std::max(se, 1e-300);
        if (q.policy == ScalingKind::GenGpa) {
          const double rel = std::abs(p.eae - q.eae) / p.eae;
          worst_gen = std::max(worst_gen, rel);
          if (rel > 0.15) failures += " Gen-GPA differs by " + fmt(100 * rel) + "% at Nbar=" + fmt(p.mean_sojourn) + ";";
          continue;
        }
        (q.policy == ScalingKind::DiaGpa ? min_gap_dia : min_gap_con) =
            std::min(q.policy == ScalingKind::DiaGpa ? min_gap_dia : min_gap_con, gap);
        if (!(q.eae > p.eae) || gap <= 2.0)
          failures += " " + to_string(q.policy) + " not worse by 2 SE at Nbar=" + fmt(p.mean_sojourn) + ";";
      }
    }
    r.passed = failures.empty();
    r.detail = "min gap to Dia-GPA " + fmt(min_gap_dia) + " SE, to Con-GPA " + fmt(min_gap_con) +
               " SE; max relative difference to Gen-GPA " + fmt(100 * worst_gen) + "%" + failures;
  });
  return {order, region, ordering};
}

MdpKernel desk_mdp(const MdpSettings& settings) {
  const ScalarChain chain = build_scalar_chain(2, settings.epsilon, 1.0);
  Mat jumps(2, 2);
  jumps << 0.0, settings.jump, settings.jump, 0.0;
  const double worst = *std::max_element(settings.actions.begin(), settings.actions.end());
  const double upper = settings.jump > 0.0 ? settings.jump / (1.0 - worst) : 1.0;
  return mdp_kernel(error_grid(upper, settings.levels), chain.tpm, jumps, settings.actions,
                    1.0 - 2.0 * settings.epsilon, 1, 1);
}

double best_enumerated_policy_cost(const MdpKernel& kernel, const std::vector<double>& cost,
                                   std::size_t limit) {
  const std::size_t states = kernel.state_count();
  const std::size_t actions = kernel.actions.size();
  double total = 1.0;
  for (std::size_t x = 0; x < states; ++x) total *= static_cast<double>(actions);
  require(total <= static_cast<double>(limit), "too many stationary policies to enumerate");
  std::vector<std::size_t> policy(states, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    best = std::min(best, evaluate_policy(kernel, cost, policy));
    std::size_t x = states;
    while (x > 0 && ++policy[x - 1] == actions) policy[--x] = 0;
    if (x == 0) break;
  }
  return best;
}

CheckResult check_mdp_greedy(const ExperimentConfig& config) {
  return timed(9, "MDP greedy optimality", 10.0, [&](CheckResult& r) {
    const MdpKernel kernel = desk_mdp(config.mdp);
    const std::vector<double>& cost = kernel.grid;
    const RviResult rvi = relative_value_iteration(kernel, cost, 1e-9);
    const auto greedy = greedy_min_beta_policy(kernel);
    const double greedy_cost = evaluate_policy(kernel, cost, greedy);

    double best_other = evaluate_policy(kernel, cost, rvi.policy);
    for (std::size_t a = 0; a < kernel.actions.size(); ++a)
      best_other = std::min(best_other, evaluate_policy(kernel, cost,
                                                        std::vector<std::size_t>(kernel.state_count(), a)));
    RandomStream rng(config.seed, substream_id(0, 21, 0));
    for (std::size_t i = 0; i < config.mdp.random_policies; ++i) {
      std::vector<std::size_t> policy(kernel.state_count());
      for (auto& a : policy) a = rng() % kernel.actions.size();
      best_other = std::min(best_other, evaluate_policy(kernel, cost, policy));
    }

    // Every stationary policy of a two-level, two-action reduction.
    MdpSettings small = config.mdp;
    small.levels = 2;
    small.actions = {*std::min_element(config.mdp.actions.begin(), config.mdp.actions.end()),
                     *std::max_element(config.mdp.actions.begin(), config.mdp.actions.end())};
    const MdpKernel tiny = desk_mdp(small);
    const double tiny_greedy = evaluate_policy(tiny, tiny.grid, greedy_min_beta_policy(tiny));
    const double tiny_best = best_enumerated_policy_cost(tiny, tiny.grid);

    r.passed = std::abs(greedy_cost - rvi.average_cost) <= 1e-9 &&
               greedy_cost <= best_other + 1e-9 && tiny_greedy <= tiny_best + 1e-9;
    r.detail = "RVI theta " + fmt(rvi.average_cost) + " in " + std::to_string(rvi.iterations) +
               " sweeps, greedy " + fmt(greedy_cost) + ", best other policy " + fmt(best_other) +
               "; exhaustive 2x2 best " + fmt(tiny_best) + " vs greedy " + fmt(tiny_greedy);
  });
}

CheckResult check_norm_and_sojourn(const ExperimentConfig& config) {
  return timed(10, "matrix product bound and sojourn law", 0.0, [&](CheckResult& r) {
    Draw draw(config.seed, kProductNorm);
    std::size_t failures = 0;
    for (int i = 0; i < 10000; ++i) {
      const std::size_t n = draw.index(1, 8);
      Vec a(static_cast<Eigen::Index>(n)), b(static_cast<Eigen::Index>(n));
      for (auto& v : a) v = draw.log_uniform(1e-3, 1e3);
      for (auto& v : b) v = draw.log_uniform(1e-3, 1e3);
      if (!product_norm_bound_check(DiagMatrix(a), DiagMatrix(b))) ++failures;
    }

    const double epsilon = config.epsilons.front();
    const FsmcSpec spec = config.spec(epsilon);
    const std::size_t wanted = config.verify.sojourn_stages;
    const double nbar = average_sojourn_time(spec.nu(), spec.links(), spec.subcarriers());
    const auto horizon = static_cast<std::size_t>(std::ceil(1.1 * nbar * static_cast<double>(wanted + 2)));
    auto lengths = sample_trace(spec, horizon, config.seed, 0).stage_lengths(true);
    const std::size_t used = std::min(lengths.size(), wanted);
    lengths.resize(used);

    // Bins l = 1, 2, ... while the expected count stays >= 5; the last bin is the tail.
    std::vector<double> expected, observed;
    double tail = 1.0;
    for (std::size_t l = 1;; ++l) {
      const double e = static_cast<double>(used) * sojourn_pmf(spec.nu(), spec.links(), spec.subcarriers(), l);
      if (e < 5.0 || static_cast<double>(used) * (tail - e / static_cast<double>(used)) < 5.0) break;
      expected.push_back(e);
      observed.push_back(0.0);
      tail -= e / static_cast<double>(used);
    }
    expected.push_back(static_cast<double>(used) * tail);
    observed.push_back(0.0);
    for (std::size_t len : lengths) observed[std::min(len, observed.size()) - 1] += 1.0;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i)
      chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    const double dof = static_cast<double>(expected.size() - 1);
    const double p_value =
        dof > 0 ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2)) : 1.0;

    r.passed = failures == 0 && used == wanted && p_value > 0.01;
    r.detail = std::to_string(failures) + " of 10000 pairs violate the product bound; chi-square " +
               fmt(chi2) + " on " + fmt(dof) + " dof over " + std::to_string(used) +
               " stages, p = " + fmt(p_value);
  });
}

std::vector<CheckResult> verify_suite(const ExperimentConfig& config,
                                      const std::function<void(const CheckResult&)>& on_result) {
  config.validate();
  std::vector<CheckResult> out;
  auto push = [&](CheckResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  // A check that throws is reported as a failure of that check, not of the suite.
  auto guarded = [&](int id, const char* name, const Check& check) {
    try {
      push(check(config));
    } catch (const std::exception& e) {
      CheckResult r;
      r.id = id;
      r.name = name;
      r.detail = std::string("error: ") + e.what();
      push(r);
    }
  };
  guarded(1, "derivative correctness", check_derivatives);
  guarded(2, "NE oracle", check_ne_oracle);
  guarded(3, "contraction modulus lower bound", check_modulus_lower_bound);
  guarded(4, "static-channel linear convergence", check_static_convergence);
  guarded(5, "dominated error process", check_dominated_process);
  try {
    for (auto& r : check_sweep(config)) push(std::move(r));
  } catch (const std::exception& e) {
    for (int id : {6, 7, 8}) {
      CheckResult r;
      r.id = id;
      r.name = "sojourn sweep";
      r.detail = std::string("error: ") + e.what();
      push(r);
    }
  }
  guarded(9, "MDP greedy optimality", check_mdp_greedy);
  guarded(10, "matrix product bound and sojourn law", check_norm_and_sojourn);
  return out;
}

void write_verify_report(const std::vector<CheckResult>& results, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "report.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
  csv::Writer w(out);
  w.header({"id", "name", "passed", "seconds", "time_limit", "detail"});
  for (const auto& r : results) {
    w << r.id << r.name << r.passed << r.seconds << r.time_limit << r.detail;
    w.end_row();
    if (!r.replay.empty()) {
      std::ofstream replay(dir / ("replay_" + std::to_string(r.id) + ".json"), std::ios::binary);
      replay << json::parse(r.replay).dump(2) << "\n";
    }
  }
}

}  // namespace nashtrack
