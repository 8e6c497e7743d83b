#include "nashtrack/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "nashtrack/contraction.hpp"
#include "nashtrack/csv.hpp"

namespace nashtrack {

UniquenessCheck uniqueness_condition(const GainTensor& g, const Vec& p_max) {
  const std::size_t links = g.links();
  UniquenessCheck out;
  if (links <= 1) return out;
  double worst = 0.0;
  for (std::size_t k = 0; k < links; ++k)
    for (std::size_t j = 0; j < links; ++j) {
      if (j == k) continue;
      for (std::size_t s = 0; s < g.subcarriers(); ++s) {
        const double num = g(k, j, s) * p_max(j);
        const double den = g(k, k, s) * p_max(k);
        const double ratio = den > 0.0 ? num / den
                                       : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        worst = std::max(worst, ratio);
      }
    }
  out.margin = 1.0 / static_cast<double>(links - 1) - worst;
  out.holds = out.margin > 0.0;
  return out;
}

double cross_interference_sum(const GainTensor& g) {
  double worst = 0.0;
  for (std::size_t k = 0; k < g.links(); ++k) worst = std::max(worst, modulus_lower_bound(g, k));
  return worst;
}

bool alt_sufficient_condition(const GainTensor& g) { return cross_interference_sum(g) < 1.0; }

WaterfillResult waterfill(const Vec& direct_gains, const Vec& floor, double budget) {
  require(direct_gains.size() == floor.size(), "waterfill: size mismatch");
  require(budget > 0.0, "waterfill: budget must be positive");
  require((floor.array() > 0.0).all(), "waterfill: interference floor must be positive");
  require((direct_gains.array() >= 0.0).all(), "waterfill: gains must be nonnegative");

  const auto n = static_cast<std::size_t>(direct_gains.size());
  WaterfillResult out{Vec::Zero(static_cast<Eigen::Index>(n)), 0.0};

  // Inverse channel quality floor_s / g_s of every usable subcarrier, ascending.
  std::vector<std::pair<double, std::size_t>> levels;
  for (std::size_t s = 0; s < n; ++s)
    if (direct_gains(s) > 0.0) levels.emplace_back(floor(s) / direct_gains(s), s);
  if (levels.empty()) return out;
  std::sort(levels.begin(), levels.end());

  // Largest active set whose common water level clears every member's level.
  double prefix = 0.0;
  double mu = 0.0;
  for (std::size_t m = 0; m < levels.size(); ++m) {
    prefix += levels[m].first;
    const double candidate = (budget + prefix) / static_cast<double>(m + 1);
    if (m + 1 < levels.size() && candidate > levels[m + 1].first) continue;
    mu = candidate;
    break;
  }
  out.water_level = mu;
  for (const auto& [level, s] : levels) out.power(s) = std::max(mu - level, 0.0);
  return out;
}

PowerMatrix best_response(const GainTensor& g, const NoiseModel& noise, const Vec& p_max,
                          const PowerMatrix& p) {
  PowerMatrix next(p.rows(), p.cols());
  for (std::size_t k = 0; k < g.links(); ++k) {
    Vec floor = Vec::Constant(p.cols(), noise.sigma2);
    for (std::size_t j = 0; j < g.links(); ++j) {
      if (j == k) continue;
      for (std::size_t s = 0; s < g.subcarriers(); ++s) floor(s) += g(k, j, s) * p(j, s);
    }
    next.row(k) = waterfill(g.direct(k), floor, p_max(k)).power.transpose();
  }
  return next;
}

double unilateral_deviation(const GainTensor& g, const NoiseModel& noise, const Vec& p_max,
                            const PowerMatrix& p) {
  return block_max_norm(best_response(g, noise, p_max, p) - p);
}

NeSolution solve_ne(const GainTensor& g, const NoiseModel& noise, const Vec& p_max,
                    const NeOptions& options) {
  const std::size_t links = g.links();
  const std::size_t n = g.subcarriers();
  require(static_cast<std::size_t>(p_max.size()) == links, "p_max must have K entries");
  require((p_max.array() > 0.0).all(), "power budgets must be positive");
  require(noise.sigma2 > 0.0, "noise power sigma2 must be positive");

  NeSolution sol;
  sol.certified = uniqueness_condition(g, p_max).holds;
  sol.p_star = PowerMatrix(links, n);
  for (std::size_t k = 0; k < links; ++k)
    sol.p_star.row(k).setConstant(p_max(k) / static_cast<double>(n));

  for (std::size_t it = 0; it < options.max_iter; ++it) {
    PowerMatrix next = best_response(g, noise, p_max, sol.p_star);
    sol.residual = block_max_norm(next - sol.p_star);
    sol.p_star = std::move(next);
    sol.iterations = it + 1;
    if (options.record_history) sol.residual_history.push_back(sol.residual);
    if (sol.residual <= options.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

NeTable ne_distance_table(const std::vector<JointChannelState>& states, const FsmcSpec& spec,
                          const NoiseModel& noise, const Vec& p_max, const NeOptions& options,
                          unsigned threads) {
  NeTable table;
  const std::size_t q = states.size();
  table.solutions.resize(q);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(q)));
  auto solve_range = [&](unsigned w) {
    for (std::size_t i = w; i < q; i += workers)
      table.solutions[i] = solve_ne(gains_of(spec, states[i]), noise, p_max, options);
  };
  if (workers == 1) {
    solve_range(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(solve_range, w);
    for (auto& t : pool) t.join();
  }

  table.distance = Mat::Zero(q, q);
  for (std::size_t a = 0; a < q; ++a) {
    if (!table.solutions[a].certified) ++table.uncertified;
    for (std::size_t b = a + 1; b < q; ++b) {
      const double d = block_max_norm(table.solutions[a].p_star - table.solutions[b].p_star);
      table.distance(a, b) = table.distance(b, a) = d;
      table.delta = std::max(table.delta, d);
    }
  }
  return table;
}

NeCache::NeCache(const FsmcSpec& spec, NoiseModel noise, Vec p_max, NeOptions options,
                 std::size_t capacity)
    : spec_(&spec),
      noise_(noise),
      p_max_(std::move(p_max)),
      options_(options),
      capacity_(std::max<std::size_t>(capacity, 1)) {}

const PowerMatrix& NeCache::get(const JointChannelState& state) {
  if (auto it = index_.find(state); it != index_.end()) {
    entries_.splice(entries_.begin(), entries_, it->second);
    return it->second->p_star;
  }
  NeSolution sol = solve_ne(gains_of(*spec_, state), noise_, p_max_, options_);
  ++solves_;
  if (!sol.certified) ++uncertified_;
  entries_.push_front(Entry{state, std::move(sol.p_star)});
  index_.emplace(state, entries_.begin());
  if (entries_.size() > capacity_) {
    index_.erase(entries_.back().state);
    entries_.pop_back();
  }
  return entries_.front().p_star;
}

double NeCache::delta_estimate() const {
  double delta = 0.0;
  for (auto a = entries_.begin(); a != entries_.end(); ++a)
    for (auto b = std::next(a); b != entries_.end(); ++b)
      delta = std::max(delta, block_max_norm(a->p_star - b->p_star));
  return delta;
}

void write_ne_csv(std::ostream& out, const NeTable& table) {
  csv::Writer w(out);
  w.header({"state_index", "k", "s", "power"});
  for (std::size_t q = 0; q < table.solutions.size(); ++q) {
    const auto& p = table.solutions[q].p_star;
    for (Eigen::Index k = 0; k < p.rows(); ++k)
      for (Eigen::Index s = 0; s < p.cols(); ++s) {
        w << static_cast<std::uint64_t>(q) << static_cast<std::uint64_t>(k)
          << static_cast<std::uint64_t>(s) << p(k, s);
        w.end_row();
      }
  }
}

}  // namespace nashtrack
