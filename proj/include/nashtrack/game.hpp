#pragma once

#include <iosfwd>
#include <limits>
#include <list>
#include <unordered_map>
#include <vector>

#include "nashtrack/channel.hpp"
#include "nashtrack/network.hpp"

namespace nashtrack {

struct UniquenessCheck {
  bool holds = true;
  // 1/(K-1) minus the worst weighted cross/direct ratio; +inf for a single link.
  double margin = std::numeric_limits<double>::infinity();
};

/// max_s g_kj P_j / (g_kk P_k) < 1/(K-1) for every ordered pair k != j.
UniquenessCheck uniqueness_condition(const GainTensor& g, const Vec& p_max);

/// max_k sum_{j != k} max_s g_kj / g_kk, the quantity compared against 1 by
/// the diagonal-dominance sufficient condition.
double cross_interference_sum(const GainTensor& g);
bool alt_sufficient_condition(const GainTensor& g);

struct WaterfillResult {
  Vec power;
  double water_level = 0.0;  // mu; the matching multiplier is 1/mu
};

/// Single-user best response: maximize sum_s ln(1 + direct_s p_s / floor_s)
/// subject to sum_s p_s <= budget, p >= 0.
WaterfillResult waterfill(const Vec& direct_gains, const Vec& floor, double budget);

struct NeSolution {
  PowerMatrix p_star;
  double residual = 0.0;  // block-max change in the final sweep
  std::size_t iterations = 0;
  bool converged = false;
  bool certified = false;  // uniqueness condition held for this channel
  std::vector<double> residual_history;  // filled when NeOptions::record_history
};

struct NeOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  bool record_history = false;
};

/// Nash equilibrium by synchronous best-response (iterative water-filling).
NeSolution solve_ne(const GainTensor& g, const NoiseModel& noise, const Vec& p_max,
                    const NeOptions& options = {});

/// Exact best response of every link against the others' current powers.
PowerMatrix best_response(const GainTensor& g, const NoiseModel& noise, const Vec& p_max,
                          const PowerMatrix& p);

/// max_k || BR_k(p_{-k}) - p_k ||_2: how far any player would move unilaterally.
double unilateral_deviation(const GainTensor& g, const NoiseModel& noise, const Vec& p_max,
                            const PowerMatrix& p);

struct NeTable {
  std::vector<NeSolution> solutions;  // one per state, input order
  Mat distance;                       // symmetric, zero diagonal
  double delta = 0.0;                 // max pairwise block-max distance
  std::size_t uncertified = 0;
};

NeTable ne_distance_table(const std::vector<JointChannelState>& states, const FsmcSpec& spec,
                          const NoiseModel& noise, const Vec& p_max, const NeOptions& options = {},
                          unsigned threads = 1);

/// Lazily solved equilibria keyed by joint state, least-recently-used
/// eviction beyond `capacity`. References returned by get() stay valid until
/// the next call to get().
class NeCache {
 public:
  NeCache(const FsmcSpec& spec, NoiseModel noise, Vec p_max, NeOptions options = {},
          std::size_t capacity = 1 << 16);

  const PowerMatrix& get(const JointChannelState& state);

  std::size_t size() const { return entries_.size(); }
  std::size_t solves() const { return solves_; }
  std::size_t uncertified() const { return uncertified_; }
  /// Largest pairwise block-max distance among the cached equilibria.
  double delta_estimate() const;

 private:
  struct Entry {
    JointChannelState state;
    PowerMatrix p_star;
  };
  const FsmcSpec* spec_;
  NoiseModel noise_;
  Vec p_max_;
  NeOptions options_;
  std::size_t capacity_;
  std::list<Entry> entries_;
  std::unordered_map<JointChannelState, std::list<Entry>::iterator, JointStateHash> index_;
  std::size_t solves_ = 0;
  std::size_t uncertified_ = 0;
};

/// CSV rows (state_index, k, s, power) for every state of the table.
void write_ne_csv(std::ostream& out, const NeTable& table);

}  // namespace nashtrack
