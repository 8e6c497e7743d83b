#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "nashtrack/common.hpp"
#include "nashtrack/rng.hpp"

namespace nashtrack {

class GainTensor;

/// One quantized fading process: a ring of gain levels with nearest-neighbour
/// transitions (probability epsilon each way, stay probability 1 - 2 epsilon).
struct ScalarChain {
  std::vector<double> levels;  // linear power gains, strictly increasing
  Mat tpm;                     // row-stochastic, Q x Q
  Vec stationary;              // uniform: the ring matrix is doubly stochastic

  std::size_t size() const { return levels.size(); }
};

/// Build a chain whose levels are the conditional means of an exponential
/// power gain with the given mean over `q_levels` equiprobable cells.
ScalarChain build_scalar_chain(std::size_t q_levels, double epsilon, double mean_gain);

/// Conditional mean of Exp(mean) restricted to the cell [lo, hi); hi may be +inf.
double exponential_cell_mean(double lo, double hi, double mean);

/// Draw the successor of `state` from row `state` of the chain's tpm.
std::size_t step_chain(const ScalarChain& chain, std::size_t state, RandomStream& rng);

/// Mean path-loss gains for a symmetric layout: every direct link at
/// `direct_distance`, every cross link at `cross_distance`, normalized so the
/// direct-link mean gain is 1.
struct Geometry {
  double direct_distance = 100.0;
  double cross_distance = 400.0;
  double path_loss_exponent = 3.5;

  double cross_to_direct_ratio() const;
};

/// All K^2 N_F scalar chains of the network. Chains are stored in (k, j, s)
/// lexicographic order; chain (k, j, s) drives the gain from transmitter j to
/// receiver k on subcarrier s.
class FsmcSpec {
 public:
  FsmcSpec(std::size_t links, std::size_t subcarriers, double epsilon, std::size_t q_levels,
           std::vector<double> mean_gain);

  static FsmcSpec from_geometry(std::size_t links, std::size_t subcarriers, double epsilon,
                                std::size_t q_levels, const Geometry& geometry);

  std::size_t links() const { return links_; }
  std::size_t subcarriers() const { return subcarriers_; }
  double epsilon() const { return epsilon_; }
  double nu() const { return 1.0 - 2.0 * epsilon_; }
  std::size_t q_levels() const { return q_levels_; }
  std::size_t chain_count() const { return chains_.size(); }

  std::size_t chain_index(LinkIndex k, LinkIndex j, SubcarrierIndex s) const {
    return (k * links_ + j) * subcarriers_ + s;
  }
  const ScalarChain& chain(std::size_t index) const { return chains_[index]; }
  const std::vector<ScalarChain>& chains() const { return chains_; }
  double mean_gain(LinkIndex k, LinkIndex j, SubcarrierIndex s) const {
    return mean_gain_[chain_index(k, j, s)];
  }

  /// Same network with a different transition parameter.
  FsmcSpec with_epsilon(double epsilon) const;

  nlohmann::json to_json() const;
  static FsmcSpec from_json(const nlohmann::json& doc);

 private:
  std::size_t links_;
  std::size_t subcarriers_;
  double epsilon_;
  std::size_t q_levels_;
  std::vector<double> mean_gain_;
  std::vector<ScalarChain> chains_;
};

/// Joint channel state: one level index per scalar chain.
struct JointChannelState {
  std::vector<std::uint8_t> indices;

  bool operator==(const JointChannelState&) const = default;
};

struct JointStateHash {
  std::size_t operator()(const JointChannelState& state) const;
};

/// Lexicographic rank of a joint state (first chain most significant).
/// Only meaningful when the joint state space fits in 64 bits.
std::uint64_t joint_state_rank(const FsmcSpec& spec, const JointChannelState& state);

GainTensor gains_of(const FsmcSpec& spec, const JointChannelState& state);

/// Streaming sampler: every scalar chain owns a Philox substream derived from
/// (seed, trial, chain index), so sample paths do not depend on thread layout.
class ChannelProcess {
 public:
  ChannelProcess(const FsmcSpec& spec, std::uint64_t seed, std::uint64_t trial);

  const JointChannelState& state() const { return state_; }
  /// Advance every chain one slot; returns true if any index changed.
  bool advance();

 private:
  const FsmcSpec* spec_;
  std::vector<RandomStream> streams_;
  JointChannelState state_;
};

struct ChannelTrace {
  std::vector<JointChannelState> states;
  std::vector<std::size_t> stage_boundaries;  // slots n >= 1 with state[n] != state[n-1]

  /// Lengths of the stages fully contained in the trace (first and last dropped
  /// when `complete_only`).
  std::vector<std::size_t> stage_lengths(bool complete_only = true) const;
};

ChannelTrace sample_trace(const FsmcSpec& spec, std::size_t horizon, std::uint64_t seed,
                          std::uint64_t trial = 0);

/// Mean stage length 1 / (1 - nu^(K^2 N_F)).
double average_sojourn_time(double nu, std::size_t links, std::size_t subcarriers);

/// P{N_m = l} = nu^(K^2 N_F (l - 1)) (1 - nu^(K^2 N_F)), l >= 1.
double sojourn_pmf(double nu, std::size_t links, std::size_t subcarriers, std::size_t l);

/// Transition parameter epsilon that produces a given average sojourn time.
double epsilon_for_sojourn(double mean_sojourn, std::size_t links, std::size_t subcarriers);

class StateSpaceTooLarge : public std::runtime_error {
 public:
  StateSpaceTooLarge(double cardinality, std::size_t cap);
  double cardinality() const { return cardinality_; }

 private:
  double cardinality_;
};

struct JointEnumeration {
  std::vector<JointChannelState> states;  // lexicographic order
  Mat tpm;                                // Kronecker product of the scalar tpms
};

inline constexpr std::size_t kDefaultEnumerationCap = 4096;

/// Product of the scalar chain cardinalities, as a double (may overflow 64 bits).
double joint_state_count(const FsmcSpec& spec);

JointEnumeration enumerate_joint_states(const FsmcSpec& spec,
                                        std::size_t cap = kDefaultEnumerationCap);

}  // namespace nashtrack
