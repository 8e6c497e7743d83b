#include "nashtrack/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nashtrack/network.hpp"

namespace nashtrack {

double exponential_cell_mean(double lo, double hi, double mean) {
  // E[X 1{lo <= X < hi}] = (lo + m) e^{-lo/m} - (hi + m) e^{-hi/m}
  const double mass_lo = std::exp(-lo / mean);
  const double mass_hi = std::isinf(hi) ? 0.0 : std::exp(-hi / mean);
  const double first_lo = (lo + mean) * mass_lo;
  const double first_hi = std::isinf(hi) ? 0.0 : (hi + mean) * mass_hi;
  return (first_lo - first_hi) / (mass_lo - mass_hi);
}

ScalarChain build_scalar_chain(std::size_t q_levels, double epsilon, double mean_gain) {
  require(q_levels >= 1, "q_levels must be at least 1");
  require(mean_gain > 0.0, "mean_gain must be positive");
  if (q_levels > 1) {
    require(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 0.5)");
  }
  const auto q = static_cast<double>(q_levels);

  ScalarChain chain;
  chain.levels.reserve(q_levels);
  for (std::size_t i = 0; i < q_levels; ++i) {
    const double lo = -mean_gain * std::log1p(-static_cast<double>(i) / q);
    const double hi = (i + 1 == q_levels) ? std::numeric_limits<double>::infinity()
                                          : -mean_gain * std::log1p(-static_cast<double>(i + 1) / q);
    chain.levels.push_back(exponential_cell_mean(lo, hi, mean_gain));
  }

  chain.tpm = Mat::Zero(q_levels, q_levels);
  if (q_levels == 1) {
    chain.tpm(0, 0) = 1.0;
  } else if (q_levels == 2) {
    // Neighbour and wrap-around corner coincide.
    chain.tpm << 1.0 - 2.0 * epsilon, 2.0 * epsilon, 2.0 * epsilon, 1.0 - 2.0 * epsilon;
  } else {
    for (std::size_t i = 0; i < q_levels; ++i) {
      chain.tpm(i, i) = 1.0 - 2.0 * epsilon;
      chain.tpm(i, (i + 1) % q_levels) = epsilon;
      chain.tpm(i, (i + q_levels - 1) % q_levels) = epsilon;
    }
  }
  chain.stationary = Vec::Constant(q_levels, 1.0 / q);
  return chain;
}

std::size_t step_chain(const ScalarChain& chain, std::size_t state, RandomStream& rng) {
  const std::size_t n = chain.size();
  if (n == 1) return 0;
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t next = 0; next < n; ++next) {
    acc += chain.tpm(state, next);
    if (u < acc) return next;
  }
  // u landed in the rounding gap at the top of the row
  for (std::size_t next = n; next-- > 0;) {
    if (chain.tpm(state, next) > 0.0) return next;
  }
  return state;
}

double Geometry::cross_to_direct_ratio() const {
  return std::pow(direct_distance / cross_distance, path_loss_exponent);
}

FsmcSpec::FsmcSpec(std::size_t links, std::size_t subcarriers, double epsilon,
                   std::size_t q_levels, std::vector<double> mean_gain)
    : links_(links),
      subcarriers_(subcarriers),
      epsilon_(epsilon),
      q_levels_(q_levels),
      mean_gain_(std::move(mean_gain)) {
  require(links >= 1, "K must be at least 1");
  require(subcarriers >= 1, "N_F must be at least 1");
  require(q_levels >= 1 && q_levels <= 255, "q_levels must lie in [1, 255]");
  if (q_levels > 1) require(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 0.5)");
  require(mean_gain_.size() == links * links * subcarriers,
          "mean gain tensor must have K*K*N_F entries");
  chains_.reserve(mean_gain_.size());
  for (double m : mean_gain_) chains_.push_back(build_scalar_chain(q_levels, epsilon, m));
}

FsmcSpec FsmcSpec::from_geometry(std::size_t links, std::size_t subcarriers, double epsilon,
                                 std::size_t q_levels, const Geometry& geometry) {
  require(geometry.direct_distance > 0.0 && geometry.cross_distance > 0.0,
          "distances must be positive");
  require(geometry.path_loss_exponent > 0.0, "path-loss exponent must be positive");
  const double cross = geometry.cross_to_direct_ratio();
  std::vector<double> mean(links * links * subcarriers);
  for (std::size_t k = 0; k < links; ++k)
    for (std::size_t j = 0; j < links; ++j)
      for (std::size_t s = 0; s < subcarriers; ++s)
        mean[(k * links + j) * subcarriers + s] = (k == j) ? 1.0 : cross;
  return FsmcSpec(links, subcarriers, epsilon, q_levels, std::move(mean));
}

FsmcSpec FsmcSpec::with_epsilon(double epsilon) const {
  return FsmcSpec(links_, subcarriers_, epsilon, q_levels_, mean_gain_);
}

nlohmann::json FsmcSpec::to_json() const {
  return {{"K", links_},
          {"N_F", subcarriers_},
          {"epsilon", epsilon_},
          {"q_levels", q_levels_},
          {"mean_gain", mean_gain_}};
}

FsmcSpec FsmcSpec::from_json(const nlohmann::json& doc) {
  const auto links = doc.at("K").get<std::size_t>();
  const auto subcarriers = doc.at("N_F").get<std::size_t>();
  const auto epsilon = doc.at("epsilon").get<double>();
  const auto q_levels = doc.at("q_levels").get<std::size_t>();
  if (doc.contains("mean_gain")) {
    return FsmcSpec(links, subcarriers, epsilon, q_levels,
                    doc.at("mean_gain").get<std::vector<double>>());
  }
  Geometry geometry;
  if (doc.contains("geometry")) {
    const auto& geo = doc.at("geometry");
    geometry.direct_distance = geo.value("direct_distance", geometry.direct_distance);
    geometry.cross_distance = geo.value("cross_distance", geometry.cross_distance);
    geometry.path_loss_exponent = geo.value("path_loss_exponent", geometry.path_loss_exponent);
  }
  return from_geometry(links, subcarriers, epsilon, q_levels, geometry);
}

std::size_t JointStateHash::operator()(const JointChannelState& state) const {
  // FNV-1a
  std::uint64_t h = 1469598103934665603ull;
  for (auto idx : state.indices) {
    h ^= idx;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

std::uint64_t joint_state_rank(const FsmcSpec& spec, const JointChannelState& state) {
  std::uint64_t rank = 0;
  for (std::size_t c = 0; c < spec.chain_count(); ++c)
    rank = rank * spec.chain(c).size() + state.indices[c];
  return rank;
}

GainTensor gains_of(const FsmcSpec& spec, const JointChannelState& state) {
  GainTensor g(spec.links(), spec.subcarriers());
  for (std::size_t k = 0; k < spec.links(); ++k)
    for (std::size_t j = 0; j < spec.links(); ++j)
      for (std::size_t s = 0; s < spec.subcarriers(); ++s) {
        const std::size_t c = spec.chain_index(k, j, s);
        g(k, j, s) = spec.chain(c).levels[state.indices[c]];
      }
  return g;
}

namespace {
constexpr std::uint64_t kChannelPurpose = 1;
}

ChannelProcess::ChannelProcess(const FsmcSpec& spec, std::uint64_t seed, std::uint64_t trial)
    : spec_(&spec) {
  streams_.reserve(spec.chain_count());
  state_.indices.resize(spec.chain_count());
  for (std::size_t c = 0; c < spec.chain_count(); ++c) {
    streams_.emplace_back(seed, substream_id(trial, kChannelPurpose, c));
    // initial state from the (uniform) stationary law
    const auto q = spec.chain(c).size();
    const auto draw = static_cast<std::size_t>(streams_[c].uniform() * static_cast<double>(q));
    state_.indices[c] = static_cast<std::uint8_t>(std::min(draw, q - 1));
  }
}

bool ChannelProcess::advance() {
  bool changed = false;
  for (std::size_t c = 0; c < streams_.size(); ++c) {
    const auto next = step_chain(spec_->chain(c), state_.indices[c], streams_[c]);
    if (next != state_.indices[c]) {
      state_.indices[c] = static_cast<std::uint8_t>(next);
      changed = true;
    }
  }
  return changed;
}

std::vector<std::size_t> ChannelTrace::stage_lengths(bool complete_only) const {
  std::vector<std::size_t> cuts;
  cuts.push_back(0);
  cuts.insert(cuts.end(), stage_boundaries.begin(), stage_boundaries.end());
  cuts.push_back(states.size());
  std::vector<std::size_t> lengths;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const bool first = (i == 0);
    const bool last = (i + 2 == cuts.size());
    if (complete_only && (first || last)) continue;
    lengths.push_back(cuts[i + 1] - cuts[i]);
  }
  return lengths;
}

ChannelTrace sample_trace(const FsmcSpec& spec, std::size_t horizon, std::uint64_t seed,
                          std::uint64_t trial) {
  require(horizon >= 1, "horizon must be at least 1");
  ChannelTrace trace;
  trace.states.reserve(horizon);
  ChannelProcess process(spec, seed, trial);
  trace.states.push_back(process.state());
  for (std::size_t n = 1; n < horizon; ++n) {
    if (process.advance()) trace.stage_boundaries.push_back(n);
    trace.states.push_back(process.state());
  }
  return trace;
}

double average_sojourn_time(double nu, std::size_t links, std::size_t subcarriers) {
  require(nu > 0.0 && nu < 1.0, "nu must lie in (0, 1)");
  const double stay = std::pow(nu, static_cast<double>(links * links * subcarriers));
  return 1.0 / (1.0 - stay);
}

double sojourn_pmf(double nu, std::size_t links, std::size_t subcarriers, std::size_t l) {
  require(l >= 1, "sojourn length must be at least 1");
  require(nu > 0.0 && nu < 1.0, "nu must lie in (0, 1)");
  const double stay = std::pow(nu, static_cast<double>(links * links * subcarriers));
  return std::pow(stay, static_cast<double>(l - 1)) * (1.0 - stay);
}

double epsilon_for_sojourn(double mean_sojourn, std::size_t links, std::size_t subcarriers) {
  require(mean_sojourn > 1.0, "average sojourn time must exceed 1");
  const double stay = 1.0 - 1.0 / mean_sojourn;
  const double nu = std::pow(stay, 1.0 / static_cast<double>(links * links * subcarriers));
  return 0.5 * (1.0 - nu);
}

namespace {
std::string too_large_message(double cardinality, std::size_t cap) {
  std::ostringstream os;
  os << "joint channel state space has Q = " << cardinality << " states, above the cap of " << cap;
  return os.str();
}
}  // namespace

StateSpaceTooLarge::StateSpaceTooLarge(double cardinality, std::size_t cap)
    : std::runtime_error(too_large_message(cardinality, cap)), cardinality_(cardinality) {}

double joint_state_count(const FsmcSpec& spec) {
  double q = 1.0;
  for (const auto& chain : spec.chains()) q *= static_cast<double>(chain.size());
  return q;
}

JointEnumeration enumerate_joint_states(const FsmcSpec& spec, std::size_t cap) {
  const double count = joint_state_count(spec);
  if (count > static_cast<double>(cap)) throw StateSpaceTooLarge(count, cap);
  const auto q = static_cast<std::size_t>(count);
  const std::size_t chains = spec.chain_count();

  JointEnumeration out;
  out.states.reserve(q);
  JointChannelState state;
  state.indices.assign(chains, 0);
  for (std::size_t r = 0; r < q; ++r) {
    out.states.push_back(state);
    // odometer increment, last chain fastest
    for (std::size_t c = chains; c-- > 0;) {
      if (++state.indices[c] < spec.chain(c).size()) break;
      state.indices[c] = 0;
    }
  }

  Mat tpm = Mat::Ones(1, 1);
  for (const auto& chain : spec.chains()) {
    const Mat& t = chain.tpm;
    Mat next(tpm.rows() * t.rows(), tpm.cols() * t.cols());
    for (Eigen::Index a = 0; a < tpm.rows(); ++a)
      for (Eigen::Index b = 0; b < tpm.cols(); ++b)
        next.block(a * t.rows(), b * t.cols(), t.rows(), t.cols()) = tpm(a, b) * t;
    tpm = std::move(next);
  }
  out.tpm = std::move(tpm);
  return out;
}

}  // namespace nashtrack
