#pragma once

#include <vector>

#include "nashtrack/common.hpp"

namespace nashtrack {

/// Controlled chain over (error level l, channel state q). State (l, q) has
/// flat index q * L + l. Each action is a worst-case contraction modulus beta.
struct MdpKernel {
  std::size_t levels = 0;
  std::size_t channel_states = 0;
  std::vector<double> grid;     // e_1 < ... < e_L
  std::vector<double> actions;  // beta values
  std::vector<Mat> transition;  // one (L Q) x (L Q) row-stochastic matrix per action

  std::size_t state_count() const { return levels * channel_states; }
  std::size_t flat(std::size_t l, std::size_t q) const { return q * levels + l; }
};

/// L log-spaced levels spanning [upper * 1e-3, upper].
std::vector<double> error_grid(double upper, std::size_t levels);

/// Transition probability T_qr (1 - nu^(K^2 N_F)) ((e_l - delta_qr) / e_i)^(K^2 N_F log_beta nu).
/// Targets with e_l <= delta_qr get probability 0. The weights into each next
/// channel state r are normalized to total T_qr, so every row sums to one and
/// the channel marginal is left untouched by the action.
MdpKernel mdp_kernel(const std::vector<double>& grid, const Mat& joint_tpm, const Mat& ne_jumps,
                     const std::vector<double>& beta_actions, double nu, std::size_t links,
                     std::size_t subcarriers);

struct RviResult {
  double average_cost = 0.0;  // theta
  Vec value;                  // relative values, V(reference) = 0
  std::vector<std::size_t> policy;
  std::size_t iterations = 0;
};

/// Relative value iteration for the average-cost Bellman equation
/// V(x) + theta = min_a { c(x) + sum_y P_a(x, y) V(y) }.
/// `cost` holds c per error level (the same for every channel state).
/// Throws NumericalError when it has not converged after `max_iter` sweeps.
RviResult relative_value_iteration(const MdpKernel& kernel, const std::vector<double>& cost,
                                   double tol = 1e-9, std::size_t max_iter = 100000);

/// Long-run average cost of a stationary policy (solves pi P = pi exactly).
double evaluate_policy(const MdpKernel& kernel, const std::vector<double>& cost,
                       const std::vector<std::size_t>& policy);

/// Policy that takes the smallest beta in every state.
std::vector<std::size_t> greedy_min_beta_policy(const MdpKernel& kernel);

}  // namespace nashtrack
