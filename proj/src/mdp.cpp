#include "nashtrack/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace nashtrack {

std::vector<double> error_grid(double upper, std::size_t levels) {
  require(upper > 0.0, "error grid needs a positive upper end");
  require(levels >= 1, "error grid needs at least one level");
  if (levels == 1) return {upper};
  std::vector<double> grid(levels);
  const double lo = std::log(upper * 1e-3);
  const double hi = std::log(upper);
  for (std::size_t l = 0; l < levels; ++l)
    grid[l] = std::exp(lo + (hi - lo) * static_cast<double>(l) / static_cast<double>(levels - 1));
  grid.back() = upper;
  return grid;
}

MdpKernel mdp_kernel(const std::vector<double>& grid, const Mat& joint_tpm, const Mat& ne_jumps,
                     const std::vector<double>& beta_actions, double nu, std::size_t links,
                     std::size_t subcarriers) {
  const std::size_t levels = grid.size();
  const auto q_count = static_cast<std::size_t>(joint_tpm.rows());
  require(levels >= 1, "error grid is empty");
  for (std::size_t l = 0; l < levels; ++l) {
    require(grid[l] > 0.0, "error grid levels must be positive");
    if (l > 0) require(grid[l] > grid[l - 1], "error grid must be increasing");
  }
  require(joint_tpm.cols() == joint_tpm.rows() && q_count >= 1, "joint tpm must be square");
  require(ne_jumps.rows() == joint_tpm.rows() && ne_jumps.cols() == joint_tpm.cols(),
          "NE jump matrix must match the joint tpm");
  require(!beta_actions.empty(), "need at least one action");
  require(nu > 0.0 && nu < 1.0, "nu must lie in (0, 1)");

  MdpKernel kernel;
  kernel.levels = levels;
  kernel.channel_states = q_count;
  kernel.grid = grid;
  kernel.actions = beta_actions;
  const double dims = static_cast<double>(links * links * subcarriers);

  for (double beta : beta_actions) {
    require(beta > 0.0 && beta < 1.0, "actions must be contraction moduli in (0, 1)");
    const double exponent = dims * std::log(nu) / std::log(beta);
    Mat p = Mat::Zero(levels * q_count, levels * q_count);
    for (std::size_t q = 0; q < q_count; ++q)
      for (std::size_t r = 0; r < q_count; ++r) {
        const double t = joint_tpm(q, r);
        if (t == 0.0) continue;
        const double jump = ne_jumps(q, r);
        // The source level e_i only scales every weight by e_i^-exponent, so the
        // within-block shape is the same for all source levels.
        Vec w = Vec::Zero(levels);
        for (std::size_t l = 0; l < levels; ++l)
          if (grid[l] > jump) w(l) = std::pow(grid[l] - jump, exponent);
        double total = w.sum();
        if (!(total > 0.0) || !std::isfinite(total)) {
          w.setZero();
          std::size_t count = 0;
          for (std::size_t l = 0; l < levels; ++l)
            if (grid[l] > jump || l + 1 == levels) {
              w(l) = 1.0;
              ++count;
            }
          total = static_cast<double>(count);
        }
        w *= t / total;
        for (std::size_t i = 0; i < levels; ++i)
          for (std::size_t l = 0; l < levels; ++l) p(kernel.flat(i, q), kernel.flat(l, r)) = w(l);
      }
    kernel.transition.push_back(std::move(p));
  }
  return kernel;
}

namespace {

Vec state_costs(const MdpKernel& kernel, const std::vector<double>& cost) {
  require(cost.size() == kernel.levels, "need one cost per error level");
  Vec c(kernel.state_count());
  for (std::size_t q = 0; q < kernel.channel_states; ++q)
    for (std::size_t l = 0; l < kernel.levels; ++l) c(kernel.flat(l, q)) = cost[l];
  return c;
}

}  // namespace

RviResult relative_value_iteration(const MdpKernel& kernel, const std::vector<double>& cost,
                                   double tol, std::size_t max_iter) {
  const Vec c = state_costs(kernel, cost);
  const auto n = static_cast<Eigen::Index>(kernel.state_count());
  // Lazy self-loops (P -> (P + I) / 2) rule out periodicity without changing
  // the average cost; the relative values scale by 1/2 and are rescaled below.
  constexpr double kLazy = 0.5;
  RviResult out;
  Vec h = Vec::Zero(n);
  out.policy.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Vec best = Vec::Constant(n, std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < kernel.actions.size(); ++a) {
      const Vec q = c + kLazy * h + (1.0 - kLazy) * (kernel.transition[a] * h);
      for (Eigen::Index x = 0; x < n; ++x)
        if (q(x) < best(x) - 1e-15 * std::abs(best(x)) || !std::isfinite(best(x))) {
          best(x) = q(x);
          out.policy[static_cast<std::size_t>(x)] = a;
        }
    }
    const Vec diff = best - h;
    const double lo = diff.minCoeff();
    const double hi = diff.maxCoeff();
    h = best.array() - best(0);
    out.iterations = it;
    if (hi - lo <= tol) {
      out.average_cost = 0.5 * (lo + hi);
      out.value = (1.0 - kLazy) * h;
      return out;
    }
  }
  throw NumericalError("relative_value_iteration: no convergence within the iteration cap");
}

double evaluate_policy(const MdpKernel& kernel, const std::vector<double>& cost,
                       const std::vector<std::size_t>& policy) {
  const Vec c = state_costs(kernel, cost);
  const auto n = static_cast<Eigen::Index>(kernel.state_count());
  require(policy.size() == static_cast<std::size_t>(n), "policy needs one action per state");
  Mat p(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const std::size_t a = policy[static_cast<std::size_t>(x)];
    require(a < kernel.actions.size(), "policy action out of range");
    p.row(x) = kernel.transition[a].row(x);
  }
  // pi (P - I) = 0 with sum(pi) = 1, stacked as an overdetermined system.
  Mat a(n + 1, n);
  a.topRows(n) = (p - Mat::Identity(n, n)).transpose();
  a.row(n).setOnes();
  Vec b = Vec::Zero(n + 1);
  b(n) = 1.0;
  const Vec pi = a.colPivHouseholderQr().solve(b);
  return pi.dot(c);
}

std::vector<std::size_t> greedy_min_beta_policy(const MdpKernel& kernel) {
  require(!kernel.actions.empty(), "kernel has no actions");
  const auto it = std::min_element(kernel.actions.begin(), kernel.actions.end());
  return std::vector<std::size_t>(kernel.state_count(),
                                   static_cast<std::size_t>(it - kernel.actions.begin()));
}

}  // namespace nashtrack
