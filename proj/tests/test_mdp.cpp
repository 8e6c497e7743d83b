#include <catch_amalgamated.hpp>

#include <cmath>

#include "nashtrack/mdp.hpp"
#include "nashtrack/verify.hpp"

using namespace nashtrack;
using Catch::Approx;

namespace {

Mat two_state_tpm(double nu) {
  Mat t(2, 2);
  t << nu, 1.0 - nu, 1.0 - nu, nu;
  return t;
}

Mat two_state_jumps(double jump) {
  Mat d(2, 2);
  d << 0.0, jump, jump, 0.0;
  return d;
}

// Average cost by power iteration on the lazy chain: independent of the solver's QR.
double power_iteration_cost(const MdpKernel& kernel, const std::vector<double>& cost,
                            const std::vector<std::size_t>& policy) {
  const auto n = static_cast<Eigen::Index>(kernel.state_count());
  Mat p(n, n);
  for (Eigen::Index x = 0; x < n; ++x) p.row(x) = kernel.transition[policy[x]].row(x);
  Vec pi = Vec::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 200000; ++it) pi = 0.5 * (pi + p.transpose() * pi);
  double theta = 0.0;
  for (std::size_t q = 0; q < kernel.channel_states; ++q)
    for (std::size_t l = 0; l < kernel.levels; ++l) theta += pi(kernel.flat(l, q)) * cost[l];
  return theta;
}

}  // namespace

TEST_CASE("trivial kernel", "[mdp]") {
  const MdpKernel k = mdp_kernel({1.0}, Mat::Ones(1, 1), Mat::Zero(1, 1), {0.5}, 0.9, 1, 1);
  REQUIRE(k.transition.size() == 1);
  CHECK(k.transition[0].rows() == 1);
  CHECK(k.transition[0](0, 0) == Approx(1.0));
  const RviResult r = relative_value_iteration(k, {0.7});
  CHECK(r.average_cost == Approx(0.7));
  CHECK(r.value.norm() == 0.0);
}

TEST_CASE("kernel rows are stochastic and keep the channel marginal", "[mdp]") {
  const Mat t = two_state_tpm(0.8);
  const MdpKernel k = mdp_kernel(error_grid(0.5, 8), t, two_state_jumps(0.1), {0.2, 0.5, 0.8}, 0.8, 1, 1);
  for (const Mat& p : k.transition) {
    CHECK((p.array() >= 0.0).all());
    for (Eigen::Index x = 0; x < p.rows(); ++x) CHECK(std::abs(p.row(x).sum() - 1.0) <= 1e-12);
    for (std::size_t q = 0; q < 2; ++q)
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t i = 0; i < 8; ++i) {
          double block = 0.0;
          for (std::size_t l = 0; l < 8; ++l) block += p(k.flat(i, q), k.flat(l, r));
          CHECK(block == Approx(t(q, r)).epsilon(1e-12));
        }
  }
}

TEST_CASE("larger beta shifts mass toward larger errors", "[mdp]") {
  const MdpKernel k = mdp_kernel(error_grid(1.0, 6), two_state_tpm(0.9), two_state_jumps(0.05),
                                 {0.2, 0.7}, 0.9, 1, 1);
  for (Eigen::Index x = 0; x < 12; ++x)
    for (std::size_t r = 0; r < 2; ++r) {
      double good = 0.0, bad = 0.0;
      for (std::size_t l = 0; l < 6; ++l) {
        good += k.transition[0](x, k.flat(l, r));
        bad += k.transition[1](x, k.flat(l, r));
        CHECK(good >= bad - 1e-12);  // CDF of the better action dominates
      }
    }
}

TEST_CASE("policy evaluation agrees with power iteration", "[mdp]") {
  const MdpKernel k = mdp_kernel(error_grid(0.5, 4), two_state_tpm(0.8), two_state_jumps(0.1),
                                 {0.3, 0.6}, 0.8, 1, 1);
  const std::vector<std::size_t> policy{0, 1, 1, 0, 1, 0, 0, 1};
  CHECK(evaluate_policy(k, k.grid, policy) ==
        Approx(power_iteration_cost(k, k.grid, policy)).epsilon(1e-10));
}

TEST_CASE("relative value iteration matches its policy", "[mdp]") {
  const MdpKernel k = mdp_kernel(error_grid(0.5, 8), two_state_tpm(0.8), two_state_jumps(0.1),
                                 {0.2, 0.4, 0.6, 0.8}, 0.8, 1, 1);
  const RviResult r = relative_value_iteration(k, k.grid, 1e-10);
  CHECK(evaluate_policy(k, k.grid, r.policy) == Approx(r.average_cost).epsilon(1e-8));
  const auto greedy = greedy_min_beta_policy(k);
  for (std::size_t a : greedy) CHECK(a == 0);
  CHECK(evaluate_policy(k, k.grid, greedy) == Approx(r.average_cost).epsilon(1e-8));
  // The Bellman equation holds with the returned relative values.
  const auto n = static_cast<Eigen::Index>(k.state_count());
  for (Eigen::Index x = 0; x < n; ++x) {
    double best = INFINITY;
    for (const Mat& p : k.transition) best = std::min(best, p.row(x).dot(r.value));
    CHECK(r.value(x) + r.average_cost == Approx(k.grid[x % 8] + best).margin(1e-7));
  }
}

TEST_CASE("greedy is best among all policies of a small instance", "[mdp]") {
  const MdpKernel k = mdp_kernel(error_grid(0.5, 2), two_state_tpm(0.8), two_state_jumps(0.1),
                                 {0.3, 0.8}, 0.8, 1, 1);
  const double greedy = evaluate_policy(k, k.grid, greedy_min_beta_policy(k));
  double best = INFINITY;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<std::size_t> policy(4);
    for (std::size_t x = 0; x < 4; ++x) policy[x] = (mask >> x) & 1u;
    const double theta = evaluate_policy(k, k.grid, policy);
    CHECK(greedy <= theta + 1e-9);
    best = std::min(best, theta);
  }
  CHECK(best_enumerated_policy_cost(k, k.grid) == Approx(best).epsilon(1e-14));
}

TEST_CASE("kernel input validation", "[mdp]") {
  CHECK_THROWS_AS(mdp_kernel({0.2, 0.1}, Mat::Ones(1, 1), Mat::Zero(1, 1), {0.5}, 0.9, 1, 1), ConfigError);
  CHECK_THROWS_AS(mdp_kernel({0.1}, Mat::Ones(1, 1), Mat::Zero(1, 1), {1.5}, 0.9, 1, 1), ConfigError);
  CHECK_THROWS_AS(error_grid(0.0, 4), ConfigError);
  const auto grid = error_grid(2.0, 5);
  CHECK(grid.front() == Approx(2e-3));
  CHECK(grid.back() == 2.0);
}
