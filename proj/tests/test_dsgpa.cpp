#include <catch_amalgamated.hpp>

#include <cmath>

#include "nashtrack/dsgpa.hpp"
#include "nashtrack/game.hpp"

using namespace nashtrack;
using Catch::Approx;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

GainTensor desk_gains(double cross) {
  GainTensor g(2, 2);
  g(0, 0, 0) = 1.0;
  g(0, 0, 1) = 0.6;
  g(1, 1, 0) = 0.8;
  g(1, 1, 1) = 1.3;
  g(0, 1, 0) = g(1, 0, 1) = cross;
  g(0, 1, 1) = g(1, 0, 0) = 0.5 * cross;
  return g;
}

}  // namespace

TEST_CASE("nonnegative projection", "[dsgpa]") {
  CHECK(project_nonneg(vec({-1, 0.5})) == vec({0, 0.5}));
  CHECK(project_nonneg(vec({1, 2})) == vec({1, 2}));
  CHECK(project_nonneg(vec({-3, -2})) == vec({0, 0}));
}

TEST_CASE("dual updates", "[dsgpa]") {
  CHECK(lambda_update(0.5, 0.1, 1.0, vec({0.3, 0.3})) == Approx(0.46));
  CHECK(lambda_update(0.5, 0.1, 1.0, vec({0.5, 0.5})) == 0.5);
  CHECK(lambda_update(0.01, 0.1, 1.0, vec({0, 0})) == 0.0);

  // The line search lands on the inverse water level of the local problem.
  LocalObservation obs{vec({4, 1}), vec({0, 0}), vec({1, 1})};
  CHECK(lambda_exact_line_search(obs, 1.0) == Approx(1.0 / 1.125));
}

TEST_CASE("primal update hand values", "[dsgpa]") {
  CHECK(power_update(vec({0.3, 0.7}), DiagMatrix(vec({2, 3})), vec({0, 0})) == vec({0.3, 0.7}));
  CHECK(power_update(vec({0.5}), DiagMatrix(vec({1})), vec({-1})) == vec({0}));
  CHECK(power_update(vec({1}), DiagMatrix(vec({2})), vec({0.5}))(0) == Approx(1.25));
  CHECK_THROWS_AS(power_update(vec({1}), DiagMatrix(vec({0})), vec({0.5})), NumericalError);
  CHECK_THROWS_AS(power_update(vec({1}), Mat::Zero(1, 1), vec({0.5})), NumericalError);
}

TEST_CASE("scaled projection solves the D-norm problem", "[dsgpa]") {
  RandomStream rng(8, 0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + t % 4;
    Mat a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform() - 0.5;
    const Mat d = a * a.transpose() + 0.1 * Mat::Identity(n, n);
    Vec y(n);
    for (auto& v : y) v = 2.0 * rng.uniform() - 1.0;
    const Vec x = scaled_projection(y, d);
    // KKT: x >= 0, gradient D(x - y) >= 0, complementary slackness.
    const Vec grad = d * (x - y);
    for (Eigen::Index i = 0; i < n; ++i) {
      REQUIRE(x(i) >= 0.0);
      CHECK(grad(i) >= -1e-9);
      CHECK(std::abs(x(i) * grad(i)) <= 1e-9);
    }
  }
  // Diagonal D reduces to clipping.
  CHECK(scaled_projection(vec({-1, 2}), Mat(DiagMatrix(vec({3, 5})))) == vec({0, 2}));
}

TEST_CASE("optimal scaling hand values", "[dsgpa]") {
  GainTensor g(1, 1);
  g(0, 0, 0) = 1.0;
  const PowerMatrix p = PowerMatrix::Constant(1, 1, 1.0);
  CHECK(optimal_scaling(g, p, {1.0}, 0).diagonal()(0) == Approx(0.25));
  CHECK(optimal_scaling(g, PowerMatrix::Zero(1, 1), {2.0}, 0).diagonal()(0) == Approx(0.25));
}

TEST_CASE("optimal scaling attains the modulus lower bound", "[dsgpa]") {
  RandomStream rng(9, 0);
  for (int t = 0; t < 100; ++t) {
    GainTensor g(3, 4);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t s = 0; s < 4; ++s) g(k, j, s) = k == j ? 0.5 + rng.uniform() : 0.2 * rng.uniform();
    PowerMatrix p(3, 4);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform();
    for (std::size_t k = 0; k < 3; ++k) {
      const double beta = contraction_modulus(g, p, {0.5}, k, optimal_scaling(g, p, {0.5}, k));
      CHECK(std::abs(beta - modulus_lower_bound(g, k)) <= 1e-12);
    }
  }
  // No interference: the step is exact Newton.
  GainTensor lone(1, 3, 1.0);
  const PowerMatrix p = PowerMatrix::Constant(1, 3, 0.2);
  CHECK(contraction_modulus(lone, p, {1.0}, 0, optimal_scaling(lone, p, {1.0}, 0)) ==
        Approx(0.0).margin(1e-15));
}

TEST_CASE("baseline scalings", "[dsgpa]") {
  const GainTensor g = desk_gains(0.1);
  const PowerMatrix p = PowerMatrix::Constant(2, 2, 0.5);
  const ScalingSet con = make_scaling(ScalingPolicy::of(ScalingKind::ConGpa, 0.005), g, p, {1.0});
  REQUIRE(con.blocks.size() == 2);
  CHECK(con.blocks[0].diagonal() == Vec::Constant(2, 200.0));

  const ScalingSet gen = make_scaling(ScalingPolicy::of(ScalingKind::GenGpa), g, p, {1.0});
  REQUIRE(gen.is_full());
  CHECK(((*gen.full) - gen.full->transpose()).norm() == 0.0);
  CHECK(gen.min_eigenvalue() > 0.0);

  ScalingController dia(ScalingPolicy::of(ScalingKind::DiaGpa));
  const Vec first = dia.scaling(g, p, {1.0}).blocks[1].diagonal();
  const Vec later = dia.scaling(desk_gains(0.3), PowerMatrix::Constant(2, 2, 0.1), {1.0}).blocks[1].diagonal();
  CHECK(first == later);

  ScalingController adaptive(ScalingPolicy::of(ScalingKind::DsgpaOptimal));
  const Vec a = adaptive.scaling(g, p, {1.0}).blocks[0].diagonal();
  const Vec b = adaptive.scaling(desk_gains(0.3), p, {1.0}).blocks[0].diagonal();
  CHECK(a != b);
}

TEST_CASE("single link step is a Newton step", "[dsgpa]") {
  GainTensor g(1, 2);
  g(0, 0, 0) = 1.0;
  g(0, 0, 1) = 2.0;
  const PowerMatrix p = PowerMatrix::Constant(1, 2, 0.3);
  const LocalObservation obs = observe(g, p, {1.0}, 0);
  const Vec f = gradient(obs, 0.4);
  const Mat hess = Mat(hessian_block(g, p, {1.0}, 0, 0));
  const Vec newton = p.row(0).transpose() - hess.inverse() * f;
  CHECK((power_update(p.row(0).transpose(), optimal_scaling(obs), f) - newton).norm() < 1e-14);
}

TEST_CASE("static tracking converges to the equilibrium", "[dsgpa]") {
  for (ScalingKind kind : {ScalingKind::DsgpaOptimal, ScalingKind::GenGpa}) {
    const GainTensor g = desk_gains(0.2);
    const Vec p_max = Vec::Ones(2);
    const PowerMatrix ne = solve_ne(g, {0.5}, p_max).p_star;
    Tracker tracker(ScalingPolicy::of(kind), DualStep{}, {0.5}, p_max, 2);
    double error = block_max_norm(tracker.state().p - ne);
    for (int n = 0; n < 500 && error > 1e-12; ++n) error = block_max_norm(tracker.step(g).p_after - ne);
    CHECK(error < 1e-8);
  }
}

TEST_CASE("decoupled static tracking reaches water-filling", "[dsgpa]") {
  GainTensor g(2, 3);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < 3; ++s) g(k, k, s) = 0.4 + 0.5 * s + 0.3 * k;
  const Vec p_max = vec({1.0, 0.5});
  for (DualStep dual : {DualStep{}, DualStep{DualStepKind::Fixed, 0.05}}) {
    Tracker tracker(ScalingPolicy::of(ScalingKind::DsgpaOptimal), dual, {0.3}, p_max, 3);
    SlotUpdate u;
    for (int n = 0; n < 500; ++n) u = tracker.step(g);
    for (std::size_t k = 0; k < 2; ++k) {
      const Vec wf = waterfill(g.direct(k), Vec::Constant(3, 0.3), p_max(k)).power;
      CHECK((u.p_after.row(k).transpose() - wf).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("tracking runs are deterministic", "[dsgpa]") {
  const FsmcSpec spec = FsmcSpec::from_geometry(2, 2, 0.05, 2, Geometry{});
  TrackingRun run{ScalingPolicy::of(ScalingKind::DsgpaOptimal), DualStep{}, {10.0}, Vec::Ones(2), 300, 4, 1};
  const TrackingTrace a = run_tracking(spec, run);
  const TrackingTrace b = run_tracking(spec, run);
  REQUIRE(a.slots.size() == 300);
  for (std::size_t n = 0; n < 300; ++n) {
    CHECK(a.slots[n].p_after == b.slots[n].p_after);
    CHECK(a.slots[n].state == b.slots[n].state);
    if (n > 0) CHECK(a.slots[n].p_before == a.slots[n - 1].p_after);
  }
}

TEST_CASE("scaling kind names round trip", "[dsgpa]") {
  for (ScalingKind k : {ScalingKind::DsgpaOptimal, ScalingKind::GenGpa, ScalingKind::DiaGpa, ScalingKind::ConGpa})
    CHECK(scaling_kind_from_string(to_string(k)) == k);
  for (DualStepKind k : {DualStepKind::Fixed, DualStepKind::Diminishing, DualStepKind::ExactLineSearch})
    CHECK(dual_step_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scaling_kind_from_string("newton"), ConfigError);
}
