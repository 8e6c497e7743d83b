#include <catch_amalgamated.hpp>

#include <cmath>

#include "nashtrack/analysis.hpp"
#include "nashtrack/game.hpp"

using namespace nashtrack;
using Catch::Approx;

TEST_CASE("error bounds hand values", "[analysis]") {
  const ErrorBounds b = theoretical_bounds_for_sojourn(0.5, 1.0, 5.0);
  CHECK(b.eae_bound == Approx(0.2));
  CHECK(b.mse_bound == Approx(0.875 / 9.375));
  CHECK(b.p_region_bound == Approx(0.2));
  CHECK(theoretical_bounds_for_sojourn(0.5, 1.0, 1.0).p_region_bound == 1.0);

  const ErrorBounds tiny = theoretical_bounds_for_sojourn(1e-12, 1.0, 5.0);
  CHECK(tiny.eae_bound < 1e-11);
  CHECK(tiny.mse_bound < 1e-11);
  CHECK(tiny.p_region_bound < 1e-11);

  // nu = 0.8 with one chain is a mean sojourn of 5.
  const ErrorBounds via_nu = theoretical_bounds(0.5, 1.0, 0.8, 1, 1);
  CHECK(via_nu.eae_bound == Approx(0.2));
  CHECK_THROWS_AS(theoretical_bounds_for_sojourn(1.0, 1.0, 5.0), NumericalError);
}

TEST_CASE("dominated process recursion", "[analysis]") {
  std::vector<StageRecord> stages(3);
  stages[0].phi = 0.5;
  stages[0].sojourn = 2;
  stages[0].delta_next = 0.1;
  stages[1].phi = 0.5;
  stages[1].sojourn = 1;
  stages[1].delta_next = 0.0;
  const auto e = dominated_error_process(stages, 0.5);
  REQUIRE(e.size() == 3);
  CHECK(e[0] == 0.5);
  CHECK(e[1] == Approx(0.225));
  CHECK(e[2] == Approx(0.1125));

  std::vector<StageRecord> quiet(10);
  for (auto& s : quiet) {
    s.phi = 0.7;
    s.sojourn = 3;
  }
  const auto d = dominated_error_process(quiet, 1.0);
  for (std::size_t m = 1; m < d.size(); ++m) CHECK(d[m] < d[m - 1]);
}

TEST_CASE("burn-in rule", "[analysis]") {
  CHECK(default_burn_in(5.0, 0.5) == 50);
  CHECK(default_burn_in(1.0, 0.75) == 40);
}

TEST_CASE("static tracking errors vanish", "[analysis]") {
  const FsmcSpec spec(2, 2, 0.1, 1, {1.0, 1.2, 0.05, 0.02, 0.03, 0.04, 0.9, 1.1});
  const JointChannelState state{std::vector<std::uint8_t>(8, 0)};
  const PowerMatrix ne = solve_ne(gains_of(spec, state), {0.5}, Vec::Ones(2)).p_star;
  TrackingRun run{ScalingPolicy::of(ScalingKind::DsgpaOptimal), DualStep{}, {0.5}, Vec::Ones(2), 400, 1, 0};
  const TrackingTrace trace = run_tracking(spec, run);
  NeLookup lookup = [&](const JointChannelState&) -> const PowerMatrix& { return ne; };
  const TrackingErrors err = tracking_errors(trace, lookup, 200);
  CHECK(err.samples == 200);
  CHECK(err.eae <= 1e-8);
  CHECK(err.mse <= 1e-8);
  CHECK(region_stats(trace, {ne}, 0.01, 200) == 0.0);
  CHECK_THROWS(tracking_errors(trace, lookup, 400));

  const auto stages = stage_records(trace, lookup);
  REQUIRE(stages.size() == 1);
  CHECK(stages[0].sojourn == 400);
  CHECK(stages[0].delta_next == 0.0);
}

TEST_CASE("stage records on a fading trace", "[analysis]") {
  const FsmcSpec spec = FsmcSpec::from_geometry(2, 2, 0.02, 2, Geometry{});
  const JointEnumeration en = enumerate_joint_states(spec);
  const NeTable table = ne_distance_table(en.states, spec, {10.0}, Vec::Ones(2));
  NeLookup lookup = [&](const JointChannelState& s) -> const PowerMatrix& {
    return table.solutions[joint_state_rank(spec, s)].p_star;
  };
  TrackingRun run{ScalingPolicy::of(ScalingKind::DsgpaOptimal), DualStep{}, {10.0}, Vec::Ones(2), 3000, 2, 0};
  const TrackingTrace trace = run_tracking(spec, run);
  const auto stages = stage_records(trace, lookup);
  std::size_t total = 0;
  for (std::size_t m = 0; m < stages.size(); ++m) {
    total += stages[m].sojourn;
    CHECK(stages[m].phi >= 0.0);
    CHECK(stages[m].phi < 1.0);
    if (m + 1 < stages.size()) {
      CHECK(stages[m + 1].first_slot == stages[m].first_slot + stages[m].sojourn);
      const double jump = block_max_norm(lookup(stages[m].state) - lookup(stages[m + 1].state));
      CHECK(stages[m].delta_next == Approx(jump));
    }
    const auto& entry = trace.slots[stages[m].first_slot];
    CHECK(stages[m].initial_error == Approx(block_max_norm(entry.p_before - lookup(entry.state))));
  }
  CHECK(total == 3000);

  const TrackingErrors err = tracking_errors(trace, lookup, 500);
  CHECK(err.mse >= err.eae * err.eae - 1e-12);

  std::vector<PowerMatrix> all;
  for (const auto& s : table.solutions) all.push_back(s.p_star);
  const double region = region_stats(trace, all, table.delta, 500);
  CHECK(region >= 0.0);
  CHECK(region <= 1.0);
  CHECK(distance_to_nearest(all[3], all) == 0.0);
}
