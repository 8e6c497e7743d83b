#include <catch_amalgamated.hpp>

#include <cmath>

#include "nashtrack/channel.hpp"
#include "nashtrack/network.hpp"

using namespace nashtrack;
using Catch::Approx;

namespace {

// Composite Simpson rule, used as an independent oracle for the cell means.
template <typename F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double quadrature_cell_mean(double lo, double hi, double mean) {
  const double top = std::isinf(hi) ? lo + 60.0 * mean : hi;
  const auto pdf = [mean](double x) { return std::exp(-x / mean) / mean; };
  return simpson([&](double x) { return x * pdf(x); }, lo, top) / simpson(pdf, lo, top);
}

}  // namespace

TEST_CASE("single-level chain is the mean gain", "[channel]") {
  const ScalarChain c = build_scalar_chain(1, 0.1, 1.0);
  REQUIRE(c.levels.size() == 1);
  CHECK(c.levels[0] == Approx(1.0));
  CHECK(c.tpm(0, 0) == 1.0);
}

TEST_CASE("two-level chain merges the ring transitions", "[channel]") {
  const ScalarChain c = build_scalar_chain(2, 0.1, 1.0);
  CHECK(c.tpm(0, 0) == Approx(0.8));
  CHECK(c.tpm(0, 1) == Approx(0.2));
  CHECK(c.tpm(1, 0) == Approx(0.2));
  CHECK(c.tpm(1, 1) == Approx(0.8));
}

TEST_CASE("levels are conditional means of the exponential cells", "[channel]") {
  // Halves of Exp(1) split at the median ln 2.
  const ScalarChain two = build_scalar_chain(2, 0.1, 1.0);
  CHECK(two.levels[0] == Approx(1.0 - std::log(2.0)).epsilon(1e-9));
  CHECK(two.levels[1] == Approx(1.0 + std::log(2.0)).epsilon(1e-9));
  CHECK(two.levels[0] == Approx(quadrature_cell_mean(0.0, std::log(2.0), 1.0)).epsilon(1e-8));

  for (double mean : {1.0, 0.0078125, 3.0}) {
    const ScalarChain c = build_scalar_chain(4, 0.05, mean);
    double average = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double lo = -mean * std::log(1.0 - i / 4.0);
      const double hi = i == 3 ? INFINITY : -mean * std::log(1.0 - (i + 1) / 4.0);
      CHECK(c.levels[i] == Approx(quadrature_cell_mean(lo, hi, mean)).epsilon(1e-7));
      average += c.levels[i] / 4.0;
    }
    CHECK(average == Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("ring transition matrix rows", "[channel]") {
  const ScalarChain c = build_scalar_chain(4, 0.1, 1.0);
  CHECK(c.tpm(0, 0) == Approx(0.8));
  CHECK(c.tpm(0, 1) == Approx(0.1));
  CHECK(c.tpm(0, 2) == 0.0);
  CHECK(c.tpm(0, 3) == Approx(0.1));
  for (Eigen::Index r = 0; r < 4; ++r) CHECK(c.tpm.row(r).sum() == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("step_chain frequencies follow the tpm row", "[channel]") {
  const ScalarChain c = build_scalar_chain(4, 0.1, 1.0);
  for (std::size_t start : {0u, 1u}) {
    RandomStream rng(99, start);
    std::vector<double> freq(4, 0.0);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) freq[step_chain(c, start, rng)] += 1.0 / n;
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(freq[j] - c.tpm(start, j)) < 0.005);
  }
  const ScalarChain single = build_scalar_chain(1, 0.1, 1.0);
  RandomStream rng(1, 0);
  CHECK(step_chain(single, 0, rng) == 0);
}

TEST_CASE("sojourn time formulas", "[channel]") {
  CHECK(average_sojourn_time(0.8, 1, 1) == Approx(5.0));
  CHECK(average_sojourn_time(0.8, 1, 2) == Approx(1.0 / 0.36));
  CHECK(average_sojourn_time(1.0 - 1e-9, 1, 1) == Approx(1e9).epsilon(1e-6));
  CHECK(sojourn_pmf(0.8, 1, 1, 1) == Approx(0.2));
  CHECK(sojourn_pmf(0.8, 1, 1, 2) == Approx(0.16));
  double total = 0.0;
  for (std::size_t l = 1; l < 400; ++l) total += sojourn_pmf(0.8, 1, 1, l);
  CHECK(total == Approx(1.0).epsilon(1e-12));
  for (double nbar : {5.0, 20.0, 80.0}) {
    const double eps = epsilon_for_sojourn(nbar, 2, 2);
    CHECK(average_sojourn_time(1.0 - 2.0 * eps, 2, 2) == Approx(nbar).epsilon(1e-10));
  }
}

TEST_CASE("sampled stage lengths have the geometric mean", "[channel]") {
  SECTION("one chain") {
    const FsmcSpec spec(1, 1, 0.1, 4, {1.0});
    const auto lengths = sample_trace(spec, 100000, 5).stage_lengths();
    double mean = 0.0;
    for (auto l : lengths) mean += static_cast<double>(l) / lengths.size();
    CHECK(std::abs(mean - 5.0) < 0.1);
  }
  SECTION("two chains") {
    const FsmcSpec spec(1, 2, 0.1, 4, {1.0, 1.0});
    const auto lengths = sample_trace(spec, 100000, 5).stage_lengths();
    double mean = 0.0;
    for (auto l : lengths) mean += static_cast<double>(l) / lengths.size();
    CHECK(std::abs(mean - 1.0 / 0.36) < 0.05);
  }
  SECTION("static channel is one stage") {
    const FsmcSpec spec(2, 2, 0.1, 1, std::vector<double>(8, 1.0));
    const ChannelTrace trace = sample_trace(spec, 500, 5);
    CHECK(trace.stage_boundaries.empty());
    CHECK(trace.stage_lengths(false) == std::vector<std::size_t>{500});
  }
}

TEST_CASE("sample paths depend only on seed and trial", "[channel]") {
  const FsmcSpec spec = FsmcSpec::from_geometry(2, 2, 0.05, 2, Geometry{});
  const ChannelTrace a = sample_trace(spec, 2000, 11, 3);
  const ChannelTrace b = sample_trace(spec, 2000, 11, 3);
  const ChannelTrace c = sample_trace(spec, 2000, 11, 4);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
}

TEST_CASE("joint enumeration is the Kronecker product", "[channel]") {
  CHECK(enumerate_joint_states(FsmcSpec(1, 1, 0.1, 3, {1.0})).states.size() == 3);

  const FsmcSpec spec(1, 2, 0.1, 2, {1.0, 2.0});
  const JointEnumeration en = enumerate_joint_states(spec);
  REQUIRE(en.states.size() == 4);
  const Mat& t = spec.chain(0).tpm;
  const Mat& u = spec.chain(1).tpm;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) CHECK(en.tpm(2 * a + b, 2 * c + d) == Approx(t(a, c) * u(b, d)));
  for (Eigen::Index r = 0; r < 4; ++r) CHECK(std::abs(en.tpm.row(r).sum() - 1.0) <= 1e-12);
  for (std::size_t i = 0; i < en.states.size(); ++i) CHECK(joint_state_rank(spec, en.states[i]) == i);
}

TEST_CASE("enumeration refuses oversized state spaces", "[channel]") {
  const FsmcSpec spec = FsmcSpec::from_geometry(2, 2, 0.1, 4, Geometry{});
  try {
    enumerate_joint_states(spec, 4096);
    FAIL("expected StateSpaceTooLarge");
  } catch (const StateSpaceTooLarge& e) {
    CHECK(e.cardinality() == 65536.0);
  }
}

TEST_CASE("geometry sets the cross-to-direct mean ratio", "[channel]") {
  CHECK(Geometry{}.cross_to_direct_ratio() == Approx(1.0 / 128.0));
  const FsmcSpec spec = FsmcSpec::from_geometry(2, 1, 0.1, 1, Geometry{});
  const GainTensor g = gains_of(spec, JointChannelState{{0, 0, 0, 0}});
  CHECK(g(0, 0, 0) == Approx(1.0));
  CHECK(g(0, 1, 0) == Approx(1.0 / 128.0));
}

TEST_CASE("spec survives a JSON round trip", "[channel]") {
  const FsmcSpec spec = FsmcSpec::from_geometry(2, 3, 0.02, 2, Geometry{});
  const FsmcSpec back = FsmcSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK(back.with_epsilon(0.1).epsilon() == 0.1);
}
