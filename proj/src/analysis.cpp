#include "nashtrack/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nashtrack {

TrackingErrors tracking_errors(const TrackingTrace& trace, const NeLookup& ne,
                               std::size_t burn_in) {
  require(trace.slots.size() > burn_in, "trace is not longer than the burn-in");
  TrackingErrors out;
  for (const auto& entry : trace.slots) {
    if (entry.slot < burn_in) continue;
    const double e = block_max_norm(entry.p_after - ne(entry.state));
    out.eae += e;
    out.mse += e * e;
    ++out.samples;
  }
  out.eae /= static_cast<double>(out.samples);
  out.mse /= static_cast<double>(out.samples);
  return out;
}

double distance_to_nearest(const PowerMatrix& p, const std::vector<PowerMatrix>& equilibria) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& eq : equilibria) best = std::min(best, block_max_norm(p - eq));
  return best;
}

double region_stats(const TrackingTrace& trace, const std::vector<PowerMatrix>& equilibria,
                    double delta, std::size_t burn_in) {
  require(!equilibria.empty(), "region_stats needs at least one equilibrium");
  std::size_t outside = 0;
  std::size_t total = 0;
  for (const auto& entry : trace.slots) {
    if (entry.slot < burn_in) continue;
    ++total;
    if (distance_to_nearest(entry.p_after, equilibria) > delta) ++outside;
  }
  return total == 0 ? 0.0 : static_cast<double>(outside) / static_cast<double>(total);
}

ErrorBounds theoretical_bounds_for_sojourn(double beta, double delta, double mean_sojourn) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw NumericalError("theoretical_bounds: contraction modulus must lie in [0, 1)");
  require(delta >= 0.0, "delta must be nonnegative");
  require(mean_sojourn >= 1.0, "average sojourn time must be at least one slot");
  const double nbar = mean_sojourn;
  ErrorBounds b;
  b.eae_bound = delta * beta / ((1.0 - beta) * nbar);
  b.mse_bound = delta * delta * beta * beta * (2.0 * beta + (1.0 - beta) * nbar) /
                ((1.0 - beta * beta) * (1.0 - beta) * nbar * nbar);
  b.p_region_bound = std::min(1.0, beta / ((1.0 - beta) * nbar));
  return b;
}

ErrorBounds theoretical_bounds(double beta, double delta, double nu, std::size_t links,
                               std::size_t subcarriers) {
  return theoretical_bounds_for_sojourn(beta, delta, average_sojourn_time(nu, links, subcarriers));
}

std::vector<StageRecord> stage_records(const TrackingTrace& trace, const NeLookup& ne) {
  std::vector<StageRecord> stages;
  std::vector<PowerMatrix> equilibria;
  for (std::size_t i = 0; i < trace.slots.size(); ++i) {
    const auto& entry = trace.slots[i];
    if (i == 0 || entry.stage != trace.slots[i - 1].stage) {
      StageRecord rec;
      rec.m = stages.size() + 1;
      rec.first_slot = entry.slot;
      rec.state = entry.state;
      rec.sojourn = 0;
      equilibria.push_back(ne(entry.state));
      rec.initial_error = block_max_norm(entry.p_before - equilibria.back());
      stages.push_back(std::move(rec));
    }
    auto& rec = stages.back();
    ++rec.sojourn;
    rec.phi = std::max(rec.phi, entry.beta.maxCoeff());
  }
  for (std::size_t m = 0; m + 1 < stages.size(); ++m)
    stages[m].delta_next = block_max_norm(equilibria[m] - equilibria[m + 1]);
  return stages;
}

std::vector<double> dominated_error_process(const std::vector<StageRecord>& stages, double e1) {
  require(!stages.empty(), "need at least one stage");
  std::vector<double> e{e1};
  e.reserve(stages.size());
  for (std::size_t m = 0; m + 1 < stages.size(); ++m) {
    const auto& s = stages[m];
    e.push_back(e.back() * std::pow(s.phi, static_cast<double>(s.sojourn)) + s.delta_next);
  }
  return e;
}

std::size_t default_burn_in(double mean_sojourn, double beta) {
  const double contraction = beta < 1.0 ? 10.0 / (1.0 - beta) : 0.0;
  return static_cast<std::size_t>(std::ceil(std::max(10.0 * mean_sojourn, contraction)));
}

}  // namespace nashtrack
