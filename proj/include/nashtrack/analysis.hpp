#pragma once

#include <functional>
#include <vector>

#include "nashtrack/contraction.hpp"
#include "nashtrack/dsgpa.hpp"

namespace nashtrack {

/// Looks up the equilibrium of a channel state; throws when it is unknown.
using NeLookup = std::function<const PowerMatrix&(const JointChannelState&)>;

struct TrackingErrors {
  double eae = 0.0;
  double mse = 0.0;
  std::size_t samples = 0;
};

/// Time averages of ||p(n+1) - pbar^(q(n))||_block and its square over the
/// slots after `burn_in`. p(n+1) is the iterate produced while state q(n) was
/// active.
TrackingErrors tracking_errors(const TrackingTrace& trace, const NeLookup& ne,
                               std::size_t burn_in);

/// Fraction of post-burn-in slots whose iterate lies farther than delta from
/// every equilibrium in `equilibria`.
double region_stats(const TrackingTrace& trace, const std::vector<PowerMatrix>& equilibria,
                    double delta, std::size_t burn_in);

/// Distance from p to the nearest equilibrium in block-max norm.
double distance_to_nearest(const PowerMatrix& p, const std::vector<PowerMatrix>& equilibria);

struct ErrorBounds {
  double eae_bound = 0.0;
  double mse_bound = 0.0;
  double p_region_bound = 0.0;
};

ErrorBounds theoretical_bounds(double beta, double delta, double nu, std::size_t links,
                               std::size_t subcarriers);
ErrorBounds theoretical_bounds_for_sojourn(double beta, double delta, double mean_sojourn);

struct StageRecord {
  std::size_t m = 0;
  std::size_t first_slot = 0;
  JointChannelState state;
  std::size_t sojourn = 1;    // N_m
  double phi = 0.0;           // worst per-link contraction modulus over the stage
  double delta_next = 0.0;    // NE jump to the next stage
  double initial_error = 0.0; // ||p entering the stage - pbar^(m)||_block
};

/// Cut a trace into stages and fill in phi, jumps, and stage-initial errors.
/// The final (possibly truncated) stage gets delta_next = 0.
std::vector<StageRecord> stage_records(const TrackingTrace& trace, const NeLookup& ne);

/// e~(m+1) = e~(m) phi_m^{N_m} + delta_{m,m+1}, starting from e~(1) = e1.
std::vector<double> dominated_error_process(const std::vector<StageRecord>& stages, double e1);

/// Slots to discard before steady-state averaging: max(10 Nbar, 10 / (1 - beta)).
std::size_t default_burn_in(double mean_sojourn, double beta);

}  // namespace nashtrack
