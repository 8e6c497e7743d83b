#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nashtrack/channel.hpp"
#include "nashtrack/contraction.hpp"
#include "nashtrack/network.hpp"

namespace nashtrack {

enum class ScalingKind { DsgpaOptimal, GenGpa, DiaGpa, ConGpa };

std::string to_string(ScalingKind kind);
ScalingKind scaling_kind_from_string(const std::string& name);

struct ScalingPolicy {
  ScalingKind kind = ScalingKind::DsgpaOptimal;
  double con_stepsize = 0.005;  // xi, ConGpa only
  bool freeze_at_init = false;

  /// Default freezing per kind: DiaGpa and ConGpa keep their slot-0 matrices.
  static ScalingPolicy of(ScalingKind kind, double con_stepsize = 0.005);
};

enum class DualStepKind {
  Fixed,            // lambda' = [lambda - alpha (P_max - 1'p)]^+
  Diminishing,      // same with alpha / sqrt(n)
  ExactLineSearch,  // minimize the local dual function along the update direction
};

std::string to_string(DualStepKind kind);
DualStepKind dual_step_from_string(const std::string& name);

struct DualStep {
  DualStepKind kind = DualStepKind::ExactLineSearch;
  double alpha = 0.05;
};

inline constexpr double kZeroGainScalingFloor = 1e-9;
inline constexpr double kGenGpaEigenFloor = 1e-6;

Vec project_nonneg(const Vec& v);

/// argmin_{x >= 0} (x - y)' D (x - y) for symmetric positive definite D.
Vec scaled_projection(const Vec& y, const Mat& scaling, double tol = 1e-15,
                      std::size_t max_sweeps = 100000);

double lambda_update(double lambda_k, double alpha, double p_max_k, const Vec& p_k);

/// The dual function of link k, d(lambda) = max_{p >= 0} L_k(p, lambda) with the
/// interference floor held at its observed value, is minimized by the inverse
/// water level of the single-user water-filling solution. A line search along
/// the (one-dimensional) dual subgradient direction lands exactly there.
double lambda_exact_line_search(const LocalObservation& obs, double p_max_k);

/// p' = [p + D^{-1} f]^+. Throws NumericalError when D is (numerically) singular.
/// With a non-diagonal D the projection is taken in the D-norm, which is what
/// keeps the equilibrium a fixed point; for diagonal D it is the plain [.]^+.
Vec power_update(const Vec& p_k, const Mat& scaling, const Vec& f_k);
Vec power_update(const Vec& p_k, const DiagMatrix& scaling, const Vec& f_k);

/// D_k = -d^2 C_k / dp_k^2 = diag(g_kk^2 / rho_k^2), floored at `floor`.
DiagMatrix optimal_scaling(const LocalObservation& obs, double floor = kZeroGainScalingFloor);
DiagMatrix optimal_scaling(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                           LinkIndex k, double floor = kZeroGainScalingFloor);

/// D = -(J + J')/2 over the stacked gradient map, eigenvalues floored.
Mat general_scaling(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                    double eigen_floor = kGenGpaEigenFloor);

/// Scaling matrices for one slot: per-link diagonal blocks, or a single full
/// K N_F x K N_F matrix for the centralized baseline.
struct ScalingSet {
  std::vector<DiagMatrix> blocks;
  std::optional<Mat> full;

  bool is_full() const { return full.has_value(); }
  /// Smallest eigenvalue over all blocks (or of the full matrix).
  double min_eigenvalue() const;
};

ScalingSet make_scaling(const ScalingPolicy& policy, const GainTensor& g, const PowerMatrix& p,
                        const NoiseModel& noise);

/// Applies a policy over time, holding the first slot's matrices when frozen.
class ScalingController {
 public:
  explicit ScalingController(ScalingPolicy policy) : policy_(policy) {}

  const ScalingSet& scaling(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise);
  const ScalingPolicy& policy() const { return policy_; }

 private:
  ScalingPolicy policy_;
  std::optional<ScalingSet> current_;
};

struct AlgorithmState {
  PowerMatrix p;
  Vec lambda;
  std::size_t slot = 0;  // number of updates applied so far
};

/// Deterministic starting point: uniform split of every budget and
/// lambda_k = 0.5 N_F / P_k,max.
AlgorithmState initial_state(const Vec& p_max, std::size_t subcarriers);

/// Per-link contraction moduli of the update with the given scaling at (g, p).
Vec contraction_moduli(const ScalingSet& scaling, const GainTensor& g, const PowerMatrix& p,
                       const NoiseModel& noise);

struct SlotUpdate {
  PowerMatrix p_before;  // power transmitted during the slot
  PowerMatrix p_after;   // result of the slot's update
  Vec lambda;            // lambda(n+1)
  Vec beta;              // per-link contraction modulus of this slot's update
};

/// One synchronous DSGPA iteration applied for a known channel realization.
class Tracker {
 public:
  Tracker(ScalingPolicy policy, DualStep dual, NoiseModel noise, Vec p_max,
          std::size_t subcarriers);

  const AlgorithmState& state() const { return state_; }
  AlgorithmState& mutable_state() { return state_; }

  SlotUpdate step(const GainTensor& g);

  const Vec& p_max() const { return p_max_; }
  const NoiseModel& noise() const { return noise_; }

 private:
  ScalingController controller_;
  DualStep dual_;
  NoiseModel noise_;
  Vec p_max_;
  AlgorithmState state_;
};

struct SlotRecord {
  std::size_t slot = 0;
  std::size_t stage = 0;
  const JointChannelState* state = nullptr;  // valid during the callback only
  bool stage_start = false;
  SlotUpdate update;
};

using SlotObserver = std::function<void(const SlotRecord&)>;

struct TrackingRun {
  ScalingPolicy policy;
  DualStep dual;
  NoiseModel noise;
  Vec p_max;
  std::size_t horizon = 1;
  std::uint64_t seed = 1;
  std::uint64_t trial = 0;
};

/// Streams the switched-system iteration over a sampled FSMC path.
void run_tracking(const FsmcSpec& spec, const TrackingRun& run, const SlotObserver& observer);

struct TraceEntry {
  std::size_t slot = 0;
  std::size_t stage = 0;
  JointChannelState state;
  PowerMatrix p_before;
  PowerMatrix p_after;
  Vec lambda;
  Vec beta;
};

struct TrackingTrace {
  std::vector<TraceEntry> slots;
};

TrackingTrace run_tracking(const FsmcSpec& spec, const TrackingRun& run);

}  // namespace nashtrack
