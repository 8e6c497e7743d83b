#include "nashtrack/dsgpa.hpp"

#include <algorithm>
#include <cmath>

#include "nashtrack/game.hpp"

namespace nashtrack {

std::string to_string(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::DsgpaOptimal: return "dsgpa";
    case ScalingKind::GenGpa: return "gen-gpa";
    case ScalingKind::DiaGpa: return "dia-gpa";
    case ScalingKind::ConGpa: return "con-gpa";
  }
  return "unknown";
}

ScalingKind scaling_kind_from_string(const std::string& name) {
  for (auto kind : {ScalingKind::DsgpaOptimal, ScalingKind::GenGpa, ScalingKind::DiaGpa,
                    ScalingKind::ConGpa})
    if (to_string(kind) == name) return kind;
  throw ConfigError("unknown scaling policy '" + name + "'");
}

ScalingPolicy ScalingPolicy::of(ScalingKind kind, double con_stepsize) {
  require(con_stepsize > 0.0, "con_stepsize must be positive");
  ScalingPolicy policy;
  policy.kind = kind;
  policy.con_stepsize = con_stepsize;
  policy.freeze_at_init = kind == ScalingKind::DiaGpa || kind == ScalingKind::ConGpa;
  return policy;
}

std::string to_string(DualStepKind kind) {
  switch (kind) {
    case DualStepKind::Fixed: return "fixed";
    case DualStepKind::Diminishing: return "diminishing";
    case DualStepKind::ExactLineSearch: return "line-search";
  }
  return "unknown";
}

DualStepKind dual_step_from_string(const std::string& name) {
  for (auto kind : {DualStepKind::Fixed, DualStepKind::Diminishing, DualStepKind::ExactLineSearch})
    if (to_string(kind) == name) return kind;
  throw ConfigError("unknown dual step '" + name + "'");
}

Vec project_nonneg(const Vec& v) { return v.cwiseMax(0.0); }

double lambda_update(double lambda_k, double alpha, double p_max_k, const Vec& p_k) {
  require(alpha > 0.0, "dual stepsize must be positive");
  return std::max(lambda_k - alpha * (p_max_k - p_k.sum()), 0.0);
}

double lambda_exact_line_search(const LocalObservation& obs, double p_max_k) {
  const WaterfillResult wf = waterfill(obs.direct_gain, obs.interference_floor(), p_max_k);
  return wf.water_level > 0.0 ? 1.0 / wf.water_level : 0.0;
}

Vec power_update(const Vec& p_k, const Mat& scaling, const Vec& f_k) {
  require(scaling.rows() == p_k.size() && scaling.cols() == p_k.size(),
          "scaling has wrong dimension");
  Eigen::SelfAdjointEigenSolver<Mat> eig(scaling, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kSingularScalingTolerance)
    throw NumericalError("power_update: scaling matrix is singular");
  return scaled_projection(p_k + scaling.ldlt().solve(f_k), scaling);
}

Vec scaled_projection(const Vec& y, const Mat& scaling, double tol, std::size_t max_sweeps) {
  // Coordinate descent on min_{x >= 0} (x - y)' D (x - y); exact for diagonal D
  // after one sweep.
  Vec x = project_nonneg(y);
  Vec grad = scaling * (x - y);
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double next = std::max(0.0, x(i) - grad(i) / scaling(i, i));
      const double dx = next - x(i);
      if (dx == 0.0) continue;
      x(i) = next;
      grad += dx * scaling.col(i);
      moved = std::max(moved, std::abs(dx));
    }
    if (moved <= tol * scale) return x;
  }
  throw NumericalError("scaled_projection: coordinate descent did not converge");
}

Vec power_update(const Vec& p_k, const DiagMatrix& scaling, const Vec& f_k) {
  const Vec& d = scaling.diagonal();
  require(d.size() == p_k.size(), "scaling has wrong dimension");
  if (d.size() > 0 && d.minCoeff() < kSingularScalingTolerance)
    throw NumericalError("power_update: scaling matrix is singular");
  return project_nonneg(p_k + f_k.cwiseQuotient(d));
}

DiagMatrix optimal_scaling(const LocalObservation& obs, double floor) {
  const Vec ratio = obs.direct_gain.cwiseQuotient(obs.received_power);
  return DiagMatrix(ratio.cwiseProduct(ratio).cwiseMax(floor));
}

DiagMatrix optimal_scaling(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                           LinkIndex k, double floor) {
  return optimal_scaling(observe(g, p, noise, k), floor);
}

Mat general_scaling(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                    double eigen_floor) {
  const Mat jac = stacked_jacobian(g, p, noise);
  const Mat sym = -0.5 * (jac + jac.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  const Vec lambda = eig.eigenvalues().cwiseMax(eigen_floor);
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

double ScalingSet::min_eigenvalue() const {
  if (full) return Eigen::SelfAdjointEigenSolver<Mat>(*full, Eigen::EigenvaluesOnly)
                   .eigenvalues()
                   .minCoeff();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks)
    if (b.diagonal().size() > 0) lo = std::min(lo, b.diagonal().minCoeff());
  return lo;
}

ScalingSet make_scaling(const ScalingPolicy& policy, const GainTensor& g, const PowerMatrix& p,
                        const NoiseModel& noise) {
  ScalingSet set;
  const auto n = static_cast<Eigen::Index>(g.subcarriers());
  switch (policy.kind) {
    case ScalingKind::DsgpaOptimal:
    case ScalingKind::DiaGpa:
      for (std::size_t k = 0; k < g.links(); ++k) set.blocks.push_back(optimal_scaling(g, p, noise, k));
      break;
    case ScalingKind::ConGpa:
      require(policy.con_stepsize > 0.0, "con_stepsize must be positive");
      for (std::size_t k = 0; k < g.links(); ++k)
        set.blocks.emplace_back(Vec::Constant(n, 1.0 / policy.con_stepsize));
      break;
    case ScalingKind::GenGpa:
      set.full = general_scaling(g, p, noise);
      break;
  }
  return set;
}

const ScalingSet& ScalingController::scaling(const GainTensor& g, const PowerMatrix& p,
                                             const NoiseModel& noise) {
  if (!current_ || !policy_.freeze_at_init) current_ = make_scaling(policy_, g, p, noise);
  return *current_;
}

AlgorithmState initial_state(const Vec& p_max, std::size_t subcarriers) {
  require(subcarriers > 0, "need at least one subcarrier");
  require((p_max.array() > 0.0).all(), "power budgets must be positive");
  AlgorithmState state;
  const double n = static_cast<double>(subcarriers);
  state.p = PowerMatrix(p_max.size(), static_cast<Eigen::Index>(subcarriers));
  for (Eigen::Index k = 0; k < p_max.size(); ++k) state.p.row(k).setConstant(p_max(k) / n);
  state.lambda = (0.5 * n) * p_max.cwiseInverse();
  return state;
}

Vec contraction_moduli(const ScalingSet& scaling, const GainTensor& g, const PowerMatrix& p,
                       const NoiseModel& noise) {
  Vec beta(g.links());
  for (std::size_t k = 0; k < g.links(); ++k)
    beta(k) = scaling.is_full() ? contraction_modulus_full(g, p, noise, k, *scaling.full)
                                : contraction_modulus(g, p, noise, k, scaling.blocks[k]);
  return beta;
}

Tracker::Tracker(ScalingPolicy policy, DualStep dual, NoiseModel noise, Vec p_max,
                 std::size_t subcarriers)
    : controller_(policy), dual_(dual), noise_(noise), p_max_(std::move(p_max)) {
  require(noise_.sigma2 > 0.0, "noise power sigma2 must be positive");
  require(dual_.alpha > 0.0, "dual stepsize must be positive");
  state_ = initial_state(p_max_, subcarriers);
}

SlotUpdate Tracker::step(const GainTensor& g) {
  const std::size_t links = g.links();
  const auto n = static_cast<Eigen::Index>(g.subcarriers());
  require(static_cast<std::size_t>(state_.p.rows()) == links && state_.p.cols() == n,
          "gain tensor does not match the tracker");

  SlotUpdate out;
  out.p_before = state_.p;
  out.lambda = state_.lambda;

  // Every transmitter sees only its own observation; lambda(n+1) first, then p(n+1).
  std::vector<LocalObservation> obs;
  obs.reserve(links);
  for (std::size_t k = 0; k < links; ++k) obs.push_back(observe(g, state_.p, noise_, k));
  for (std::size_t k = 0; k < links; ++k) {
    switch (dual_.kind) {
      case DualStepKind::Fixed:
        out.lambda(k) = lambda_update(state_.lambda(k), dual_.alpha, p_max_(k), obs[k].power);
        break;
      case DualStepKind::Diminishing:
        out.lambda(k) = lambda_update(state_.lambda(k),
                                      dual_.alpha / std::sqrt(static_cast<double>(state_.slot + 1)),
                                      p_max_(k), obs[k].power);
        break;
      case DualStepKind::ExactLineSearch:
        out.lambda(k) = lambda_exact_line_search(obs[k], p_max_(k));
        break;
    }
  }

  const ScalingSet& scaling = controller_.scaling(g, state_.p, noise_);
  out.p_after = PowerMatrix(links, n);
  if (scaling.is_full()) {
    Vec p(links * n), f(links * n);
    for (std::size_t k = 0; k < links; ++k) {
      p.segment(k * n, n) = obs[k].power;
      f.segment(k * n, n) = gradient(obs[k], out.lambda(k));
    }
    const Vec next = power_update(p, *scaling.full, f);
    for (std::size_t k = 0; k < links; ++k) out.p_after.row(k) = next.segment(k * n, n).transpose();
  } else {
    for (std::size_t k = 0; k < links; ++k)
      out.p_after.row(k) =
          power_update(obs[k].power, scaling.blocks[k], gradient(obs[k], out.lambda(k))).transpose();
  }
  out.beta = contraction_moduli(scaling, g, state_.p, noise_);

  state_.p = out.p_after;
  state_.lambda = out.lambda;
  ++state_.slot;
  return out;
}

void run_tracking(const FsmcSpec& spec, const TrackingRun& run, const SlotObserver& observer) {
  require(run.horizon >= 1, "horizon must be at least one slot");
  require(static_cast<std::size_t>(run.p_max.size()) == spec.links(), "p_max must have K entries");
  Tracker tracker(run.policy, run.dual, run.noise, run.p_max, spec.subcarriers());
  ChannelProcess channel(spec, run.seed, run.trial);
  std::size_t stage = 0;
  bool changed = true;
  for (std::size_t n = 0; n < run.horizon; ++n) {
    if (n > 0) {
      changed = channel.advance();
      if (changed) ++stage;
    }
    SlotRecord record;
    record.slot = n;
    record.stage = stage;
    record.state = &channel.state();
    record.stage_start = changed;
    record.update = tracker.step(gains_of(spec, channel.state()));
    observer(record);
  }
}

TrackingTrace run_tracking(const FsmcSpec& spec, const TrackingRun& run) {
  TrackingTrace trace;
  trace.slots.reserve(run.horizon);
  run_tracking(spec, run, [&](const SlotRecord& r) {
    trace.slots.push_back(TraceEntry{r.slot, r.stage, *r.state, r.update.p_before,
                                     r.update.p_after, r.update.lambda, r.update.beta});
  });
  return trace;
}

}  // namespace nashtrack
