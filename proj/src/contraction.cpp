#include "nashtrack/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nashtrack {

double block_max_norm(const PowerMatrix& p) {
  if (p.size() == 0) return 0.0;
  return p.rowwise().norm().maxCoeff();
}

double diag_two_norm(const DiagMatrix& d) {
  if (d.diagonal().size() == 0) return 0.0;
  return d.diagonal().cwiseAbs().maxCoeff();
}

double contraction_modulus(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                           LinkIndex k, const DiagMatrix& scaling) {
  const Vec& d = scaling.diagonal();
  require(static_cast<std::size_t>(d.size()) == g.subcarriers(), "scaling has wrong dimension");
  if ((d.array() <= kSingularScalingTolerance).any())
    throw NumericalError("contraction_modulus: scaling matrix is singular");

  const Vec rho = received_power_profile(g, p, noise, k);
  double own = 0.0;
  for (std::size_t s = 0; s < g.subcarriers(); ++s) {
    const double eta = -g(k, k, s) * g(k, k, s) / (rho(s) * rho(s));
    own = std::max(own, std::abs(1.0 + eta / d(s)));
  }
  double cross = 0.0;
  for (std::size_t j = 0; j < g.links(); ++j) {
    if (j == k) continue;
    double block = 0.0;
    for (std::size_t s = 0; s < g.subcarriers(); ++s) {
      const double eta = -g(k, k, s) * g(k, j, s) / (rho(s) * rho(s));
      block = std::max(block, std::abs(eta / d(s)));
    }
    cross += block;
  }
  return own + cross;
}

double contraction_modulus_full(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                                LinkIndex k, const Mat& scaling) {
  const auto n = static_cast<Eigen::Index>(g.subcarriers());
  const auto dim = static_cast<Eigen::Index>(g.links()) * n;
  require(scaling.rows() == dim && scaling.cols() == dim, "scaling has wrong dimension");
  Eigen::LDLT<Mat> ldlt(scaling);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("contraction_modulus_full: scaling is not positive definite");

  const Mat step = ldlt.solve(stacked_jacobian(g, p, noise));
  double beta = 0.0;
  for (std::size_t j = 0; j < g.links(); ++j) {
    Mat block = step.block(static_cast<Eigen::Index>(k) * n, static_cast<Eigen::Index>(j) * n, n, n);
    if (j == k) block += Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(block);
    beta += svd.singularValues()(0);
  }
  return beta;
}

double modulus_lower_bound(const GainTensor& g, LinkIndex k) {
  double total = 0.0;
  for (std::size_t j = 0; j < g.links(); ++j) {
    if (j == k) continue;
    double worst = 0.0;
    for (std::size_t s = 0; s < g.subcarriers(); ++s) {
      const double direct = g(k, k, s);
      const double ratio = direct > 0.0 ? g(k, j, s) / direct
                                        : (g(k, j, s) > 0.0 ? std::numeric_limits<double>::infinity()
                                                            : 0.0);
      worst = std::max(worst, ratio);
    }
    total += worst;
  }
  return total;
}

bool product_norm_bound_check(const DiagMatrix& a, const DiagMatrix& b) {
  require(a.diagonal().size() == b.diagonal().size(), "dimension mismatch");
  require((a.diagonal().array() > 0.0).all() && (b.diagonal().array() > 0.0).all(),
          "inputs must be positive definite");
  const DiagMatrix ab(a.diagonal().cwiseProduct(b.diagonal()));
  const double lhs = diag_two_norm(ab);
  const double rhs = a.diagonal().minCoeff() * diag_two_norm(b);
  return lhs >= rhs - 1e-12 * std::max(1.0, rhs);
}

}  // namespace nashtrack
