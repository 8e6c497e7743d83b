#include "nashtrack/network.hpp"

#include <cmath>

namespace nashtrack {

Vec GainTensor::row(LinkIndex k, LinkIndex j) const {
  Vec out(subcarriers_);
  for (std::size_t s = 0; s < subcarriers_; ++s) out(s) = (*this)(k, j, s);
  return out;
}

Vec LocalObservation::interference_floor() const {
  return received_power - direct_gain.cwiseProduct(power);
}

void validate(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise) {
  require(noise.sigma2 > 0.0, "noise power sigma2 must be positive");
  require(static_cast<std::size_t>(p.rows()) == g.links() &&
              static_cast<std::size_t>(p.cols()) == g.subcarriers(),
          "power profile shape does not match the gain tensor");
  for (double v : g.data()) require(v >= 0.0, "channel gains must be nonnegative");
  require((p.array() >= 0.0).all(), "transmit powers must be nonnegative");
}

Vec received_power_profile(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                           LinkIndex k) {
  Vec rho = Vec::Constant(g.subcarriers(), noise.sigma2);
  for (std::size_t j = 0; j < g.links(); ++j)
    for (std::size_t s = 0; s < g.subcarriers(); ++s) rho(s) += g(k, j, s) * p(j, s);
  return rho;
}

LocalObservation observe(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                         LinkIndex k) {
  return {g.direct(k), p.row(k).transpose(), received_power_profile(g, p, noise, k)};
}

double sinr(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise, LinkIndex k,
            SubcarrierIndex s) {
  double interference = noise.sigma2;
  for (std::size_t j = 0; j < g.links(); ++j)
    if (j != k) interference += g(k, j, s) * p(j, s);
  return g(k, k, s) * p(k, s) / interference;
}

double link_capacity(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                     LinkIndex k) {
  double c = 0.0;
  for (std::size_t s = 0; s < g.subcarriers(); ++s) c += std::log1p(sinr(g, p, noise, k, s));
  return c;
}

double sum_capacity(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise) {
  double c = 0.0;
  for (std::size_t k = 0; k < g.links(); ++k) c += link_capacity(g, p, noise, k);
  return c;
}

Vec gradient(const LocalObservation& obs, double lambda_k) {
  // A dead subcarrier (g_kk = 0) contributes no marginal rate.
  Vec f(obs.direct_gain.size());
  for (Eigen::Index s = 0; s < f.size(); ++s) {
    const double ratio = obs.direct_gain(s) > 0.0 ? obs.direct_gain(s) / obs.received_power(s) : 0.0;
    f(s) = ratio - lambda_k;
  }
  return f;
}

Vec gradient(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise, LinkIndex k,
             double lambda_k) {
  return gradient(observe(g, p, noise, k), lambda_k);
}

DiagMatrix hessian_block(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                         LinkIndex k, LinkIndex j) {
  const Vec rho = received_power_profile(g, p, noise, k);
  Vec eta(g.subcarriers());
  for (std::size_t s = 0; s < g.subcarriers(); ++s)
    eta(s) = -g(k, k, s) * g(k, j, s) / (rho(s) * rho(s));
  return DiagMatrix(eta);
}

Mat stacked_jacobian(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise) {
  const std::size_t links = g.links();
  const std::size_t n = g.subcarriers();
  Mat jac = Mat::Zero(links * n, links * n);
  for (std::size_t k = 0; k < links; ++k) {
    const Vec rho = received_power_profile(g, p, noise, k);
    for (std::size_t j = 0; j < links; ++j)
      for (std::size_t s = 0; s < n; ++s)
        jac(k * n + s, j * n + s) = -g(k, k, s) * g(k, j, s) / (rho(s) * rho(s));
  }
  return jac;
}

}  // namespace nashtrack
