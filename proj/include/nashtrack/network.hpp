#pragma once

#include <vector>

#include "nashtrack/common.hpp"

namespace nashtrack {

/// Power gains g[k][j][s] from transmitter j to receiver k on subcarrier s.
class GainTensor {
 public:
  GainTensor() = default;
  GainTensor(std::size_t links, std::size_t subcarriers, double fill = 0.0)
      : links_(links), subcarriers_(subcarriers), data_(links * links * subcarriers, fill) {}

  std::size_t links() const { return links_; }
  std::size_t subcarriers() const { return subcarriers_; }

  double operator()(LinkIndex k, LinkIndex j, SubcarrierIndex s) const {
    return data_[(k * links_ + j) * subcarriers_ + s];
  }
  double& operator()(LinkIndex k, LinkIndex j, SubcarrierIndex s) {
    return data_[(k * links_ + j) * subcarriers_ + s];
  }

  /// g[k][j][.] as a vector over subcarriers.
  Vec row(LinkIndex k, LinkIndex j) const;
  Vec direct(LinkIndex k) const { return row(k, k); }

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t links_ = 0;
  std::size_t subcarriers_ = 0;
  std::vector<double> data_;
};

struct NoiseModel {
  double sigma2 = 1.0;
};

/// Everything link k's transmitter sees in one slot: its own direct gains,
/// its own powers, and the received power profile fed back by its receiver.
struct LocalObservation {
  Vec direct_gain;     // g_kk^(s)
  Vec power;           // p_k^(s)
  Vec received_power;  // rho_k^(s)

  /// Interference plus noise seen by link k: rho_k - g_kk p_k.
  Vec interference_floor() const;
};

/// rho_k^(s) = sigma^2 + sum_j g_kj^(s) p_j^(s).
Vec received_power_profile(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                           LinkIndex k);

LocalObservation observe(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                         LinkIndex k);

double sinr(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise, LinkIndex k,
            SubcarrierIndex s);

/// C_k = sum_s ln(1 + gamma_k^(s)), in nats per channel use.
double link_capacity(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                     LinkIndex k);

double sum_capacity(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise);

/// Gradient of the link-k Lagrangian w.r.t. p_k: g_kk / rho_k - lambda_k.
Vec gradient(const LocalObservation& obs, double lambda_k);
Vec gradient(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise, LinkIndex k,
             double lambda_k);

/// Diagonal block d^2 C_k / dp_k dp_j with entries -g_kk g_kj / rho_k^2.
DiagMatrix hessian_block(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                         LinkIndex k, LinkIndex j);

/// Full K N_F x K N_F Jacobian of the stacked gradient map, block (k, j) equal
/// to hessian_block(k, j).
Mat stacked_jacobian(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise);

void validate(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise);

}  // namespace nashtrack
