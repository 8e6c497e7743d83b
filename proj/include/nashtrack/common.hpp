#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nashtrack {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using DiagMatrix = Eigen::DiagonalMatrix<double, Eigen::Dynamic>;

// Power profiles are stored K x N_F: row k is link k's allocation over subcarriers.
using PowerMatrix = Eigen::MatrixXd;

using LinkIndex = std::size_t;
using SubcarrierIndex = std::size_t;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace nashtrack
