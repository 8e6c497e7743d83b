#pragma once

#include "nashtrack/network.hpp"

namespace nashtrack {

// Scaling matrices with an eigenvalue at or below this are treated as singular.
inline constexpr double kSingularScalingTolerance = 1e-12;

/// max_k ||p_k||_2 over the rows of a K x N_F profile.
double block_max_norm(const PowerMatrix& p);

/// Induced 2-norm of a diagonal matrix: max_s |d_s|.
double diag_two_norm(const DiagMatrix& d);

/// beta_k = ||I + D_k^{-1} d2_kk C_k||_2 + sum_{j != k} ||D_k^{-1} d2_kj C_k||_2.
/// All blocks are diagonal, so every norm is a max over subcarriers.
double contraction_modulus(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                           LinkIndex k, const DiagMatrix& scaling);

/// Same quantity for a full (non block-diagonal) scaling matrix: the sum over
/// block columns j of the 2-norms of block (k, j) of I + D^{-1} J.
double contraction_modulus_full(const GainTensor& g, const PowerMatrix& p, const NoiseModel& noise,
                                LinkIndex k, const Mat& scaling);

/// sum_{j != k} max_s g_kj / g_kk: no positive definite scaling does better.
double modulus_lower_bound(const GainTensor& g, LinkIndex k);

/// ||A B||_2 >= lambda_min(A) ||B||_2 for diagonal SPD A, B (within 1e-12 slack).
bool product_norm_bound_check(const DiagMatrix& a, const DiagMatrix& b);

}  // namespace nashtrack
