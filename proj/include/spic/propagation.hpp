#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spic/aggregators.hpp"
#include "spic/common.hpp"

namespace spic {

struct Embedding {
  Matrix values;
  int k = 0;
  int beta = 0;
  bool normalized = false;
  Family source_family = Family::IDENTITY;
};

/// (beta*I + M)^k x by k sparse applications. With `normalize`, every column
/// is divided by its max-abs value after each step, which keeps the column
/// direction and avoids overflow for large k. Throws if a step produces a
/// non-finite value.
Embedding propagate(const Aggregator& agg, const Matrix& x, int k, bool normalize);

/// Default normalization policy: off up to k = 5, on beyond.
inline bool default_normalize(int k) { return k > 5; }

/// Teleporting propagation X^t = (1-alpha) S X^(t-1) + alpha X^0, S = beta*I + M.
Embedding appnp_propagate(const Aggregator& agg, const Matrix& x, double alpha, int iterations);

/// APPNP's closed-form polynomial coefficients:
/// theta_i = alpha (1-alpha)^i for i < K, theta_K = (1-alpha)^K.
std::vector<double> appnp_coefficients(double alpha, int iterations);

/// sum_i theta_i S^i x, evaluated Horner-style with theta.size()-1 applications.
Embedding polynomial_propagate(const Aggregator& agg, const Matrix& x, std::span<const double> theta);

struct SpectralDecomposition {
  Vector eigenvalues;            // sorted by |lambda| descending
  Eigen::MatrixXd eigenvectors;  // unit-norm columns
  Vector coefficients;           // v0 in the eigenbasis, empty without v0
  bool symmetric = false;

  double spectral_gap() const;  // |lambda_2| / |lambda_1|
};

/// Dense eigendecomposition of beta*I + M. Symmetric operators use a
/// self-adjoint solver; others use the general solver and must come back
/// real and accurate to 1e-8 (relative), else this throws.
SpectralDecomposition spectral_oracle(const Aggregator& agg, const std::optional<Vector>& v0 = std::nullopt,
                                      std::int64_t max_nodes = 2000);

/// |<S^k v0, x_1>| / (|S^k v0| |x_1|) for k = 0..k_max, with x_1 the dominant
/// eigenvector of S = beta*I + M.
std::vector<double> convergence_report(const Aggregator& agg, const Vector& v0, int k_max,
                                       std::int64_t max_nodes = 2000);
std::vector<double> convergence_report(const Aggregator& agg, const SpectralDecomposition& spectrum,
                                       const Vector& v0, int k_max);

}  // namespace spic
