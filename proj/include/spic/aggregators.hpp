#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "spic/common.hpp"
#include "spic/csr.hpp"
#include "spic/graph.hpp"

namespace spic {

enum class Family { DAD, DA, AGNN, GAT_SYM, GAT_ASYM, RL_SYM, RL_ASYM, IDENTITY };

const char* family_name(Family f);
/// Row-stochastic families: DA, AGNN, GAT_ASYM.
bool is_row_stochastic(Family f);

/// Fixed message-passing operator M with its shift beta. Propagation applies
/// (beta*I + M). Immutable; the transpose is materialized once so backward
/// passes through asymmetric operators cost the same as forward ones.
class Aggregator {
 public:
  /// Throws when `symmetric` is claimed but the matrix deviates from its
  /// transpose by more than 1e-12.
  Aggregator(CsrMatrix matrix, Family family, bool symmetric, int shift = 0);

  const CsrMatrix& matrix() const { return *matrix_; }
  const CsrMatrix& transposed() const { return *transposed_; }
  Family family() const { return family_; }
  bool symmetric() const { return symmetric_; }
  int shift() const { return shift_; }
  std::int64_t size() const { return matrix_->n; }

  Aggregator with_shift(int beta) const;

  /// out = (beta*I + M) x. `out` must not alias `x`.
  void apply(const Matrix& x, Matrix& out) const { matrix_->multiply(x, out, shift_); }
  /// out = (beta*I + M)^T x.
  void apply_transposed(const Matrix& x, Matrix& out) const { transposed_->multiply(x, out, shift_); }

  /// Dense beta*I + M.
  Eigen::MatrixXd dense_operator() const;

 private:
  std::shared_ptr<const CsrMatrix> matrix_;
  std::shared_ptr<const CsrMatrix> transposed_;
  Family family_;
  bool symmetric_;
  int shift_;
};

/// Sparsity pattern of A + I for `g`, with unit values.
CsrMatrix self_loop_pattern(const Graph& g);

Aggregator build_identity(std::int64_t n);

/// D^-1/2 (A+I) D^-1/2 with D the degree matrix of A+I.
Aggregator build_dad(const Graph& g);

/// D^-1 (A+I): each node averages itself and its neighbours.
Aggregator build_da(const Graph& g);

/// Cosine-similarity softmax over N(i) + {i}. Throws on a zero feature row.
Aggregator build_agnn(const Graph& g, double eps = 1.0);

struct AttentionParams {
  double epsilon = 1.0;
  Vector attn_vector;  // length 2h: [source half | neighbour half]
  Matrix proj;         // d x h
  double leaky_slope = 0.2;

  std::int64_t hidden() const { return proj.cols(); }

  /// proj ~ U[-1/sqrt(d), 1/sqrt(d)], attn_vector ~ U[-1/sqrt(2h), 1/sqrt(2h)].
  static AttentionParams random(std::int64_t d, std::int64_t h, std::uint64_t seed, double leaky_slope = 0.2);
};

/// GAT-style attention Z_ij = softmax_j LeakyReLU(a^T [P^T x_i || P^T x_j]).
/// symmetric=true returns (Z + Z^T)/2 (GAT_SYM), else Z (GAT_ASYM).
Aggregator build_gat(const Graph& g, const AttentionParams& params, bool symmetric);

/// A o W plus identity, W ~ U[0,1) per stored directed entry. The symmetric
/// variant averages with the transpose before adding the identity.
Aggregator build_random_laplacian(const Graph& g, bool symmetric, std::uint64_t seed);

/// Per-row Shannon entropy (natural log) of the stored weights.
Vector attention_entropy(const Aggregator& agg);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::int64_t> counts;
};

/// Equal-width histogram over [min, max] of `values`; the last bin is closed.
Histogram histogram(const Vector& values, int bins);

}  // namespace spic
