#include "spic/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace spic {

namespace {

void check_rows(const Aggregator& agg, const Matrix& x) {
  if (x.rows() != agg.size())
    throw Error("feature matrix has " + std::to_string(x.rows()) + " rows, aggregator expects " +
                std::to_string(agg.size()));
}

void check_finite(const Matrix& x, int iteration) {
  if (!x.allFinite())
    throw Error("non-finite value after iteration " + std::to_string(iteration) +
                "; enable normalization for large k");
}

void scale_columns(Matrix& x) {
  for (std::int64_t c = 0; c < x.cols(); ++c) {
    const double m = x.col(c).cwiseAbs().maxCoeff();
    if (m != 0.0) x.col(c) /= m;
  }
}

}  // namespace

Embedding propagate(const Aggregator& agg, const Matrix& x, int k, bool normalize) {
  if (k < 0) throw Error("iteration count must be nonnegative");
  check_rows(agg, x);
  Embedding e{x, k, agg.shift(), normalize, agg.family()};
  Matrix next;
  for (int t = 1; t <= k; ++t) {
    agg.apply(e.values, next);
    e.values.swap(next);
    if (normalize) scale_columns(e.values);
    check_finite(e.values, t);
  }
  return e;
}

Embedding appnp_propagate(const Aggregator& agg, const Matrix& x, double alpha, int iterations) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0,1)");
  if (iterations < 1) throw Error("APPNP needs at least one iteration");
  check_rows(agg, x);
  Embedding e{x, iterations, agg.shift(), false, agg.family()};
  Matrix next;
  for (int t = 1; t <= iterations; ++t) {
    agg.apply(e.values, next);
    e.values = (1.0 - alpha) * next + alpha * x;
    check_finite(e.values, t);
  }
  return e;
}

std::vector<double> appnp_coefficients(double alpha, int iterations) {
  std::vector<double> theta(iterations + 1);
  for (int i = 0; i < iterations; ++i) theta[i] = alpha * std::pow(1.0 - alpha, i);
  theta[iterations] = std::pow(1.0 - alpha, iterations);
  return theta;
}

Embedding polynomial_propagate(const Aggregator& agg, const Matrix& x, std::span<const double> theta) {
  if (theta.empty()) throw Error("polynomial needs at least one coefficient");
  check_rows(agg, x);
  const int order = static_cast<int>(theta.size()) - 1;
  Embedding e{theta[order] * x, order, agg.shift(), false, agg.family()};
  Matrix next;
  for (int i = order - 1; i >= 0; --i) {
    agg.apply(e.values, next);
    e.values = next + theta[i] * x;
    check_finite(e.values, order - i);
  }
  return e;
}

double SpectralDecomposition::spectral_gap() const {
  if (eigenvalues.size() < 2) return 0.0;
  return std::abs(eigenvalues[1]) / std::abs(eigenvalues[0]);
}

SpectralDecomposition spectral_oracle(const Aggregator& agg, const std::optional<Vector>& v0,
                                      std::int64_t max_nodes) {
  const auto n = agg.size();
  if (n > max_nodes)
    throw Error("spectral oracle limited to " + std::to_string(max_nodes) + " nodes, got " + std::to_string(n));
  const Eigen::MatrixXd op = agg.dense_operator();

  Vector values;
  Eigen::MatrixXd vectors;
  if (agg.symmetric()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
    if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(op);
    if (solver.info() != Eigen::Success) throw Error("eigensolver failed");
    const double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
    if (solver.eigenvalues().imag().cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw Error(std::string(family_name(agg.family())) +
                  " operator has complex eigenvalues; use a symmetric aggregator family for the oracle");
    values = solver.eigenvalues().real();
    vectors = solver.eigenvectors().real();
    for (std::int64_t i = 0; i < n; ++i) vectors.col(i).normalize();
  }

  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    const double ma = std::abs(values[a]), mb = std::abs(values[b]);
    return ma != mb ? ma > mb : values[a] > values[b];
  });

  SpectralDecomposition out;
  out.symmetric = agg.symmetric();
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    out.eigenvalues[i] = values[order[i]];
    out.eigenvectors.col(i) = vectors.col(order[i]);
  }
  for (std::int64_t i = 0; i < n; ++i) {
    const double lambda = out.eigenvalues[i];
    const double residual = (op * out.eigenvectors.col(i) - lambda * out.eigenvectors.col(i)).norm();
    if (residual > 1e-8 * std::max(1.0, std::abs(lambda)))
      throw Error("eigenpair " + std::to_string(i) + " residual " + std::to_string(residual) +
                  " exceeds tolerance; the operator may not be diagonalizable, use a symmetric family");
  }

  if (v0) {
    if (v0->size() != n) throw Error("v0 length does not match aggregator size");
    if (out.symmetric) {
      out.coefficients = out.eigenvectors.transpose() * *v0;
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(out.eigenvectors);
      if (!lu.isInvertible()) throw Error("eigenvectors are not a basis; operator is not diagonalizable");
      out.coefficients = lu.solve(*v0);
    }
  }
  return out;
}

std::vector<double> convergence_report(const Aggregator& agg, const SpectralDecomposition& spectrum,
                                       const Vector& v0, int k_max) {
  if (k_max < 0) throw Error("k_max must be nonnegative");
  if (v0.size() != agg.size()) throw Error("v0 length does not match aggregator size");
  const Vector x1 = spectrum.eigenvectors.col(0);
  double c1;
  if (spectrum.symmetric) {
    c1 = x1.dot(v0);
  } else {
    c1 = Eigen::FullPivLU<Eigen::MatrixXd>(spectrum.eigenvectors).solve(v0)[0];
  }
  if (std::abs(c1) <= 1e-12 * std::max(1.0, v0.norm())) throw Error("v0 orthogonal to dominant eigenvector");

  std::vector<double> sims;
  sims.reserve(k_max + 1);
  Matrix v = v0;
  Matrix next;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) {
      agg.apply(v, next);
      v.swap(next);
      const double norm = v.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("iterate vanished or overflowed at k=" + std::to_string(k));
      v /= norm;  // direction only
    }
    const Eigen::Map<const Vector> col(v.data(), v.rows());
    sims.push_back(std::abs(col.dot(x1)) / (col.norm() * x1.norm()));
  }
  return sims;
}

std::vector<double> convergence_report(const Aggregator& agg, const Vector& v0, int k_max, std::int64_t max_nodes) {
  return convergence_report(agg, spectral_oracle(agg, std::nullopt, max_nodes), v0, k_max);
}

}  // namespace spic
