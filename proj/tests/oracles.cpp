#include "oracles.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace oracle {

Edges random_connected_edges(std::int64_t n, std::int64_t extra, spic::Rng& rng) {
  Edges e;
  for (std::int64_t i = 1; i < n; ++i) e.emplace_back(static_cast<std::int64_t>(rng.below(i)), i);
  for (std::int64_t t = 0; t < extra; ++t) {
    const auto u = static_cast<std::int64_t>(rng.below(n));
    const auto v = static_cast<std::int64_t>(rng.below(n));
    if (u != v) e.emplace_back(u, v);
  }
  return e;
}

spic::Graph make_graph(std::int64_t n, const Edges& edges, std::int64_t d, int c, spic::Rng& rng) {
  spic::Matrix x(n, d);
  for (std::int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  spic::Labels labels;
  labels.num_classes = c;
  std::vector<spic::Role> roles(n);
  for (std::int64_t i = 0; i < n; ++i) {
    labels.single.push_back(static_cast<int>(i % c));
    roles[i] = i < std::max<std::int64_t>(n / 3, c) ? spic::Role::Train
               : i < 2 * n / 3                      ? spic::Role::Val
                                                    : spic::Role::Test;
  }
  return spic::Graph(spic::symmetric_adjacency(n, edges), x, labels, roles);
}

Dense adjacency(std::int64_t n, const Edges& edges) {
  Dense a = Dense::Zero(n, n);
  for (auto [u, v] : edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

Dense dense_dad(const Dense& a) {
  const Dense at = a + Dense::Identity(a.rows(), a.cols());
  const Eigen::VectorXd d = at.rowwise().sum();
  const Eigen::VectorXd s = d.array().rsqrt();
  return s.asDiagonal() * at * s.asDiagonal();
}

Dense dense_da(const Dense& a) {
  const Dense at = a + Dense::Identity(a.rows(), a.cols());
  const Eigen::VectorXd d = at.rowwise().sum();
  return d.cwiseInverse().asDiagonal() * at;
}

Dense dense_power_apply(const Dense& m, int beta, int k, const Dense& x) {
  const Dense s = m + beta * Dense::Identity(m.rows(), m.cols());
  Dense out = x;
  for (int t = 0; t < k; ++t) out = s * out;
  return out;
}

double relative_frobenius(const Dense& a, const Dense& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

namespace {

Dense mat_power(const Dense& m, int k) {
  Dense out = Dense::Identity(m.rows(), m.cols());
  for (int t = 0; t < k; ++t) out = out * m;
  return out;
}

Dense relu(const Dense& a) { return a.cwiseMax(0.0); }

}  // namespace

Dense forward(spic::Variant v, const Dense& m, int beta, const Dense& x, const spic::ModelParams& p) {
  const Dense s = m + beta * Dense::Identity(m.rows(), m.cols());
  const Dense wf = p.omega_f;
  switch (v) {
    case spic::Variant::LINEAR:
      return mat_power(s, p.k) * x * wf;
    case spic::Variant::POLY: {
      Dense acc = Dense::Zero(m.rows(), m.cols());
      for (int i = 0; i <= p.k; ++i) acc += p.theta[i] * mat_power(s, i);
      return acc * x * wf;
    }
    case spic::Variant::RELU1: {
      Dense h = x * Dense(p.omega_p);
      h = relu(m * h) + beta * h;
      return mat_power(s, p.k - 1) * h * wf;
    }
    case spic::Variant::GENERAL: {
      Dense h = x * Dense(p.omega_p);
      for (int t = 0; t < p.k; ++t) h = relu(m * h * Dense(p.omega_r)) + beta * h;
      return h * wf;
    }
    case spic::Variant::W:
      return mat_power(s, p.k) * x * Dense(p.omega_p) * mat_power(Dense(p.omega_r), p.k) * wf;
  }
  return {};
}

double loss(spic::Variant v, const Dense& m, int beta, const Dense& x, const spic::Labels& labels,
            const std::vector<spic::Role>& roles, const spic::ModelParams& p, double wd) {
  const Dense z = forward(v, m, beta, x, p);
  double total = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] != spic::Role::Train) continue;
    ++count;
    if (!labels.multilabel) {
      double sum = 0.0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) sum += std::exp(z(i, c));
      total += std::log(sum) - z(i, labels.single[i]);
    } else {
      for (int c = 0; c < labels.num_classes; ++c) {
        const double prob = 1.0 / (1.0 + std::exp(-z(i, c)));
        const double y = labels.multi_at(static_cast<std::int64_t>(i), c);
        total -= (y * std::log(prob) + (1 - y) * std::log(1 - prob)) / labels.num_classes;
      }
    }
  }
  double reg = p.omega_p.squaredNorm() + p.omega_r.squaredNorm() + p.omega_f.squaredNorm() + p.theta.squaredNorm();
  return total / count + 0.5 * wd * reg;
}

double spectral_clustering_accuracy(const Dense& m, int dims, const std::vector<int>& labels,
                                    const std::vector<spic::Role>& roles) {
  Eigen::SelfAdjointEigenSolver<Dense> es(m);
  const auto n = m.rows();
  Dense emb = es.eigenvectors().rightCols(dims);  // largest eigenvalues
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = emb.row(i).norm();
    if (norm > 0) emb.row(i) /= norm;
  }
  int classes = 0;
  for (int y : labels) classes = std::max(classes, y + 1);
  Dense centroid = Dense::Zero(classes, dims);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(classes);
  for (Eigen::Index i = 0; i < n; ++i)
    if (roles[i] == spic::Role::Train) {
      centroid.row(labels[i]) += emb.row(i);
      count[labels[i]] += 1;
    }
  for (int c = 0; c < classes; ++c) centroid.row(c) /= count[c];
  int correct = 0, total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (roles[i] != spic::Role::Test) continue;
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if ((emb.row(i) - centroid.row(c)).squaredNorm() < (emb.row(i) - centroid.row(best)).squaredNorm()) best = c;
    correct += best == labels[i];
    ++total;
  }
  return static_cast<double>(correct) / total;
}

}  // namespace oracle
