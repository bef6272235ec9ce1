#pragma once
// Test-only reference implementations. Everything here works on dense
// matrices built straight from the edge list, never through the library's
// CSR kernels or aggregator builders.

#include <cstdint>
#include <utility>
#include <vector>

#include "spic/common.hpp"
#include "spic/graph.hpp"
#include "spic/learn.hpp"

namespace oracle {

using Dense = Eigen::MatrixXd;
using Edges = std::vector<std::pair<std::int64_t, std::int64_t>>;

/// Random connected graph: random spanning tree plus `extra` random edges.
Edges random_connected_edges(std::int64_t n, std::int64_t extra, spic::Rng& rng);

/// Graph over `edges` with U[0,1) features, labels i % c, first third train,
/// second third val, rest test (every class present in train when n >= 3c).
spic::Graph make_graph(std::int64_t n, const Edges& edges, std::int64_t d, int c, spic::Rng& rng);

Dense adjacency(std::int64_t n, const Edges& edges);
Dense dense_dad(const Dense& a);
Dense dense_da(const Dense& a);

/// (beta I + M)^k X by repeated dense products.
Dense dense_power_apply(const Dense& m, int beta, int k, const Dense& x);

double relative_frobenius(const Dense& a, const Dense& b);

/// Dense-matrix forward of every learn variant, written from the model
/// equations directly.
Dense forward(spic::Variant v, const Dense& m, int beta, const Dense& x, const spic::ModelParams& p);

/// Mean cross-entropy (or mean sigmoid BCE) over train nodes plus wd/2 |W|^2.
double loss(spic::Variant v, const Dense& m, int beta, const Dense& x, const spic::Labels& labels,
            const std::vector<spic::Role>& roles, const spic::ModelParams& p, double wd);

/// Unsupervised-embedding classifier: the top `dims` eigenvectors of the
/// symmetric matrix m (by eigenvalue) as node coordinates, rows normalized,
/// nodes assigned to the nearest class centroid of the training nodes.
/// Returns accuracy on the test nodes.
double spectral_clustering_accuracy(const Dense& m, int dims, const std::vector<int>& labels,
                                    const std::vector<spic::Role>& roles);

}  // namespace oracle
