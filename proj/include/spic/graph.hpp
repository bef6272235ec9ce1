#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spic/common.hpp"
#include "spic/csr.hpp"

namespace spic {

enum class Role : std::uint8_t { None, Train, Val, Test };

const char* role_name(Role r);

struct Labels {
  int num_classes = 0;
  bool multilabel = false;
  std::vector<int> single;         // n entries when !multilabel
  std::vector<std::uint8_t> multi;  // n * num_classes, row-major, when multilabel

  std::uint8_t multi_at(std::int64_t node, int cls) const {
    return multi[static_cast<std::size_t>(node) * num_classes + cls];
  }
  bool operator==(const Labels&) const = default;
};

/// Undirected node-classification graph. Immutable once constructed; the
/// constructor enforces symmetry, absence of self-loops, label ranges and
/// train coverage of every class.
class Graph {
 public:
  Graph(CsrMatrix adjacency, Matrix features, Labels labels, std::vector<Role> roles);

  std::int64_t num_nodes() const { return adjacency_.n; }
  std::int64_t num_features() const { return features_.cols(); }
  int num_classes() const { return labels_.num_classes; }
  bool multilabel() const { return labels_.multilabel; }
  /// Undirected edge count (each stored pair counted once).
  std::size_t num_edges() const { return adjacency_.nnz() / 2; }

  const CsrMatrix& adjacency() const { return adjacency_; }
  const Matrix& features() const { return features_; }
  const Labels& labels() const { return labels_; }
  const std::vector<Role>& roles() const { return roles_; }
  std::int64_t degree(std::int64_t i) const { return adjacency_.row_end(i) - adjacency_.row_begin(i); }

  std::vector<std::int64_t> nodes_with(Role r) const;

  Graph with_features(Matrix features) const;

  bool operator==(const Graph& other) const;

 private:
  CsrMatrix adjacency_;
  Matrix features_;
  Labels labels_;
  std::vector<Role> roles_;
};

/// Builds a symmetric unit-weight adjacency from an undirected edge list.
/// Duplicates (in either orientation) collapse to one edge. Throws on
/// self-loops or out-of-range endpoints.
CsrMatrix symmetric_adjacency(std::int64_t n, std::span<const std::pair<std::int64_t, std::int64_t>> edges);

struct SbmSpec {
  std::vector<std::int64_t> sizes;  // one entry per block
  double p_in = 0.0;
  double p_out = 0.0;
  int labeled_per_block = 1;
  std::uint64_t seed = 0;

  static SbmSpec uniform(int blocks, std::int64_t size, double p_in, double p_out, int labeled,
                         std::uint64_t seed);
  int blocks() const { return static_cast<int>(sizes.size()); }
};

enum class FeatureMode {
  OneHotBlockNoisy,  // Uniform[0,1) noise plus 1.0 on column (block mod d)
  RandomUniform,     // i.i.d. Uniform[0,1)
};

FeatureMode parse_feature_mode(const std::string& s);

Graph generate_sbm(const SbmSpec& spec, std::int64_t feature_dim, FeatureMode mode);

/// Copy of `g` with features replaced by an n x d_new Uniform[0,1) matrix.
Graph randomize_features(const Graph& g, std::int64_t d_new, std::uint64_t seed);

/// Keeps the listed feature columns, in the given order.
Graph reduce_features(const Graph& g, std::span<const std::int64_t> keep);
/// Keeps the first `count` feature columns.
Graph reduce_features(const Graph& g, std::int64_t count);

Graph load_graph(const std::filesystem::path& dir);
void save_graph(const Graph& g, const std::filesystem::path& dir);

}  // namespace spic
