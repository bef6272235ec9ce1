#include "spic/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace spic {

namespace fs = std::filesystem;

const char* role_name(Role r) {
  switch (r) {
    case Role::Train: return "train";
    case Role::Val: return "val";
    case Role::Test: return "test";
    case Role::None: break;
  }
  return "none";
}

Graph::Graph(CsrMatrix adjacency, Matrix features, Labels labels, std::vector<Role> roles)
    : adjacency_(std::move(adjacency)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      roles_(std::move(roles)) {
  const auto n = adjacency_.n;
  if (n < 1) throw Error("graph must have at least one node");
  if (static_cast<std::int64_t>(adjacency_.offsets.size()) != n + 1)
    throw Error("adjacency offsets do not match node count");
  for (std::int64_t i = 0; i < n; ++i) {
    for (auto p = adjacency_.row_begin(i); p < adjacency_.row_end(i); ++p) {
      const auto j = adjacency_.cols[p];
      if (j < 0 || j >= n) throw Error("adjacency column out of range in row " + std::to_string(i));
      if (j == i) throw Error("self-loop stored at node " + std::to_string(i));
      if (p > adjacency_.row_begin(i) && adjacency_.cols[p - 1] >= j)
        throw Error("adjacency row " + std::to_string(i) + " is not strictly sorted");
    }
  }
  if (adjacency_.asymmetry() != 0.0) throw Error("adjacency is not symmetric");
  if (features_.rows() != n) throw Error("feature matrix has " + std::to_string(features_.rows()) +
                                         " rows, expected " + std::to_string(n));
  if (features_.cols() < 1) throw Error("feature matrix has no columns");
  if (static_cast<std::int64_t>(roles_.size()) != n) throw Error("mask count does not match node count");
  const int c = labels_.num_classes;
  if (c < 1) throw Error("num_classes must be positive");
  if (labels_.multilabel) {
    if (static_cast<std::int64_t>(labels_.multi.size()) != n * c) throw Error("multilabel matrix has wrong size");
    for (auto v : labels_.multi)
      if (v > 1) throw Error("multilabel entries must be 0 or 1");
  } else {
    if (static_cast<std::int64_t>(labels_.single.size()) != n) throw Error("label count does not match node count");
    std::vector<bool> seen(c, false);
    for (std::int64_t i = 0; i < n; ++i) {
      const int y = labels_.single[i];
      if (y < 0 || y >= c) throw Error("label " + std::to_string(y) + " of node " + std::to_string(i) +
                                       " outside [0, " + std::to_string(c) + ")");
      if (roles_[i] == Role::Train) seen[y] = true;
    }
    for (int k = 0; k < c; ++k)
      if (!seen[k]) throw Error("class " + std::to_string(k) + " has no training node");
  }
}

std::vector<std::int64_t> Graph::nodes_with(Role r) const {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < num_nodes(); ++i)
    if (roles_[i] == r) out.push_back(i);
  return out;
}

Graph Graph::with_features(Matrix features) const { return Graph(adjacency_, std::move(features), labels_, roles_); }

bool Graph::operator==(const Graph& o) const {
  return adjacency_.n == o.adjacency_.n && adjacency_.offsets == o.adjacency_.offsets &&
         adjacency_.cols == o.adjacency_.cols && adjacency_.values == o.adjacency_.values &&
         features_.rows() == o.features_.rows() && features_.cols() == o.features_.cols() &&
         features_ == o.features_ && labels_ == o.labels_ && roles_ == o.roles_;
}

CsrMatrix symmetric_adjacency(std::int64_t n, std::span<const std::pair<std::int64_t, std::int64_t>> edges) {
  std::vector<std::vector<std::int32_t>> rows(n);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw Error("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
    if (u == v) throw Error("self-loop at node " + std::to_string(u));
    rows[u].push_back(static_cast<std::int32_t>(v));
    rows[v].push_back(static_cast<std::int32_t>(u));
  }
  CsrMatrix a;
  a.n = n;
  a.offsets.assign(n + 1, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    a.offsets[i + 1] = a.offsets[i] + static_cast<std::int64_t>(r.size());
    a.cols.insert(a.cols.end(), r.begin(), r.end());
  }
  a.values.assign(a.cols.size(), 1.0);
  return a;
}

SbmSpec SbmSpec::uniform(int blocks, std::int64_t size, double p_in, double p_out, int labeled,
                         std::uint64_t seed) {
  SbmSpec s;
  s.sizes.assign(blocks, size);
  s.p_in = p_in;
  s.p_out = p_out;
  s.labeled_per_block = labeled;
  s.seed = seed;
  return s;
}

FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "onehot-block-noisy") return FeatureMode::OneHotBlockNoisy;
  if (s == "random-uniform") return FeatureMode::RandomUniform;
  throw Error("unknown feature mode '" + s + "'");
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

Matrix uniform_matrix(std::int64_t rows, std::int64_t cols, Rng& rng) {
  Matrix x(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) x(i, j) = rng.uniform();
  return x;
}

}  // namespace

Graph generate_sbm(const SbmSpec& spec, std::int64_t feature_dim, FeatureMode mode) {
  if (spec.sizes.empty()) throw Error("SBM needs at least one block");
  if (!(spec.p_in >= 0.0 && spec.p_in <= 1.0 && spec.p_out >= 0.0 && spec.p_out <= 1.0))
    throw Error("SBM probabilities must lie in [0, 1]");
  if (spec.labeled_per_block < 1) throw Error("labeled_per_block must be at least 1");
  if (feature_dim < 1) throw Error("feature dimension must be at least 1");
  for (std::size_t b = 0; b < spec.sizes.size(); ++b) {
    if (spec.sizes[b] < 1) throw Error("SBM block sizes must be positive");
    if (spec.sizes[b] < spec.labeled_per_block)
      throw Error("block " + std::to_string(b) + " has " + std::to_string(spec.sizes[b]) +
                  " nodes, fewer than labeled_per_block=" + std::to_string(spec.labeled_per_block));
  }
  if (spec.blocks() > 1 && spec.p_in <= spec.p_out)
    std::cerr << "warning: SBM p_in <= p_out, communities are not assortative\n";

  const std::int64_t n = std::accumulate(spec.sizes.begin(), spec.sizes.end(), std::int64_t{0});
  std::vector<int> block(n);
  {
    std::int64_t at = 0;
    for (int b = 0; b < spec.blocks(); ++b)
      for (std::int64_t t = 0; t < spec.sizes[b]; ++t) block[at++] = b;
  }

  Rng topo(spec.seed);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double p = block[i] == block[j] ? spec.p_in : spec.p_out;
      if (topo.uniform() < p) edges.emplace_back(i, j);
    }

  Rng split(spec.seed ^ 0x6a09e667f3bcc909ULL);
  std::vector<Role> roles(n, Role::None);
  std::int64_t start = 0;
  for (int b = 0; b < spec.blocks(); ++b) {
    std::vector<std::int64_t> members(spec.sizes[b]);
    std::iota(members.begin(), members.end(), start);
    shuffle(members, split);
    for (int t = 0; t < spec.labeled_per_block; ++t) roles[members[t]] = Role::Train;
    start += spec.sizes[b];
  }
  std::vector<std::int64_t> rest;
  for (std::int64_t i = 0; i < n; ++i)
    if (roles[i] != Role::Train) rest.push_back(i);
  shuffle(rest, split);
  for (std::size_t t = 0; t < rest.size(); ++t) roles[rest[t]] = t < rest.size() / 2 ? Role::Val : Role::Test;

  Rng feat(spec.seed ^ 0xbb67ae8584caa73bULL);
  Matrix x = uniform_matrix(n, feature_dim, feat);
  if (mode == FeatureMode::OneHotBlockNoisy)
    for (std::int64_t i = 0; i < n; ++i) x(i, block[i] % feature_dim) += 1.0;

  Labels labels;
  labels.num_classes = spec.blocks();
  labels.single = block;
  return Graph(symmetric_adjacency(n, edges), std::move(x), std::move(labels), std::move(roles));
}

Graph randomize_features(const Graph& g, std::int64_t d_new, std::uint64_t seed) {
  if (d_new < 1) throw Error("random feature width must be at least 1");
  Rng rng(seed);
  return g.with_features(uniform_matrix(g.num_nodes(), d_new, rng));
}

Graph reduce_features(const Graph& g, std::span<const std::int64_t> keep) {
  if (keep.empty()) throw Error("empty feature selection");
  Matrix x(g.num_nodes(), static_cast<std::int64_t>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    if (keep[c] < 0 || keep[c] >= g.num_features())
      throw Error("feature index " + std::to_string(keep[c]) + " >= d=" + std::to_string(g.num_features()));
    x.col(static_cast<std::int64_t>(c)) = g.features().col(keep[c]);
  }
  return g.with_features(std::move(x));
}

Graph reduce_features(const Graph& g, std::int64_t count) {
  if (count > g.num_features())
    throw Error("cannot keep " + std::to_string(count) + " of " + std::to_string(g.num_features()) + " features");
  std::vector<std::int64_t> keep(std::max<std::int64_t>(count, 0));
  std::iota(keep.begin(), keep.end(), 0);
  return reduce_features(g, keep);
}

// ---------------------------------------------------------------------------
// Directory format

namespace {

class LineReader {
 public:
  LineReader(const fs::path& dir, const char* name) : name_(name), in_(dir / name) {
    if (!in_) throw Error(std::string("missing file ") + (dir / name).string());
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(name_ + ":" + std::to_string(line_no_) + ": " + what + " at line " + std::to_string(line_no_));
  }

  int line() const { return line_no_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::ifstream in_;
  int line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void write_double(std::ostream& os, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, ptr - buf);
}

}  // namespace

Graph load_graph(const fs::path& dir) {
  std::ifstream meta_in(dir / "graph.json");
  if (!meta_in) throw Error("missing file " + (dir / "graph.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("graph.json: ") + e.what());
  }
  std::int64_t n = 0, d = 0;
  int c = 0;
  bool multilabel = false;
  try {
    n = meta.at("num_nodes").get<std::int64_t>();
    d = meta.at("num_features").get<std::int64_t>();
    c = meta.at("num_classes").get<int>();
    multilabel = meta.value("multilabel", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("graph.json: ") + e.what());
  }
  if (n < 1 || d < 1 || c < 1) throw Error("graph.json: num_nodes, num_features and num_classes must be positive");

  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  {
    LineReader r(dir, "edges.tsv");
    std::string line;
    while (r.next(line)) {
      auto tok = split_ws(line);
      std::int64_t u, v;
      if (tok.size() != 2 || !parse_number(tok[0], u) || !parse_number(tok[1], v)) r.fail("malformed edge");
      if (u < 0 || v < 0 || u >= n || v >= n) r.fail("node index out of range");
      if (u == v) r.fail("self-loop");
      edges.emplace_back(u, v);
    }
  }

  Matrix x(n, d);
  {
    LineReader r(dir, "features.tsv");
    std::string line;
    std::int64_t row = 0;
    while (r.next(line)) {
      if (row >= n) r.fail("feature row count exceeds n=" + std::to_string(n));
      auto tok = split_ws(line);
      if (static_cast<std::int64_t>(tok.size()) != d)
        r.fail("expected " + std::to_string(d) + " features, found " + std::to_string(tok.size()));
      for (std::int64_t j = 0; j < d; ++j)
        if (!parse_number(tok[j], x(row, j))) r.fail("malformed feature value");
      ++row;
    }
    if (row != n) r.fail("feature row count " + std::to_string(row) + " != n=" + std::to_string(n));
  }

  Labels labels;
  labels.num_classes = c;
  labels.multilabel = multilabel;
  {
    LineReader r(dir, "labels.tsv");
    std::string line;
    std::int64_t row = 0;
    while (r.next(line)) {
      if (row >= n) r.fail("label row count exceeds n=" + std::to_string(n));
      auto tok = split_ws(line);
      if (multilabel) {
        if (static_cast<int>(tok.size()) != c) r.fail("expected " + std::to_string(c) + " label columns");
        for (const auto& t : tok) {
          if (t != "0" && t != "1") r.fail("label out of class range");
          labels.multi.push_back(t == "1" ? 1 : 0);
        }
      } else {
        int y;
        if (tok.size() != 1 || !parse_number(tok[0], y)) r.fail("malformed label");
        if (y < 0 || y >= c) r.fail("label out of class range");
        labels.single.push_back(y);
      }
      ++row;
    }
    if (row != n) r.fail("label row count " + std::to_string(row) + " != n=" + std::to_string(n));
  }

  std::vector<Role> roles;
  roles.reserve(n);
  {
    LineReader r(dir, "masks.tsv");
    std::string line;
    while (r.next(line)) {
      if (static_cast<std::int64_t>(roles.size()) >= n) r.fail("mask row count exceeds n=" + std::to_string(n));
      auto tok = split_ws(line);
      if (tok.size() != 1) r.fail("malformed mask token");
      if (tok[0] == "train") roles.push_back(Role::Train);
      else if (tok[0] == "val") roles.push_back(Role::Val);
      else if (tok[0] == "test") roles.push_back(Role::Test);
      else if (tok[0] == "none") roles.push_back(Role::None);
      else r.fail("malformed mask token '" + std::string(tok[0]) + "'");
    }
    if (static_cast<std::int64_t>(roles.size()) != n)
      r.fail("mask row count " + std::to_string(roles.size()) + " != n=" + std::to_string(n));
  }

  return Graph(symmetric_adjacency(n, edges), std::move(x), std::move(labels), std::move(roles));
}

void save_graph(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  const auto n = g.num_nodes();
  {
    nlohmann::json meta = {{"num_nodes", n},
                           {"num_features", g.num_features()},
                           {"num_classes", g.num_classes()},
                           {"multilabel", g.multilabel()}};
    std::ofstream out(dir / "graph.json");
    out << meta.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "edges.tsv");
    const auto& a = g.adjacency();
    for (std::int64_t i = 0; i < n; ++i)
      for (auto p = a.row_begin(i); p < a.row_end(i); ++p)
        if (a.cols[p] > i) out << i << '\t' << a.cols[p] << '\n';
  }
  {
    std::ofstream out(dir / "features.tsv");
    const auto& x = g.features();
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < x.cols(); ++j) {
        if (j) out << '\t';
        write_double(out, x(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.tsv");
    const auto& l = g.labels();
    for (std::int64_t i = 0; i < n; ++i) {
      if (l.multilabel) {
        for (int k = 0; k < l.num_classes; ++k) out << (k ? " " : "") << int(l.multi_at(i, k));
      } else {
        out << l.single[i];
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "masks.tsv");
    for (auto r : g.roles()) out << role_name(r) << '\n';
  }
  if (!fs::exists(dir / "masks.tsv")) throw Error("failed to write graph directory " + dir.string());
}

}  // namespace spic
