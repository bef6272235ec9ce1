#include "spic/aggregators.hpp"

#include <algorithm>
#include <cmath>

namespace spic {

const char* family_name(Family f) {
  switch (f) {
    case Family::DAD: return "DAD";
    case Family::DA: return "DA";
    case Family::AGNN: return "AGNN";
    case Family::GAT_SYM: return "GAT_SYM";
    case Family::GAT_ASYM: return "GAT_ASYM";
    case Family::RL_SYM: return "RL_SYM";
    case Family::RL_ASYM: return "RL_ASYM";
    case Family::IDENTITY: return "IDENTITY";
  }
  return "?";
}

bool is_row_stochastic(Family f) { return f == Family::DA || f == Family::AGNN || f == Family::GAT_ASYM; }

Aggregator::Aggregator(CsrMatrix matrix, Family family, bool symmetric, int shift)
    : family_(family), symmetric_(symmetric), shift_(shift) {
  if (shift < 0) throw Error("aggregator shift must be nonnegative");
  if (static_cast<std::int64_t>(matrix.offsets.size()) != matrix.n + 1)
    throw Error("aggregator matrix offsets do not match its size");
  if (symmetric && matrix.asymmetry() > 1e-12)
    throw Error(std::string(family_name(family)) + " aggregator claimed symmetric but is not");
  auto m = std::make_shared<const CsrMatrix>(std::move(matrix));
  transposed_ = symmetric ? m : std::make_shared<const CsrMatrix>(m->transpose());
  matrix_ = std::move(m);
}

Aggregator Aggregator::with_shift(int beta) const {
  Aggregator copy = *this;
  if (beta < 0) throw Error("aggregator shift must be nonnegative");
  copy.shift_ = beta;
  return copy;
}

Eigen::MatrixXd Aggregator::dense_operator() const {
  Eigen::MatrixXd d = matrix_->to_dense();
  d.diagonal().array() += static_cast<double>(shift_);
  return d;
}

CsrMatrix self_loop_pattern(const Graph& g) {
  const auto& a = g.adjacency();
  CsrMatrix m;
  m.n = a.n;
  m.offsets.assign(a.n + 1, 0);
  m.cols.reserve(a.nnz() + a.n);
  for (std::int64_t i = 0; i < a.n; ++i) {
    bool placed = false;
    for (auto p = a.row_begin(i); p < a.row_end(i); ++p) {
      if (!placed && a.cols[p] > i) {
        m.cols.push_back(static_cast<std::int32_t>(i));
        placed = true;
      }
      m.cols.push_back(a.cols[p]);
    }
    if (!placed) m.cols.push_back(static_cast<std::int32_t>(i));
    m.offsets[i + 1] = static_cast<std::int64_t>(m.cols.size());
  }
  m.values.assign(m.cols.size(), 1.0);
  return m;
}

Aggregator build_identity(std::int64_t n) { return Aggregator(CsrMatrix::identity(n), Family::IDENTITY, true); }

Aggregator build_dad(const Graph& g) {
  CsrMatrix m = self_loop_pattern(g);
  std::vector<double> inv_sqrt(m.n);
  for (std::int64_t i = 0; i < m.n; ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(m.row_end(i) - m.row_begin(i)));
  for (std::int64_t i = 0; i < m.n; ++i)
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p) m.values[p] = inv_sqrt[i] * inv_sqrt[m.cols[p]];
  return Aggregator(std::move(m), Family::DAD, true);
}

Aggregator build_da(const Graph& g) {
  CsrMatrix m = self_loop_pattern(g);
  for (std::int64_t i = 0; i < m.n; ++i) {
    const double w = 1.0 / static_cast<double>(m.row_end(i) - m.row_begin(i));
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p) m.values[p] = w;
  }
  return Aggregator(std::move(m), Family::DA, false);
}

namespace {

// Overwrites each row's stored scores with their softmax.
void softmax_rows(CsrMatrix& m) {
  for (std::int64_t i = 0; i < m.n; ++i) {
    const auto b = m.row_begin(i), e = m.row_end(i);
    double top = m.values[b];
    for (auto p = b + 1; p < e; ++p) top = std::max(top, m.values[p]);
    double sum = 0.0;
    for (auto p = b; p < e; ++p) sum += (m.values[p] = std::exp(m.values[p] - top));
    for (auto p = b; p < e; ++p) m.values[p] /= sum;
  }
}

// (M + M^T)/2 on a structurally symmetric pattern.
CsrMatrix symmetrize(const CsrMatrix& m) {
  CsrMatrix s = m;
  for (std::int64_t i = 0; i < m.n; ++i)
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p) s.values[p] = (m.values[p] + m.coeff(m.cols[p], i)) / 2.0;
  return s;
}

}  // namespace

Aggregator build_agnn(const Graph& g, double eps) {
  const Matrix& x = g.features();
  Vector norms = x.rowwise().norm();
  for (std::int64_t i = 0; i < norms.size(); ++i)
    if (norms[i] == 0.0) throw Error("AGNN: node " + std::to_string(i) + " has a zero feature vector");
  CsrMatrix m = self_loop_pattern(g);
  for (std::int64_t i = 0; i < m.n; ++i)
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p) {
      const auto j = m.cols[p];
      m.values[p] = eps * (x.row(i).dot(x.row(j)) / (norms[i] * norms[j]));
    }
  softmax_rows(m);
  return Aggregator(std::move(m), Family::AGNN, false);
}

AttentionParams AttentionParams::random(std::int64_t d, std::int64_t h, std::uint64_t seed, double leaky_slope) {
  if (d < 1 || h < 1) throw Error("attention dimensions must be positive");
  Rng rng(seed);
  AttentionParams p;
  p.leaky_slope = leaky_slope;
  p.proj.resize(d, h);
  const double bp = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < h; ++j) p.proj(i, j) = rng.uniform(-bp, bp);
  p.attn_vector.resize(2 * h);
  const double ba = 1.0 / std::sqrt(static_cast<double>(2 * h));
  for (std::int64_t j = 0; j < 2 * h; ++j) p.attn_vector[j] = rng.uniform(-ba, ba);
  return p;
}

Aggregator build_gat(const Graph& g, const AttentionParams& params, bool symmetric) {
  const auto h = params.hidden();
  if (h < 1) throw Error("attention hidden width must be at least 1");
  if (params.proj.rows() != g.num_features())
    throw Error("attention projection has " + std::to_string(params.proj.rows()) + " rows, features have " +
                std::to_string(g.num_features()) + " columns");
  if (params.attn_vector.size() != 2 * h) throw Error("attention vector must have length 2h");
  if (!(params.leaky_slope > 0.0 && params.leaky_slope < 1.0)) throw Error("leaky_slope must lie in (0, 1)");

  const Matrix hidden = g.features() * params.proj;
  const Vector src = hidden * params.attn_vector.head(h);
  const Vector dst = hidden * params.attn_vector.tail(h);
  CsrMatrix m = self_loop_pattern(g);
  for (std::int64_t i = 0; i < m.n; ++i)
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p) {
      const double s = src[i] + dst[m.cols[p]];
      m.values[p] = s > 0.0 ? s : params.leaky_slope * s;
    }
  softmax_rows(m);
  if (symmetric) return Aggregator(symmetrize(m), Family::GAT_SYM, true);
  return Aggregator(std::move(m), Family::GAT_ASYM, false);
}

Aggregator build_random_laplacian(const Graph& g, bool symmetric, std::uint64_t seed) {
  const auto& a = g.adjacency();
  Rng rng(seed);
  CsrMatrix h = a;
  for (auto& v : h.values) v *= rng.uniform();
  if (symmetric) h = symmetrize(h);
  // Merge in the unit diagonal; H has no stored diagonal.
  CsrMatrix m = self_loop_pattern(g);
  for (std::int64_t i = 0; i < m.n; ++i) {
    auto q = h.row_begin(i);
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p)
      m.values[p] = m.cols[p] == i ? 1.0 : h.values[q++];
  }
  return symmetric ? Aggregator(std::move(m), Family::RL_SYM, true)
                   : Aggregator(std::move(m), Family::RL_ASYM, false);
}

Vector attention_entropy(const Aggregator& agg) {
  const auto& m = agg.matrix();
  Vector out(m.n);
  for (std::int64_t i = 0; i < m.n; ++i) {
    double hsum = 0.0;
    for (auto p = m.row_begin(i); p < m.row_end(i); ++p) {
      const double w = m.values[p];
      if (w < 0.0) throw Error("entropy undefined: negative weight in row " + std::to_string(i));
      if (w > 0.0) hsum -= w * std::log(w);
    }
    out[i] = hsum;
  }
  return out;
}

Histogram histogram(const Vector& values, int bins) {
  if (bins < 1) throw Error("histogram needs at least one bin");
  if (values.size() == 0) throw Error("histogram of an empty vector");
  const double lo = values.minCoeff();
  double hi = values.maxCoeff();
  if (hi == lo) hi = lo + 1.0;
  Histogram hist;
  hist.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) hist.edges[b] = lo + (hi - lo) * b / bins;
  hist.counts.assign(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    hist.counts[std::clamp(b, 0, bins - 1)]++;
  }
  return hist;
}

}  // namespace spic
