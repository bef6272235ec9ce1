#include "spic/csr.hpp"

#include <algorithm>
#include <cmath>

namespace spic {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

// xoshiro256**
Rng::Rng(std::uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % bound));
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % bound;
}

CsrMatrix CsrMatrix::identity(std::int64_t n) {
  CsrMatrix m;
  m.n = n;
  m.offsets.resize(n + 1);
  m.cols.resize(n);
  m.values.assign(n, 1.0);
  for (std::int64_t i = 0; i <= n; ++i) m.offsets[i] = i;
  for (std::int64_t i = 0; i < n; ++i) m.cols[i] = static_cast<std::int32_t>(i);
  return m;
}

double CsrMatrix::coeff(std::int64_t i, std::int64_t j) const {
  auto first = cols.begin() + offsets[i];
  auto last = cols.begin() + offsets[i + 1];
  auto it = std::lower_bound(first, last, static_cast<std::int32_t>(j));
  if (it == last || *it != j) return 0.0;
  return values[it - cols.begin()];
}

bool CsrMatrix::contains(std::int64_t i, std::int64_t j) const {
  auto first = cols.begin() + offsets[i];
  auto last = cols.begin() + offsets[i + 1];
  return std::binary_search(first, last, static_cast<std::int32_t>(j));
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.n = n;
  t.offsets.assign(n + 1, 0);
  t.cols.resize(nnz());
  t.values.resize(nnz());
  for (auto c : cols) ++t.offsets[c + 1];
  for (std::int64_t i = 0; i < n; ++i) t.offsets[i + 1] += t.offsets[i];
  std::vector<std::int64_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
  // Visiting source rows in order leaves each output row sorted.
  for (std::int64_t i = 0; i < n; ++i) {
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p) {
      const auto dst = cursor[cols[p]]++;
      t.cols[dst] = static_cast<std::int32_t>(i);
      t.values[dst] = values[p];
    }
  }
  return t;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::int64_t i = 0; i < n; ++i)
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p) d(i, cols[p]) = values[p];
  return d;
}

bool CsrMatrix::same_pattern(const CsrMatrix& other) const {
  return n == other.n && offsets == other.offsets && cols == other.cols;
}

bool CsrMatrix::pattern_within(const CsrMatrix& super) const {
  if (n != super.n) return false;
  for (std::int64_t i = 0; i < n; ++i)
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p)
      if (!super.contains(i, cols[p])) return false;
  return true;
}

double CsrMatrix::asymmetry() const {
  double worst = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p)
      worst = std::max(worst, std::abs(values[p] - coeff(cols[p], i)));
  return worst;
}

void CsrMatrix::multiply(const Matrix& x, Matrix& out, double shift) const {
  const auto d = x.cols();
  out.resize(n, d);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    if (shift != 0.0)
      row = shift * x.row(i);
    else
      row.setZero();
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p) row += values[p] * x.row(cols[p]);
  }
}

}  // namespace spic
