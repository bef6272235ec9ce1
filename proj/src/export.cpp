#include "spic/export.hpp"

#include <cstdio>
#include <fstream>

namespace spic {

std::string format_sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_embedding_tsv(std::ostream& out, const Matrix& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "\t" : "") << format_sig6(values(i, j));
    out << '\n';
  }
}

void write_entropy_tsv(std::ostream& out, const Vector& entropy) {
  for (double h : entropy) out << format_sig6(h) << '\n';
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b)
    out << format_sig6(hist.edges[b]) << ',' << format_sig6(hist.edges[b + 1]) << ',' << hist.counts[b] << '\n';
}

void write_convergence_csv(std::ostream& out, const std::vector<double>& similarity) {
  out << "k,similarity\n";
  for (std::size_t k = 0; k < similarity.size(); ++k) out << k << ',' << format_sig6(similarity[k]) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace spic
