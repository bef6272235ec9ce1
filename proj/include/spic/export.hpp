#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "spic/aggregators.hpp"
#include "spic/propagation.hpp"

namespace spic {

/// printf "%.6g": the fixed precision of every report and export file.
std::string format_sig6(double v);

void write_embedding_tsv(std::ostream& out, const Matrix& values);
/// One entropy per line, node order.
void write_entropy_tsv(std::ostream& out, const Vector& entropy);
/// Header bin_lo,bin_hi,count.
void write_histogram_csv(std::ostream& out, const Histogram& hist);
/// Header k,similarity.
void write_convergence_csv(std::ostream& out, const std::vector<double>& similarity);

/// Opens `path` for writing (creating parent directories) or throws.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace spic
