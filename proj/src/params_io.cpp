#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spic/learn.hpp"

namespace spic {

namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

void write_tensor(const fs::path& file, const Matrix& m) {
  std::ofstream out(file);
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << '\t';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw Error("failed to write " + file.string());
}

Matrix read_tensor(const fs::path& file, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(file);
  if (!in) throw Error("missing file " + file.string());
  Matrix m(rows, cols);
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw Error(file.filename().string() + ": expected " + std::to_string(rows) + " rows");
    std::istringstream ss(line);
    std::string tok;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(ss >> tok)) throw Error(file.filename().string() + ":" + std::to_string(i + 1) + ": too few columns");
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), m(i, j));
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error(file.filename().string() + ":" + std::to_string(i + 1) + ": malformed value");
    }
  }
  return m;
}

}  // namespace

// Layout: manifest.json plus one TSV per non-empty tensor. theta is stored
// as a single column.
void save_params(const ModelParams& params, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest = {{"format", "spic-params"},
                             {"version", kFormatVersion},
                             {"variant", variant_name(params.variant)},
                             {"k", params.k},
                             {"beta", params.beta},
                             {"tensors", nlohmann::json::object()}};
  auto put = [&](const char* name, const Matrix& m) {
    if (m.size() == 0) return;
    manifest["tensors"][name] = {m.rows(), m.cols()};
    write_tensor(dir / (std::string(name) + ".tsv"), m);
  };
  put("omega_p", params.omega_p);
  put("omega_r", params.omega_r);
  put("omega_f", params.omega_f);
  if (params.theta.size()) put("theta", Matrix(params.theta));
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

ModelParams load_params(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("missing file " + (dir / "manifest.json").string());
  ModelParams p;
  try {
    const auto manifest = nlohmann::json::parse(in);
    if (manifest.at("format") != "spic-params") throw Error("manifest.json: not a spic parameter bundle");
    if (manifest.at("version").get<int>() != kFormatVersion) throw Error("manifest.json: unsupported version");
    p.variant = parse_variant(manifest.at("variant").get<std::string>());
    p.k = manifest.at("k").get<int>();
    p.beta = manifest.at("beta").get<int>();
    for (const auto& [name, shape] : manifest.at("tensors").items()) {
      Matrix m = read_tensor(dir / (name + ".tsv"), shape.at(0).get<Eigen::Index>(), shape.at(1).get<Eigen::Index>());
      if (name == "omega_p") p.omega_p = std::move(m);
      else if (name == "omega_r") p.omega_r = std::move(m);
      else if (name == "omega_f") p.omega_f = std::move(m);
      else if (name == "theta") p.theta = m.col(0);
      else throw Error("manifest.json: unknown tensor '" + name + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest.json: ") + e.what());
  }
  return p;
}

}  // namespace spic
