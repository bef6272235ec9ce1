#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spic/aggregators.hpp"
#include "spic/graph.hpp"
#include "spic/learn.hpp"

namespace spic {

/// Model families exposed by the harness. APPNP and POLY run on DAD.
enum class ModelKind { Dad, Da, Agnn, GatSym, GatAsym, RlSym, RlAsym, Appnp, Poly };

const char* model_name(ModelKind kind);
ModelKind parse_model(const std::string& s);
/// Families whose operator is redrawn from the run seed (random Laplacians,
/// randomly initialized attention).
bool is_random_family(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::Dad;
  Variant variant = Variant::LINEAR;  // forced to LINEAR for appnp, POLY for poly
  std::vector<int> k_values{2};       // best validation mean wins
  int beta = 0;
  double alpha = 0.1;
  std::optional<bool> normalize;  // unset: default_normalize(k)
  double agnn_eps = 1.0;
  std::int64_t attention_hidden = 8;

  Variant effective_variant() const;
  /// Report id, e.g. "dad" or "dad_relu1".
  std::string id() const;
};

/// Operator for `kind` on `g`; `seed` feeds the random families.
Aggregator build_model_aggregator(const ModelSpec& spec, const Graph& g, std::uint64_t seed);

struct DataSpec {
  std::filesystem::path dir;    // SPIC graph directory, or
  std::optional<SbmSpec> sbm;   // a generated graph
  std::int64_t sbm_features = 64;
  FeatureMode feature_mode = FeatureMode::RandomUniform;
  std::optional<std::int64_t> keep_features;    // first N columns
  std::optional<std::int64_t> random_features;  // replace X by U[0,1) of this width
  std::uint64_t feature_seed = 0;
  std::string name;  // report id; derived when empty

  std::string id() const;
};

Graph load_data(const DataSpec& data);

struct RunReport {
  std::string model;
  std::string dataset;
  int k = 0;
  int beta = 0;
  std::string metric;  // "accuracy" or "micro_f1"
  std::vector<double> test_metrics;
  std::vector<double> val_metrics;
  std::vector<double> seconds;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  int epochs = 0;
  int runs = 0;
  std::uint64_t seed_base = 0;

  double seconds_per_run() const;
};

/// config.runs trainings with seeds config.seed .. config.seed + runs - 1 for
/// each candidate k; the k with the best mean validation metric is reported.
RunReport run_experiment(const ModelSpec& model, const Graph& g, const std::string& dataset_id,
                         const TrainConfig& config);
RunReport run_experiment(const ModelSpec& model, const DataSpec& data, const TrainConfig& config);

enum class SweepAxis { K, Beta, FeatureDim, ModelFamily };
SweepAxis parse_sweep_axis(const std::string& s);
const char* sweep_axis_name(SweepAxis axis);

/// One experiment per value, in axis order (numeric ascending, or family
/// name order).
std::vector<RunReport> sweep(SweepAxis axis, std::vector<std::string> values, const ModelSpec& model,
                             const DataSpec& data, const TrainConfig& config);

/// model,dataset,k,beta,runs,epochs,metric,mean,std,seconds_per_run
void write_reports_csv(std::ostream& out, const std::vector<RunReport>& reports);

}  // namespace spic
