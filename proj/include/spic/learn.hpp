#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spic/aggregators.hpp"
#include "spic/common.hpp"
#include "spic/graph.hpp"
#include "spic/propagation.hpp"

namespace spic {

// LINEAR  logits = S^k X Wf
// RELU1   H = X Wp; H = relu(M H) + beta H; logits = S^(k-1) H Wf
// GENERAL H0 = X Wp; Ht = relu(M H(t-1) Wr) + beta H(t-1); logits = Hk Wf
// W       logits = S^k (X Wp) Wr^k Wf
// POLY    logits = (sum_i theta_i S^i X) Wf
// with S = beta*I + M.
enum class Variant { LINEAR, RELU1, GENERAL, W, POLY };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct ModelParams {
  Variant variant = Variant::LINEAR;
  int k = 0;
  int beta = 0;
  Matrix omega_p;  // d x h
  Matrix omega_r;  // h x h, shared across iterations
  Matrix omega_f;  // h x c (d x c for LINEAR and POLY)
  Vector theta;    // k + 1 coefficients, POLY only

  /// Visits every trainable tensor as a flat array (empty ones skipped).
  void for_each_tensor(const std::function<void(Eigen::Map<Vector>)>& fn);
  void for_each_tensor(const std::function<void(Eigen::Map<const Vector>)>& fn) const;
  std::int64_t num_parameters() const;

  /// Same shapes, all zeros.
  ModelParams zeros_like() const;

  /// Throws unless the tensor set and shapes fit the variant for d input
  /// features and c classes.
  void validate(std::int64_t d, int c) const;
};

/// Uniform +-1/sqrt(fan_in) weights; theta starts at 1/(k+1).
ModelParams init_params(Variant variant, std::int64_t d, std::int64_t hidden, int classes, int k, int beta,
                        Rng& rng);

struct TrainConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 5e-4;
  int epochs = 100;
  int runs = 1;
  std::uint64_t seed = 0;
  std::int64_t hidden = 64;

  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  ModelParams grad;
  Matrix logits;
};

/// Training objective for one (variant, operator, features, labels) tuple.
/// Parameter-independent work is done once at construction: the propagated
/// embedding for LINEAR and the powers S^i X for POLY.
class Objective {
 public:
  Objective(Variant variant, Aggregator agg, Matrix features, Labels labels, std::vector<Role> roles, int k,
            bool normalize = false, double weight_decay = 0.0);

  /// LINEAR head over an externally propagated embedding (e.g. APPNP).
  static Objective linear_on(Embedding embedding, Labels labels, std::vector<Role> roles, double weight_decay = 0.0);

  Variant variant() const { return variant_; }
  int k() const { return k_; }
  int beta() const { return beta_; }
  std::int64_t input_dim() const;
  int num_classes() const { return labels_.num_classes; }
  const Labels& labels() const { return labels_; }
  const std::vector<std::int64_t>& nodes(Role r) const;
  double weight_decay() const { return weight_decay_; }

  Matrix logits(const ModelParams& params) const;
  LossGrad evaluate(const ModelParams& params) const;
  /// Data loss plus weight decay only; cheaper than evaluate().
  double loss(const ModelParams& params) const;

  /// Concatenated ReLU on/off pattern of the forward pass (empty for
  /// piecewise-smooth-free variants). Used to discard finite-difference
  /// probes that straddle a kink.
  std::vector<std::uint8_t> relu_pattern(const ModelParams& params) const;

  /// Fresh parameters for this objective.
  ModelParams init(std::int64_t hidden, Rng& rng) const;

 private:
  Objective() = default;
  struct Trace;
  Trace run_forward(const ModelParams& params, bool keep) const;
  double data_loss(const Matrix& logits, Matrix* dlogits) const;

  Variant variant_ = Variant::LINEAR;
  std::optional<Aggregator> agg_;
  Matrix features_;
  Labels labels_;
  std::vector<std::int64_t> train_, val_, test_;
  int k_ = 0;
  int beta_ = 0;
  double weight_decay_ = 0.0;
  Matrix embedding_;            // LINEAR
  std::vector<Matrix> powers_;  // POLY: S^i X
};

/// Logits computed directly through the propagation engine, no caching.
Matrix forward(Variant variant, const Aggregator& agg, const Matrix& x, const ModelParams& params);

LossGrad loss_and_grad(Variant variant, const Aggregator& agg, const Matrix& x, const Labels& labels,
                       const std::vector<Role>& roles, const ModelParams& params, double weight_decay = 0.0);

struct TrainResult {
  ModelParams params;    // retained (best validation) parameters
  int best_epoch = 0;    // 0 = initial parameters
  double val_metric = 0.0;
  double test_metric = 0.0;
  double final_loss = 0.0;
  double seconds = 0.0;
};

/// Full-batch Adam for config.epochs steps from parameters drawn with
/// config.seed. Keeps the parameters with the best validation metric (later
/// epochs win ties); without validation nodes the final parameters are kept.
TrainResult train(const Objective& objective, const TrainConfig& config);
TrainResult train(Variant variant, const Aggregator& agg, const Graph& g, const TrainConfig& config, int k,
                  bool normalize = false);

struct GradCheckDims {
  std::int64_t n = 12;
  std::int64_t d = 5;
  std::int64_t hidden = 4;
  int classes = 3;
  int k = 3;
  int beta = 1;
  bool multilabel = false;
  double weight_decay = 5e-4;
  double step = 1e-4;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int64_t checked = 0;
  std::int64_t skipped = 0;  // probes that crossed a ReLU kink
};

/// Analytic gradient vs central differences on a random instance. The
/// relative error of one entry is |a - f| / max(|a|, |f|, 1e-3).
GradCheckResult grad_check(Variant variant, const GradCheckDims& dims, std::uint64_t seed);

void save_params(const ModelParams& params, const std::filesystem::path& dir);
ModelParams load_params(const std::filesystem::path& dir);

}  // namespace spic
