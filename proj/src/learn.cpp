#include "spic/learn.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "spic/metrics.hpp"

namespace spic {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::LINEAR: return "linear";
    case Variant::RELU1: return "relu1";
    case Variant::GENERAL: return "general";
    case Variant::W: return "w";
    case Variant::POLY: return "poly";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "linear") return Variant::LINEAR;
  if (s == "relu1") return Variant::RELU1;
  if (s == "general") return Variant::GENERAL;
  if (s == "w") return Variant::W;
  if (s == "poly") return Variant::POLY;
  throw Error("unknown variant '" + s + "'");
}

// ---------------------------------------------------------------------------
// ModelParams

void ModelParams::for_each_tensor(const std::function<void(Eigen::Map<Vector>)>& fn) {
  for (Matrix* m : {&omega_p, &omega_r, &omega_f})
    if (m->size()) fn(Eigen::Map<Vector>(m->data(), m->size()));
  if (theta.size()) fn(Eigen::Map<Vector>(theta.data(), theta.size()));
}

void ModelParams::for_each_tensor(const std::function<void(Eigen::Map<const Vector>)>& fn) const {
  for (const Matrix* m : {&omega_p, &omega_r, &omega_f})
    if (m->size()) fn(Eigen::Map<const Vector>(m->data(), m->size()));
  if (theta.size()) fn(Eigen::Map<const Vector>(theta.data(), theta.size()));
}

std::int64_t ModelParams::num_parameters() const {
  return omega_p.size() + omega_r.size() + omega_f.size() + theta.size();
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each_tensor([](Eigen::Map<Vector> t) { t.setZero(); });
  return z;
}

void ModelParams::validate(std::int64_t d, int c) const {
  auto fail = [&](const std::string& what) {
    throw Error(std::string(variant_name(variant)) + " parameters: " + what);
  };
  if (k < 0) fail("k must be nonnegative");
  if (beta < 0) fail("beta must be nonnegative");
  if (omega_f.cols() != c) fail("omega_f has " + std::to_string(omega_f.cols()) + " columns, expected " + std::to_string(c));
  const bool has_p = omega_p.size() > 0, has_r = omega_r.size() > 0;
  switch (variant) {
    case Variant::LINEAR:
    case Variant::POLY:
      if (has_p || has_r) fail("unexpected omega_p/omega_r");
      if (omega_f.rows() != d) fail("omega_f must have d rows");
      if (variant == Variant::POLY && theta.size() != k + 1) fail("theta must have k+1 entries");
      if (variant == Variant::LINEAR && theta.size()) fail("unexpected theta");
      break;
    case Variant::RELU1:
      if (k < 1) fail("k must be at least 1");
      [[fallthrough]];
    case Variant::GENERAL:
    case Variant::W:
      if (!has_p || omega_p.rows() != d) fail("omega_p must be d x h");
      if (omega_f.rows() != omega_p.cols()) fail("omega_f must have h rows");
      if (variant == Variant::RELU1 ? has_r : (omega_r.rows() != omega_p.cols() || omega_r.cols() != omega_p.cols()))
        fail(variant == Variant::RELU1 ? "unexpected omega_r" : "omega_r must be h x h");
      if (theta.size()) fail("unexpected theta");
      break;
  }
}

namespace {

Matrix uniform_fan_in(std::int64_t rows, std::int64_t cols, Rng& rng) {
  const double b = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(-b, b);
  return m;
}

}  // namespace

ModelParams init_params(Variant variant, std::int64_t d, std::int64_t hidden, int classes, int k, int beta,
                        Rng& rng) {
  ModelParams p;
  p.variant = variant;
  p.k = k;
  p.beta = beta;
  switch (variant) {
    case Variant::LINEAR:
      p.omega_f = uniform_fan_in(d, classes, rng);
      break;
    case Variant::POLY:
      p.omega_f = uniform_fan_in(d, classes, rng);
      p.theta = Vector::Constant(k + 1, 1.0 / (k + 1));
      break;
    case Variant::RELU1:
      p.omega_p = uniform_fan_in(d, hidden, rng);
      p.omega_f = uniform_fan_in(hidden, classes, rng);
      break;
    case Variant::GENERAL:
    case Variant::W:
      p.omega_p = uniform_fan_in(d, hidden, rng);
      p.omega_r = uniform_fan_in(hidden, hidden, rng);
      p.omega_f = uniform_fan_in(hidden, classes, rng);
      break;
  }
  return p;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (runs < 1) throw Error("runs must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw Error("moment decays must lie in [0, 1)");
  if (weight_decay < 0.0) throw Error("weight decay must be nonnegative");
  if (hidden < 1) throw Error("hidden width must be positive");
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

Matrix relu(const Matrix& a) { return a.cwiseMax(0.0); }

Matrix relu_grad(const Matrix& upstream, const Matrix& pre) {
  return (pre.array() > 0.0).select(upstream, 0.0);
}

void append_pattern(std::vector<std::uint8_t>& out, const Matrix& pre) {
  for (Eigen::Index i = 0; i < pre.size(); ++i) out.push_back(pre.data()[i] > 0.0);
}

// (S^T)^steps x
Matrix apply_transposed_power(const Aggregator& agg, Matrix x, int steps) {
  Matrix next;
  for (int t = 0; t < steps; ++t) {
    agg.apply_transposed(x, next);
    x.swap(next);
  }
  return x;
}

}  // namespace

struct Objective::Trace {
  Matrix logits;
  Matrix embedding;            // input to omega_f (LINEAR, POLY, RELU1)
  std::vector<Matrix> hidden;  // GENERAL: H^0..H^k; RELU1: H0, H1
  std::vector<Matrix> mixed;   // GENERAL: M H^(t-1)
  std::vector<Matrix> pre;     // ReLU pre-activations
  std::vector<Matrix> r_pow;   // W: omega_r^0..omega_r^k
  Matrix propagated;           // W: S^k X omega_p
};

Objective::Objective(Variant variant, Aggregator agg, Matrix features, Labels labels, std::vector<Role> roles, int k,
                     bool normalize, double weight_decay)
    : variant_(variant),
      agg_(std::move(agg)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      k_(k),
      beta_(agg_->shift()),
      weight_decay_(weight_decay) {
  if (k < 0) throw Error("k must be nonnegative");
  if (variant == Variant::RELU1 && k < 1) throw Error("relu1 needs k >= 1");
  if (features_.rows() != agg_->size()) throw Error("features and aggregator disagree on node count");
  if (static_cast<std::int64_t>(roles.size()) != agg_->size()) throw Error("mask count does not match node count");
  if (normalize && variant != Variant::LINEAR) throw Error("propagation normalization applies to the linear variant only");
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(roles.size()); ++i) {
    if (roles[i] == Role::Train) train_.push_back(i);
    else if (roles[i] == Role::Val) val_.push_back(i);
    else if (roles[i] == Role::Test) test_.push_back(i);
  }
  if (train_.empty()) throw Error("empty train mask");
  if (variant == Variant::LINEAR) {
    embedding_ = propagate(*agg_, features_, k, normalize).values;
  } else if (variant == Variant::POLY) {
    powers_.push_back(features_);
    for (int i = 1; i <= k; ++i) {
      Matrix next;
      agg_->apply(powers_.back(), next);
      powers_.push_back(std::move(next));
    }
  }
}

Objective Objective::linear_on(Embedding embedding, Labels labels, std::vector<Role> roles, double weight_decay) {
  Objective o;
  o.variant_ = Variant::LINEAR;
  o.labels_ = std::move(labels);
  o.k_ = embedding.k;
  o.beta_ = embedding.beta;
  o.weight_decay_ = weight_decay;
  o.embedding_ = std::move(embedding.values);
  if (static_cast<std::int64_t>(roles.size()) != o.embedding_.rows()) throw Error("mask count does not match node count");
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(roles.size()); ++i) {
    if (roles[i] == Role::Train) o.train_.push_back(i);
    else if (roles[i] == Role::Val) o.val_.push_back(i);
    else if (roles[i] == Role::Test) o.test_.push_back(i);
  }
  if (o.train_.empty()) throw Error("empty train mask");
  return o;
}

std::int64_t Objective::input_dim() const {
  return variant_ == Variant::LINEAR ? embedding_.cols() : features_.cols();
}

const std::vector<std::int64_t>& Objective::nodes(Role r) const {
  switch (r) {
    case Role::Train: return train_;
    case Role::Val: return val_;
    case Role::Test: return test_;
    case Role::None: break;
  }
  throw Error("no node list for role 'none'");
}

ModelParams Objective::init(std::int64_t hidden, Rng& rng) const {
  return init_params(variant_, input_dim(), hidden, num_classes(), k_, beta_, rng);
}

Objective::Trace Objective::run_forward(const ModelParams& p, bool keep) const {
  if (p.variant != variant_) throw Error("parameter variant does not match objective");
  if (p.k != k_) throw Error("parameter k=" + std::to_string(p.k) + " does not match objective k=" + std::to_string(k_));
  if (p.beta != beta_) throw Error("parameter beta does not match aggregator shift");
  p.validate(input_dim(), num_classes());

  Trace tr;
  const double beta = beta_;
  switch (variant_) {
    case Variant::LINEAR:
      tr.logits = embedding_ * p.omega_f;
      break;
    case Variant::POLY: {
      Matrix e = p.theta[0] * powers_[0];
      for (int i = 1; i <= k_; ++i) e += p.theta[i] * powers_[i];
      tr.logits = e * p.omega_f;
      if (keep) tr.embedding = std::move(e);
      break;
    }
    case Variant::RELU1: {
      Matrix h0 = features_ * p.omega_p;
      Matrix a1;
      agg_->matrix().multiply(h0, a1);
      Matrix h1 = relu(a1) + beta * h0;
      Embedding e = propagate(*agg_, h1, k_ - 1, false);
      tr.logits = e.values * p.omega_f;
      tr.pre.push_back(std::move(a1));
      if (keep) tr.embedding = std::move(e.values);
      break;
    }
    case Variant::GENERAL: {
      tr.hidden.push_back(features_ * p.omega_p);
      for (int t = 1; t <= k_; ++t) {
        Matrix mixed;
        agg_->matrix().multiply(tr.hidden.back(), mixed);
        Matrix a = mixed * p.omega_r;
        Matrix next = relu(a) + beta * tr.hidden.back();
        tr.pre.push_back(std::move(a));
        tr.mixed.push_back(std::move(mixed));
        tr.hidden.push_back(std::move(next));
      }
      tr.logits = tr.hidden.back() * p.omega_f;
      break;
    }
    case Variant::W: {
      const auto h = p.omega_r.rows();
      tr.r_pow.push_back(Matrix::Identity(h, h));
      for (int t = 1; t <= k_; ++t) tr.r_pow.push_back(tr.r_pow.back() * p.omega_r);
      tr.propagated = propagate(*agg_, features_ * p.omega_p, k_, false).values;
      tr.embedding = tr.propagated * tr.r_pow.back();
      tr.logits = tr.embedding * p.omega_f;
      break;
    }
  }
  if (!tr.logits.allFinite()) throw Error("non-finite logits");
  return tr;
}

Matrix Objective::logits(const ModelParams& params) const { return run_forward(params, false).logits; }

std::vector<std::uint8_t> Objective::relu_pattern(const ModelParams& params) const {
  std::vector<std::uint8_t> out;
  for (const auto& a : run_forward(params, false).pre) append_pattern(out, a);
  return out;
}

double Objective::data_loss(const Matrix& logits, Matrix* dlogits) const {
  const int c = num_classes();
  const double inv_t = 1.0 / static_cast<double>(train_.size());
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  double total = 0.0;
  if (!labels_.multilabel) {
    for (auto i : train_) {
      const auto z = logits.row(i);
      const double top = z.maxCoeff();
      const double lse = top + std::log((z.array() - top).exp().sum());
      total += lse - z(labels_.single[i]);
      if (dlogits) {
        auto g = dlogits->row(i);
        g = ((z.array() - lse).exp() * inv_t).matrix();
        g(labels_.single[i]) -= inv_t;
      }
    }
    return total * inv_t;
  }
  const double inv_tc = inv_t / c;
  for (auto i : train_)
    for (int j = 0; j < c; ++j) {
      const double z = logits(i, j);
      const double y = labels_.multi_at(i, j);
      total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      if (dlogits) {
        const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        (*dlogits)(i, j) = (s - y) * inv_tc;
      }
    }
  return total * inv_tc;
}

namespace {

double decay_term(const ModelParams& p, double wd) {
  if (wd == 0.0) return 0.0;
  double sq = 0.0;
  p.for_each_tensor([&](Eigen::Map<const Vector> t) { sq += t.squaredNorm(); });
  return 0.5 * wd * sq;
}

}  // namespace

double Objective::loss(const ModelParams& params) const {
  return data_loss(logits(params), nullptr) + decay_term(params, weight_decay_);
}

LossGrad Objective::evaluate(const ModelParams& p) const {
  Trace tr = run_forward(p, true);
  LossGrad out;
  Matrix g;
  out.loss = data_loss(tr.logits, &g) + decay_term(p, weight_decay_);
  out.grad = p.zeros_like();
  ModelParams& grad = out.grad;
  const double beta = beta_;

  switch (variant_) {
    case Variant::LINEAR:
      grad.omega_f = embedding_.transpose() * g;
      break;
    case Variant::POLY: {
      grad.omega_f = tr.embedding.transpose() * g;
      const Matrix up = g * p.omega_f.transpose();
      for (int i = 0; i <= k_; ++i) grad.theta[i] = powers_[i].cwiseProduct(up).sum();
      break;
    }
    case Variant::RELU1: {
      grad.omega_f = tr.embedding.transpose() * g;
      const Matrix g_h1 = apply_transposed_power(*agg_, g * p.omega_f.transpose(), k_ - 1);
      Matrix g_h0;
      agg_->transposed().multiply(relu_grad(g_h1, tr.pre[0]), g_h0);
      if (beta != 0.0) g_h0 += beta * g_h1;
      grad.omega_p = features_.transpose() * g_h0;
      break;
    }
    case Variant::GENERAL: {
      grad.omega_f = tr.hidden.back().transpose() * g;
      Matrix up = g * p.omega_f.transpose();
      for (int t = k_; t >= 1; --t) {
        const Matrix g_a = relu_grad(up, tr.pre[t - 1]);
        grad.omega_r += tr.mixed[t - 1].transpose() * g_a;
        Matrix down;
        agg_->transposed().multiply(g_a * p.omega_r.transpose(), down);
        if (beta != 0.0) down += beta * up;
        up.swap(down);
      }
      grad.omega_p = features_.transpose() * up;
      break;
    }
    case Variant::W: {
      grad.omega_f = tr.embedding.transpose() * g;
      const Matrix up = g * p.omega_f.transpose();
      const Matrix v = tr.propagated.transpose() * up;
      for (int j = 0; j < k_; ++j) grad.omega_r += tr.r_pow[j].transpose() * v * tr.r_pow[k_ - 1 - j].transpose();
      const Matrix g_h = apply_transposed_power(*agg_, up * tr.r_pow[k_].transpose(), k_);
      grad.omega_p = features_.transpose() * g_h;
      break;
    }
  }

  if (weight_decay_ != 0.0) {
    std::vector<Eigen::Map<const Vector>> src;
    p.for_each_tensor([&](Eigen::Map<const Vector> t) { src.push_back(t); });
    std::size_t idx = 0;
    grad.for_each_tensor([&](Eigen::Map<Vector> t) { t += weight_decay_ * src[idx++]; });
  }
  out.logits = std::move(tr.logits);
  return out;
}

Matrix forward(Variant variant, const Aggregator& agg, const Matrix& x, const ModelParams& params) {
  if (params.variant != variant) throw Error("parameter variant does not match requested variant");
  if (params.beta != agg.shift()) throw Error("parameter beta does not match aggregator shift");
  switch (variant) {
    case Variant::LINEAR:
      params.validate(x.cols(), static_cast<int>(params.omega_f.cols()));
      return propagate(agg, x, params.k, false).values * params.omega_f;
    case Variant::POLY:
      params.validate(x.cols(), static_cast<int>(params.omega_f.cols()));
      return polynomial_propagate(agg, x, std::span<const double>(params.theta.data(), params.theta.size())).values *
             params.omega_f;
    default: {
      Labels dummy;
      dummy.num_classes = static_cast<int>(params.omega_f.cols());
      dummy.single.assign(x.rows(), 0);
      std::vector<Role> roles(x.rows(), Role::Train);
      return Objective(variant, agg, x, std::move(dummy), std::move(roles), params.k).logits(params);
    }
  }
}

LossGrad loss_and_grad(Variant variant, const Aggregator& agg, const Matrix& x, const Labels& labels,
                       const std::vector<Role>& roles, const ModelParams& params, double weight_decay) {
  return Objective(variant, agg, x, labels, roles, params.k, false, weight_decay).evaluate(params);
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Adam {
  std::vector<Vector> m, v;
  int step = 0;

  void update(ModelParams& params, const ModelParams& grad, const TrainConfig& cfg) {
    std::vector<Eigen::Map<const Vector>> g;
    grad.for_each_tensor([&](Eigen::Map<const Vector> t) { g.push_back(t); });
    if (m.empty())
      for (const auto& t : g) {
        m.push_back(Vector::Zero(t.size()));
        v.push_back(Vector::Zero(t.size()));
      }
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, step);
    const double c2 = 1.0 - std::pow(cfg.beta2, step);
    std::size_t idx = 0;
    params.for_each_tensor([&](Eigen::Map<Vector> w) {
      auto& mi = m[idx];
      auto& vi = v[idx];
      const auto& gi = g[idx];
      mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * gi;
      vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * gi.cwiseAbs2();
      w.array() -= cfg.learning_rate * (mi.array() / c1) / ((vi.array() / c2).sqrt() + cfg.adam_eps);
      ++idx;
    });
  }
};

}  // namespace

TrainResult train(const Objective& objective, const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  ModelParams params = objective.init(config.hidden, rng);
  const auto& val = objective.nodes(Role::Val);

  TrainResult result;
  result.params = params;
  double best_val = -std::numeric_limits<double>::infinity();
  Adam adam;
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    LossGrad lg = objective.evaluate(params);
    if (!std::isfinite(lg.loss)) throw Error("training diverged (loss is not finite) at epoch " + std::to_string(epoch));
    if (!val.empty()) {
      const double metric = task_metric(lg.logits, objective.labels(), val);
      if (metric >= best_val) {
        best_val = metric;
        result.params = params;
        result.best_epoch = epoch;
      }
    }
    result.final_loss = lg.loss;
    if (epoch == config.epochs) break;
    adam.update(params, lg.grad, config);
  }
  if (val.empty()) {
    result.params = params;
    result.best_epoch = config.epochs;
  } else {
    result.val_metric = best_val;
  }
  const auto& test = objective.nodes(Role::Test);
  if (!test.empty()) result.test_metric = task_metric(objective.logits(result.params), objective.labels(), test);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult train(Variant variant, const Aggregator& agg, const Graph& g, const TrainConfig& config, int k,
                  bool normalize) {
  Objective obj(variant, agg, g.features(), g.labels(), g.roles(), k, normalize, config.weight_decay);
  return train(obj, config);
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckResult grad_check(Variant variant, const GradCheckDims& dims, std::uint64_t seed) {
  if (dims.n > 30) throw Error("grad_check is meant for n <= 30");
  Rng rng(seed);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::int64_t i = 1; i < dims.n; ++i) edges.emplace_back(i, rng.below(i));  // spanning tree
  for (std::int64_t e = 0; e < dims.n; ++e) {
    const auto u = static_cast<std::int64_t>(rng.below(dims.n));
    const auto v = static_cast<std::int64_t>(rng.below(dims.n));
    if (u != v) edges.emplace_back(u, v);
  }
  Matrix x(dims.n, dims.d);
  for (std::int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();

  Labels labels;
  labels.num_classes = dims.classes;
  labels.multilabel = dims.multilabel;
  std::vector<Role> roles(dims.n, Role::Val);
  for (std::int64_t i = 0; i < dims.n; ++i) {
    if (dims.multilabel) {
      for (int c = 0; c < dims.classes; ++c) labels.multi.push_back(rng.uniform() < 0.5);
    } else {
      labels.single.push_back(static_cast<int>(i % dims.classes));
    }
    if (i < 2 * dims.n / 3) roles[i] = Role::Train;
  }
  const Graph g(symmetric_adjacency(dims.n, edges), x, labels, roles);
  const Aggregator agg = build_dad(g).with_shift(dims.beta);
  const Objective obj(variant, agg, g.features(), g.labels(), g.roles(), dims.k, false, dims.weight_decay);

  ModelParams params = obj.init(dims.hidden, rng);
  if (variant == Variant::POLY)
    for (auto& t : params.theta) t = rng.uniform(-1.0, 1.0);
  const LossGrad analytic = obj.evaluate(params);

  std::vector<Eigen::Map<const Vector>> grads;
  analytic.grad.for_each_tensor([&](Eigen::Map<const Vector> t) { grads.push_back(t); });

  GradCheckResult res;
  std::vector<Eigen::Map<Vector>> tensors;
  params.for_each_tensor([&](Eigen::Map<Vector> t) { tensors.push_back(t); });
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    auto& t = tensors[ti];
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      const double orig = t[j];
      t[j] = orig + dims.step;
      const double up = obj.loss(params);
      const auto pattern_up = obj.relu_pattern(params);
      t[j] = orig - dims.step;
      const double down = obj.loss(params);
      const auto pattern_down = obj.relu_pattern(params);
      t[j] = orig;
      if (pattern_up != pattern_down) {
        ++res.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * dims.step);
      const double a = grads[ti][j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      res.max_rel_error = std::max(res.max_rel_error, rel);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace spic
