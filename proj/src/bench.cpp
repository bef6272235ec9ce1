#include "spic/bench.hpp"

#include <algorithm>
#include <chrono>

#include "spic/export.hpp"
#include "spic/metrics.hpp"
#include "spic/propagation.hpp"

namespace spic {

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dad: return "dad";
    case ModelKind::Da: return "da";
    case ModelKind::Agnn: return "agnn";
    case ModelKind::GatSym: return "gat_sym";
    case ModelKind::GatAsym: return "gat_asym";
    case ModelKind::RlSym: return "rl_sym";
    case ModelKind::RlAsym: return "rl_am";
    case ModelKind::Appnp: return "appnp";
    case ModelKind::Poly: return "poly";
  }
  return "?";
}

ModelKind parse_model(const std::string& s) {
  for (auto k : {ModelKind::Dad, ModelKind::Da, ModelKind::Agnn, ModelKind::GatSym, ModelKind::GatAsym, ModelKind::RlSym,
                 ModelKind::RlAsym, ModelKind::Appnp, ModelKind::Poly})
    if (s == model_name(k)) return k;
  throw Error("unknown model '" + s + "'");
}

bool is_random_family(ModelKind kind) {
  return kind == ModelKind::GatSym || kind == ModelKind::GatAsym || kind == ModelKind::RlSym ||
         kind == ModelKind::RlAsym;
}

Variant ModelSpec::effective_variant() const {
  if (kind == ModelKind::Appnp) return Variant::LINEAR;
  if (kind == ModelKind::Poly) return Variant::POLY;
  return variant;
}

std::string ModelSpec::id() const {
  std::string s = model_name(kind);
  const Variant v = effective_variant();
  if (kind != ModelKind::Appnp && kind != ModelKind::Poly && v != Variant::LINEAR) s += std::string("_") + variant_name(v);
  return s;
}

Aggregator build_model_aggregator(const ModelSpec& spec, const Graph& g, std::uint64_t seed) {
  const std::uint64_t agg_seed = seed ^ 0x3c6ef372fe94f82bULL;
  Aggregator agg = [&] {
    switch (spec.kind) {
      case ModelKind::Da: return build_da(g);
      case ModelKind::Agnn: return build_agnn(g, spec.agnn_eps);
      case ModelKind::GatSym:
      case ModelKind::GatAsym:
        return build_gat(g, AttentionParams::random(g.num_features(), spec.attention_hidden, agg_seed),
                         spec.kind == ModelKind::GatSym);
      case ModelKind::RlSym: return build_random_laplacian(g, true, agg_seed);
      case ModelKind::RlAsym: return build_random_laplacian(g, false, agg_seed);
      case ModelKind::Dad:
      case ModelKind::Appnp:
      case ModelKind::Poly: break;
    }
    return build_dad(g);
  }();
  return agg.with_shift(spec.beta);
}

std::string DataSpec::id() const {
  if (!name.empty()) return name;
  std::string s;
  if (sbm) {
    s = "sbm" + std::to_string(sbm->blocks()) + "x" + std::to_string(sbm->sizes.front());
  } else {
    s = dir.filename().string();
    if (s.empty()) s = dir.parent_path().filename().string();
  }
  if (keep_features) s += "_" + std::to_string(*keep_features);
  if (random_features) s += "_rf" + std::to_string(*random_features);
  return s;
}

Graph load_data(const DataSpec& data) {
  Graph g = data.sbm ? generate_sbm(*data.sbm, data.sbm_features, data.feature_mode) : load_graph(data.dir);
  if (data.keep_features) g = reduce_features(g, *data.keep_features);
  if (data.random_features) g = randomize_features(g, *data.random_features, data.feature_seed);
  return g;
}

double RunReport::seconds_per_run() const { return seconds.empty() ? 0.0 : spic::mean(seconds); }

namespace {

struct Candidate {
  std::vector<double> test, val, seconds;
};

}  // namespace

RunReport run_experiment(const ModelSpec& model, const Graph& g, const std::string& dataset_id,
                         const TrainConfig& config) {
  config.validate();
  if (model.k_values.empty()) throw Error("no k value given");
  const Variant variant = model.effective_variant();
  if (model.kind == ModelKind::Appnp && !(model.alpha > 0.0 && model.alpha < 1.0))
    throw Error("alpha must be in (0,1)");
  if (model.normalize.value_or(false) && (variant != Variant::LINEAR || model.kind == ModelKind::Appnp))
    throw Error("normalization applies to linear propagation only");

  auto make_objective = [&](int k, std::uint64_t seed) {
    const Aggregator agg = build_model_aggregator(model, g, seed);
    if (model.kind == ModelKind::Appnp)
      return Objective::linear_on(appnp_propagate(agg, g.features(), model.alpha, k), g.labels(), g.roles(),
                                  config.weight_decay);
    const bool normalize = variant == Variant::LINEAR && model.normalize.value_or(default_normalize(k));
    return Objective(variant, agg, g.features(), g.labels(), g.roles(), k, normalize, config.weight_decay);
  };

  std::vector<Candidate> candidates;
  for (int k : model.k_values) {
    Candidate cand;
    const bool redraw = is_random_family(model.kind);
    std::optional<Objective> shared;
    double setup = 0.0;
    if (!redraw) {
      const auto t0 = std::chrono::steady_clock::now();
      shared.emplace(make_objective(k, config.seed));
      setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / config.runs;
    }
    for (int r = 0; r < config.runs; ++r) {
      TrainConfig run_cfg = config;
      run_cfg.seed = config.seed + static_cast<std::uint64_t>(r);
      const auto t0 = std::chrono::steady_clock::now();
      const TrainResult res = redraw ? train(make_objective(k, run_cfg.seed), run_cfg) : train(*shared, run_cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() + setup;
      cand.test.push_back(res.test_metric);
      cand.val.push_back(res.val_metric);
      cand.seconds.push_back(secs);
    }
    candidates.push_back(std::move(cand));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (mean(candidates[i].val) > mean(candidates[best].val)) best = i;

  RunReport rep;
  rep.model = model.id();
  rep.dataset = dataset_id;
  rep.k = model.k_values[best];
  rep.beta = model.beta;
  rep.metric = g.multilabel() ? "micro_f1" : "accuracy";
  rep.test_metrics = candidates[best].test;
  rep.val_metrics = candidates[best].val;
  rep.seconds = candidates[best].seconds;
  rep.mean = mean(rep.test_metrics);
  rep.std = sample_std(rep.test_metrics);
  rep.epochs = config.epochs;
  rep.runs = config.runs;
  rep.seed_base = config.seed;
  return rep;
}

RunReport run_experiment(const ModelSpec& model, const DataSpec& data, const TrainConfig& config) {
  return run_experiment(model, load_data(data), data.id(), config);
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "k") return SweepAxis::K;
  if (s == "beta") return SweepAxis::Beta;
  if (s == "feature_dim") return SweepAxis::FeatureDim;
  if (s == "model_family") return SweepAxis::ModelFamily;
  throw Error("unknown sweep axis '" + s + "'");
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::K: return "k";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::FeatureDim: return "feature_dim";
    case SweepAxis::ModelFamily: return "model_family";
  }
  return "?";
}

namespace {

int parse_int(const std::string& s, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(std::string("invalid ") + what + " value '" + s + "'");
  return v;
}

}  // namespace

std::vector<RunReport> sweep(SweepAxis axis, std::vector<std::string> values, const ModelSpec& model,
                             const DataSpec& data, const TrainConfig& config) {
  if (values.empty()) throw Error("sweep needs at least one value");
  const char* name = sweep_axis_name(axis);
  if (axis == SweepAxis::ModelFamily) {
    for (const auto& v : values) parse_model(v);
    std::sort(values.begin(), values.end());
  } else {
    std::sort(values.begin(), values.end(),
              [&](const std::string& a, const std::string& b) { return parse_int(a, name) < parse_int(b, name); });
  }

  std::vector<RunReport> reports;
  std::optional<Graph> base;
  if (axis != SweepAxis::FeatureDim) base.emplace(load_data(data));
  for (const auto& v : values) {
    ModelSpec m = model;
    DataSpec d = data;
    switch (axis) {
      case SweepAxis::K: m.k_values = {parse_int(v, name)}; break;
      case SweepAxis::Beta: m.beta = parse_int(v, name); break;
      case SweepAxis::ModelFamily: m.kind = parse_model(v); break;
      case SweepAxis::FeatureDim: d.random_features = parse_int(v, name); break;
    }
    reports.push_back(base ? run_experiment(m, *base, d.id(), config) : run_experiment(m, d, config));
  }
  return reports;
}

void write_reports_csv(std::ostream& out, const std::vector<RunReport>& reports) {
  out << "model,dataset,k,beta,runs,epochs,metric,mean,std,seconds_per_run\n";
  for (const auto& r : reports)
    out << r.model << ',' << r.dataset << ',' << r.k << ',' << r.beta << ',' << r.runs << ',' << r.epochs << ','
        << r.metric << ',' << format_sig6(r.mean) << ',' << format_sig6(r.std) << ','
        << format_sig6(r.seconds_per_run()) << '\n';
}

}  // namespace spic
