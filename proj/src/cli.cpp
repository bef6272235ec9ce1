#include "spic/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spic/bench.hpp"
#include "spic/export.hpp"
#include "spic/metrics.hpp"

namespace spic {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string dir;
  std::string sbm;
  std::uint64_t sbm_seed = 7;
  std::int64_t sbm_features = 64;
  std::string feature_mode = "random-uniform";
  std::int64_t keep_features = 0;
  std::int64_t random_features = 0;
  std::uint64_t feature_seed = 0;
  std::string name;

  void add(CLI::App& app) {
    app.add_option("--data", dir, "SPIC graph directory");
    app.add_option("--sbm", sbm, "generated graph BLOCKSxSIZE:P_IN:P_OUT:LABELED, e.g. 2x200:0.05:0.005:10");
    app.add_option("--sbm-seed", sbm_seed, "seed of the generated graph")->capture_default_str();
    app.add_option("--sbm-features", sbm_features, "feature width of the generated graph")->capture_default_str();
    app.add_option("--feature-mode", feature_mode, "random-uniform | onehot-block-noisy")->capture_default_str();
    app.add_option("--keep-features", keep_features, "keep only the first N feature columns");
    app.add_option("--random-features", random_features, "replace features by N uniform random columns");
    app.add_option("--feature-seed", feature_seed, "seed for --random-features")->capture_default_str();
    app.add_option("--dataset-name", name, "dataset id used in reports");
  }

  DataSpec spec() const {
    if (dir.empty() == sbm.empty()) throw UsageError("exactly one of --data or --sbm is required");
    DataSpec d;
    d.dir = dir;
    d.name = name;
    d.sbm_features = sbm_features;
    d.feature_seed = feature_seed;
    try {
      d.feature_mode = parse_feature_mode(feature_mode);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (keep_features > 0) d.keep_features = keep_features;
    if (random_features > 0) d.random_features = random_features;
    if (!sbm.empty()) d.sbm = parse_sbm(sbm, sbm_seed);
    return d;
  }

  static SbmSpec parse_sbm(const std::string& s, std::uint64_t seed) {
    int blocks = 0, labeled = 0;
    long long size = 0;
    double pin = 0, pout = 0;
    char x = 0, c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(s);
    if (!(in >> blocks >> x >> size >> c1 >> pin >> c2 >> pout >> c3 >> labeled) || x != 'x' || c1 != ':' ||
        c2 != ':' || c3 != ':' || in.peek() != EOF)
      throw UsageError("--sbm expects BLOCKSxSIZE:P_IN:P_OUT:LABELED, got '" + s + "'");
    if (blocks < 1 || size < 1) throw UsageError("--sbm needs positive block count and size");
    return SbmSpec::uniform(blocks, size, pin, pout, labeled, seed);
  }
};

struct ModelFlags {
  std::string model = "dad";
  std::string variant = "linear";
  std::vector<int> k{2};
  int beta = 0;
  double alpha = 0.1;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  double eps = 1.0;
  std::int64_t attention_hidden = 8;
  std::string normalize = "auto";

  void add(CLI::App& app, bool with_k = true) {
    app.add_option("--model", model, "dad | da | agnn | gat_sym | gat_asym | rl_sym | rl_am | appnp | poly")
        ->capture_default_str();
    variant_opt = app.add_option("--variant", variant, "linear | relu1 | general | w")->capture_default_str();
    if (with_k)
      app.add_option("--k", k, "iterations; several values pick the best by validation")
          ->delimiter(',')
          ->capture_default_str();
    app.add_option("--beta", beta, "shift added as beta*I")->capture_default_str();
    alpha_opt = app.add_option("--alpha", alpha, "APPNP teleport probability in (0,1)");
    app.add_option("--eps", eps, "AGNN softmax temperature")->capture_default_str();
    app.add_option("--attention-hidden", attention_hidden, "hidden width of random attention")->capture_default_str();
    app.add_option("--normalize", normalize, "auto | on | off (per-iteration column scaling)")->capture_default_str();
  }

  ModelSpec spec() const {
    ModelSpec m;
    try {
      m.kind = parse_model(model);
      m.variant = parse_variant(variant);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (m.variant == Variant::POLY) throw UsageError("use --model poly for the polynomial variant");
    if (variant_opt->count() && m.variant != Variant::LINEAR && (m.kind == ModelKind::Appnp || m.kind == ModelKind::Poly))
      throw UsageError("--variant applies to dad, da, agnn, gat_* and rl_* models only");
    if (alpha_opt->count() && m.kind != ModelKind::Appnp) throw UsageError("--alpha is only valid with --model appnp");
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must be in (0,1)");
    if (beta < 0) throw UsageError("beta must be nonnegative");
    for (int v : k)
      if (v < 0) throw UsageError("k must be nonnegative");
    if (k.empty()) throw UsageError("--k needs at least one value");
    if (m.effective_variant() == Variant::RELU1)
      for (int v : k)
        if (v < 1) throw UsageError("relu1 needs k >= 1");
    m.k_values = k;
    m.beta = beta;
    m.alpha = alpha;
    m.agnn_eps = eps;
    m.attention_hidden = attention_hidden;
    if (normalize == "on") m.normalize = true;
    else if (normalize == "off") m.normalize = false;
    else if (normalize != "auto") throw UsageError("--normalize expects auto, on or off");
    if (m.normalize.value_or(false) && (m.effective_variant() != Variant::LINEAR || m.kind == ModelKind::Appnp))
      throw UsageError("--normalize on applies to linear propagation only");
    return m;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  void add(CLI::App& app) {
    cfg.runs = 20;
    app.add_option("--lr", cfg.learning_rate, "Adam step size")->capture_default_str();
    app.add_option("--weight-decay", cfg.weight_decay, "L2 penalty on all trainable tensors")->capture_default_str();
    app.add_option("--epochs", cfg.epochs, "epochs per run")->capture_default_str();
    app.add_option("--runs", cfg.runs, "independent runs")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed of the first run")->capture_default_str();
    app.add_option("--hidden", cfg.hidden, "hidden width for relu1/general/w")->capture_default_str();
  }
  TrainConfig spec() const {
    try {
      cfg.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

std::string percent(double v) { return format_sig6(100.0 * v); }

void print_report(std::ostream& out, const RunReport& r) {
  out << r.model << " on " << r.dataset << " (k=" << r.k << ", beta=" << r.beta << ", " << r.runs << " runs): " << r.metric
      << " " << percent(r.mean) << " +- " << percent(r.std) << " %\n";
}

void set_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("SPIC_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"spic: subspace power iteration clustering"};
  app.name("spic");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (fallback: SPIC_THREADS)");

  // run
  auto* run = app.add_subcommand("run", "train and evaluate a model over several runs");
  DataFlags run_data;
  ModelFlags run_model;
  TrainFlags run_train;
  std::string run_out, run_params;
  run_data.add(*run);
  run_model.add(*run);
  run_train.add(*run);
  run->add_option("--out", run_out, "report CSV path");
  run->add_option("--save-params", run_params, "write the first run's retained parameters to this directory");
  run->add_option("--threads", threads, "worker threads");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run one experiment per axis value");
  DataFlags sw_data;
  ModelFlags sw_model;
  TrainFlags sw_train;
  std::string sw_axis, sw_out;
  std::vector<std::string> sw_values;
  sw_data.add(*sw);
  sw_model.add(*sw);
  sw_train.add(*sw);
  sw->add_option("--axis", sw_axis, "k | beta | feature_dim | model_family")->required();
  sw->add_option("--values", sw_values, "comma-separated axis values")->delimiter(',')->required();
  sw->add_option("--out", sw_out, "combined report CSV path");
  sw->add_option("--threads", threads, "worker threads");

  // sbm
  auto* sbm = app.add_subcommand("sbm", "write a stochastic block model graph directory");
  int blocks = 2, labeled = 10;
  std::int64_t size = 200, features = 64;
  double pin = 0.05, pout = 0.005;
  std::uint64_t sbm_seed = 7;
  std::string sbm_mode = "random-uniform", sbm_out;
  sbm->add_option("--blocks", blocks, "number of communities")->capture_default_str();
  sbm->add_option("--size", size, "nodes per community")->capture_default_str();
  sbm->add_option("--pin", pin, "within-community edge probability")->capture_default_str();
  sbm->add_option("--pout", pout, "between-community edge probability")->capture_default_str();
  sbm->add_option("--labeled", labeled, "training nodes per community")->capture_default_str();
  sbm->add_option("--features", features, "feature width")->capture_default_str();
  sbm->add_option("--feature-mode", sbm_mode, "random-uniform | onehot-block-noisy")->capture_default_str();
  sbm->add_option("--seed", sbm_seed, "generator seed")->capture_default_str();
  sbm->add_option("--out", sbm_out, "output directory")->required();

  // entropy
  auto* ent = app.add_subcommand("entropy", "per-node entropy of aggregator rows");
  DataFlags ent_data;
  ModelFlags ent_model;
  std::uint64_t ent_seed = 0;
  int bins = 20;
  std::string ent_out;
  ent_data.add(*ent);
  ent_model.add(*ent, false);
  ent->add_option("--seed", ent_seed, "seed for random aggregators")->capture_default_str();
  ent->add_option("--bins", bins, "histogram bins")->capture_default_str();
  ent->add_option("--out", ent_out, "output directory (entropy.tsv, entropy_hist.csv)")->required();

  // oracle-check
  auto* orc = app.add_subcommand("oracle-check", "power-iteration convergence against the dense eigenbasis");
  DataFlags orc_data;
  ModelFlags orc_model;
  int kmax = 30;
  std::uint64_t orc_seed = 0;
  std::int64_t max_nodes = 2000;
  std::string orc_out;
  orc_data.add(*orc);
  orc_model.add(*orc, false);
  orc->add_option("--kmax", kmax, "last iteration to report")->capture_default_str();
  orc->add_option("--seed", orc_seed, "seed of the random positive start vector")->capture_default_str();
  orc->add_option("--max-nodes", max_nodes, "dense oracle size cap")->capture_default_str();
  orc->add_option("--out", orc_out, "convergence CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    set_threads(threads);
    if (*run) {
      const DataSpec data = run_data.spec();
      const ModelSpec model = run_model.spec();
      const TrainConfig cfg = run_train.spec();
      const Graph g = load_data(data);
      const RunReport rep = run_experiment(model, g, data.id(), cfg);
      print_report(out, rep);
      if (!run_out.empty()) {
        auto f = open_output(run_out);
        write_reports_csv(f, {rep});
      }
      if (!run_params.empty()) {
        ModelSpec chosen = model;
        chosen.k_values = {rep.k};
        const Aggregator agg = build_model_aggregator(chosen, g, cfg.seed);
        const Variant v = chosen.effective_variant();
        const Objective obj =
            chosen.kind == ModelKind::Appnp
                ? Objective::linear_on(appnp_propagate(agg, g.features(), chosen.alpha, rep.k), g.labels(), g.roles(),
                                       cfg.weight_decay)
                : Objective(v, agg, g.features(), g.labels(), g.roles(), rep.k,
                            v == Variant::LINEAR && chosen.normalize.value_or(default_normalize(rep.k)),
                            cfg.weight_decay);
        save_params(train(obj, cfg).params, run_params);
      }
    } else if (*sw) {
      const DataSpec data = sw_data.spec();
      const ModelSpec model = sw_model.spec();
      const TrainConfig cfg = sw_train.spec();
      SweepAxis axis;
      try {
        axis = parse_sweep_axis(sw_axis);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (sw_values.empty()) throw UsageError("--values needs at least one value");
      const auto reports = sweep(axis, sw_values, model, data, cfg);
      for (const auto& r : reports) print_report(out, r);
      if (!sw_out.empty()) {
        auto f = open_output(sw_out);
        write_reports_csv(f, reports);
      }
    } else if (*sbm) {
      if (blocks < 1 || size < 1) throw UsageError("--blocks and --size must be positive");
      FeatureMode mode;
      try {
        mode = parse_feature_mode(sbm_mode);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const Graph g = generate_sbm(SbmSpec::uniform(blocks, size, pin, pout, labeled, sbm_seed), features, mode);
      save_graph(g, sbm_out);
      out << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to " << sbm_out << '\n';
    } else if (*ent) {
      const DataSpec data = ent_data.spec();
      const ModelSpec model = ent_model.spec();
      const Graph g = load_data(data);
      const Vector h = attention_entropy(build_model_aggregator(model, g, ent_seed));
      const std::filesystem::path dir(ent_out);
      {
        auto f = open_output(dir / "entropy.tsv");
        write_entropy_tsv(f, h);
      }
      {
        auto f = open_output(dir / "entropy_hist.csv");
        write_histogram_csv(f, histogram(h, bins));
      }
      out << "mean entropy " << format_sig6(h.mean()) << " over " << h.size() << " nodes\n";
    } else if (*orc) {
      const DataSpec data = orc_data.spec();
      const ModelSpec model = orc_model.spec();
      if (kmax < 0) throw UsageError("--kmax must be nonnegative");
      const Graph g = load_data(data);
      const Aggregator agg = build_model_aggregator(model, g, orc_seed);
      const SpectralDecomposition spec = spectral_oracle(agg, std::nullopt, max_nodes);
      Rng rng(orc_seed);
      Vector v0(g.num_nodes());
      for (auto& v : v0) v = 0.5 + rng.uniform();
      const auto sims = convergence_report(agg, spec, v0, kmax);
      if (!orc_out.empty()) {
        auto f = open_output(orc_out);
        write_convergence_csv(f, sims);
      }
      out << "lambda_1 " << format_sig6(spec.eigenvalues[0]) << ", spectral gap |lambda_2|/|lambda_1| "
          << format_sig6(spec.spectral_gap()) << ", similarity at k=" << kmax << " " << format_sig6(sims.back())
          << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace spic
