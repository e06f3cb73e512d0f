#include "afop/cli.hpp"

#include "afop/dataset_io.hpp"
#include "afop/eval.hpp"
#include "afop/features.hpp"
#include "afop/parallel.hpp"
#include "afop/pretrain.hpp"
#include "afop/splits.hpp"
#include "afop/synth.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <vector>

namespace afop {

namespace {

struct SplitArgs {
  std::string protocol = "closedSet";
  int fold = 0;
  std::string held_in = "Resin";

  ProtocolSpec spec() const {
    ProtocolSpec p;
    p.protocol = parse_protocol(protocol);
    p.fold = fold;
    p.held_in = parse_material(held_in);
    return p;
  }
};

void add_split_options(CLI::App* cmd, SplitArgs& args) {
  cmd->add_option("--protocol", args.protocol, "evaluation protocol")
      ->check(CLI::IsMember({"closedSet", "crossShape", "crossMaterial", "forceSpeed"}))
      ->capture_default_str();
  cmd->add_option("--fold", args.fold, "crossShape fold (0..2)")
      ->check(CLI::Range(0, 2))
      ->capture_default_str();
  cmd->add_option("--held-in", args.held_in, "crossMaterial training material")
      ->check(CLI::IsMember({"Resin", "Wood", "Aluminum"}))
      ->capture_default_str();
}

struct SplitData {
  SplitSpec split;
  Eigen::MatrixXd X_train, X_test;
  std::vector<int> y_train, y_test;
};

SplitData materialize_split(const TactileDataset& ds, const ProtocolSpec& protocol,
                            std::uint64_t seed) {
  SplitData out;
  out.split = make_split(ds, protocol, seed);
  out.X_train = extract_feature_matrix(ds, out.split.train_trial_ids);
  out.X_test = extract_feature_matrix(ds, out.split.test_trial_ids);
  for (std::size_t id : out.split.train_trial_ids)
    out.y_train.push_back(ds.trials[id].cls());
  for (std::size_t id : out.split.test_trial_ids)
    out.y_test.push_back(ds.trials[id].cls());
  return out;
}

void print_report(const EvalReport& r) {
  std::printf("%-24s %d-way %d-shot  acc %6.2f%% +- %.2f  (%d episodes)  "
              "pretrain %.2fs  adapt %.2fms  D=%d  pvdf %.1f%%\n",
              r.protocol_id.c_str(), r.spec.n_way, r.spec.k_shot,
              100.0 * r.accuracy_mean, 100.0 * r.ci_halfwidth, r.episodes_run,
              r.pretrain_wall_s, r.adapt_ms_per_episode, r.selected_d,
              100.0 * r.pvdf_frac);
}

int dispatch(CLI::App& app, const std::function<int()>& handler) {
  (void)app;
  return handler();
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("afop");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : full) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Few-shot tactile object recognition from multi-channel touch sweeps"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")
      ->capture_default_str();

  std::function<int()> handler;

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "generate a synthetic tactile dataset");
  struct {
    std::string out;
    std::uint64_t seed = 0;
    int trials = 60;
    int perturbed = 0;
    double noise = 0.12;
    bool noiseless = false;
  } sy;
  synth->add_option("--out", sy.out, "output dataset (.csv or binary)")->required();
  synth->add_option("--seed", sy.seed, "master seed")->capture_default_str();
  synth->add_option("--trials-per-class", sy.trials, "nominal trials per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth
      ->add_option("--perturbed", sy.perturbed,
                   "extra force/speed-perturbed trials per class")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--noise-sigma", sy.noise, "measurement noise level")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_flag("--noiseless", sy.noiseless, "drop additive measurement noise");
  synth->callback([&] {
    handler = [&]() {
      SynthConfig config;
      config.seed = sy.seed;
      config.trials_per_class = sy.trials;
      config.noise_sigma = sy.noise;
      config.noiseless = sy.noiseless;
      if (sy.perturbed > 0) {
        config.perturbation_grid = default_perturbation_grid();
        config.perturbed_trials_per_class = sy.perturbed;
      }
      const TactileDataset ds = synth_dataset(config);
      write_dataset(ds, sy.out);
      std::printf("wrote %zu trials (%d classes) to %s\n", ds.size(), ds.num_classes(),
                  sy.out.c_str());
      return 0;
    };
  });

  // --- extract ---
  auto* extract = app.add_subcommand("extract", "extract the feature matrix");
  struct {
    std::string data, out;
  } ex;
  extract->add_option("--data", ex.data, "input dataset")->required();
  extract->add_option("--out", ex.out, "output feature CSV")->required();
  extract->callback([&] {
    handler = [&]() {
      const TactileDataset ds = load_dataset(ex.data);
      const Eigen::MatrixXd X = extract_feature_matrix(ds);
      const FeatureCatalog& cat = feature_catalog();
      std::ofstream out(ex.out);
      if (!out) throw IoError("cannot open " + ex.out + " for writing");
      out << "trial_id,class_id,shape_id,material";
      for (const CatalogEntry& e : cat.entries) out << ',' << e.name;
      out << '\n';
      char buf[64];
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const TactileTrial& t = ds.trials[i];
        out << t.trial_index << ',' << t.cls() << ',' << t.shape_id << ','
            << material_name(t.material);
        for (int j = 0; j < X.cols(); ++j) {
          std::snprintf(buf, sizeof buf, ",%.17g", X(static_cast<long>(i), j));
          out << buf;
        }
        out << '\n';
      }
      if (!out) throw IoError("write failed for " + ex.out);
      std::printf("wrote %ld x %ld features to %s\n", static_cast<long>(X.rows()),
                  static_cast<long>(X.cols()), ex.out.c_str());
      return 0;
    };
  });

  // --- pretrain ---
  auto* pre = app.add_subcommand("pretrain", "fit the frozen feature map on a split");
  struct {
    std::string data, out, dscan_csv;
    SplitArgs split;
    std::uint64_t seed = 0;
    int nca_iters = 30;
    int dscan_episodes = 200;
  } pt;
  pre->add_option("--data", pt.data, "input dataset")->required();
  pre->add_option("--out", pt.out, "output model JSON")->required();
  add_split_options(pre, pt.split);
  pre->add_option("--seed", pt.seed, "split/episode seed")->capture_default_str();
  pre->add_option("--nca-iters", pt.nca_iters, "feature-weight ascent iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre->add_option("--dscan-episodes", pt.dscan_episodes, "validation episodes per D")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  pre->add_option("--dscan-csv", pt.dscan_csv, "also write the D-scan curve CSV");
  pre->callback([&] {
    handler = [&]() {
      const TactileDataset ds = load_dataset(pt.data);
      const SplitData sd = materialize_split(ds, pt.split.spec(), pt.seed);
      PretrainConfig config;
      config.nca.max_iters = pt.nca_iters;
      config.nca.seed = pt.seed;
      config.dscan.episodes_per_d = pt.dscan_episodes;
      config.dscan.seed = pt.seed;
      const PretrainedModel model = pretrain(sd.X_train, sd.y_train, config);
      save_model(model, pt.out);
      if (!pt.dscan_csv.empty()) write_dscan_curve_csv(model.dscan, pt.dscan_csv);
      std::printf("pretrained on %ld trials in %.2fs: D=%d, top importance %.4g\n",
                  static_cast<long>(sd.X_train.rows()), model.pretrain_wall_time_s,
                  model.selected_d, model.nca_weights.weights.maxCoeff());
      return 0;
    };
  });

  // --- eval / baseline ---
  struct EvalArgs {
    std::string data, report_path, table_path;
    SplitArgs split;
    std::uint64_t seed = 0;
    int n_way = 5, k_shot = 1, q_query = 15, episodes = 500;
    int steps = 250, nca_iters = 30, dscan_episodes = 200;
    double alpha = 10.0, lr = 1.5e-3;
  };
  auto add_eval_options = [](CLI::App* cmd, EvalArgs& a, bool with_adapt) {
    cmd->add_option("--data", a.data, "input dataset")->required();
    add_split_options(cmd, a.split);
    cmd->add_option("--seed", a.seed, "split/episode seed")->capture_default_str();
    cmd->add_option("--n-way", a.n_way, "classes per episode")
        ->check(CLI::Range(2, kNumClasses))
        ->capture_default_str();
    cmd->add_option("--k-shot", a.k_shot, "support samples per class")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--q-query", a.q_query, "query samples per class")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--episodes", a.episodes, "episodes per fold")
        ->check(CLI::Range(2, 10000000))
        ->capture_default_str();
    cmd->add_option("--report", a.report_path, "write the summary report JSON");
    cmd->add_option("--table", a.table_path, "write per-fold + summary CSV");
    if (with_adapt) {
      cmd->add_option("--alpha", a.alpha, "cosine temperature")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
      cmd->add_option("--steps", a.steps, "per-episode optimizer steps")
          ->check(CLI::NonNegativeNumber)
          ->capture_default_str();
      cmd->add_option("--lr", a.lr, "per-episode learning rate")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
      cmd->add_option("--nca-iters", a.nca_iters, "feature-weight ascent iterations")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
      cmd->add_option("--dscan-episodes", a.dscan_episodes, "validation episodes per D")
          ->check(CLI::Range(2, 1000000))
          ->capture_default_str();
    }
  };
  auto run_eval = [](const EvalArgs& a, bool baseline) {
    const TactileDataset ds = load_dataset(a.data);
    EpisodeSpec spec;
    spec.n_way = a.n_way;
    spec.k_shot = a.k_shot;
    spec.q_query = a.q_query;
    spec.seed = a.seed;
    EvalConfig config;
    config.episodes = a.episodes;
    config.alpha = a.alpha;
    config.adapt.steps = a.steps;
    config.adapt.learning_rate = a.lr;
    config.pretrain.nca.max_iters = a.nca_iters;
    config.pretrain.nca.seed = a.seed;
    config.pretrain.dscan.episodes_per_d = a.dscan_episodes;
    config.pretrain.dscan.seed = a.seed;
    config.pretrain.dscan.alpha = a.alpha;
    const ProtocolRun run = baseline
                                ? run_baseline_direct_prot(ds, a.split.spec(), spec, config)
                                : run_protocol(ds, a.split.spec(), spec, config);
    for (const EvalReport& r : run.per_fold) print_report(r);
    if (run.per_fold.size() > 1) print_report(run.summary);
    if (!a.report_path.empty()) save_report_json(run.summary, a.report_path);
    if (!a.table_path.empty()) {
      std::vector<EvalReport> rows = run.per_fold;
      if (run.per_fold.size() > 1) rows.push_back(run.summary);
      write_report_table_csv(rows, a.table_path);
    }
    return 0;
  };

  auto* eval = app.add_subcommand("eval", "episodic evaluation with the adapted head");
  EvalArgs ev;
  add_eval_options(eval, ev, true);
  eval->callback([&] { handler = [&]() { return run_eval(ev, false); }; });

  auto* base = app.add_subcommand(
      "baseline", "prototype-only baseline on all features, no per-episode fitting");
  EvalArgs ba;
  add_eval_options(base, ba, false);
  base->callback([&] { handler = [&]() { return run_eval(ba, true); }; });

  // --- diagnose ---
  auto* diag = app.add_subcommand("diagnose", "embedding-space structure metrics");
  struct {
    std::string data, out;
    SplitArgs split;
    std::uint64_t seed = 0;
    int nca_iters = 30, dscan_episodes = 200;
  } dg;
  diag->add_option("--data", dg.data, "input dataset")->required();
  add_split_options(diag, dg.split);
  diag->add_option("--seed", dg.seed, "split seed")->capture_default_str();
  diag->add_option("--nca-iters", dg.nca_iters, "feature-weight ascent iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  diag->add_option("--dscan-episodes", dg.dscan_episodes, "validation episodes per D")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  diag->add_option("--out", dg.out, "write metrics CSV");
  diag->callback([&] {
    handler = [&]() {
      const TactileDataset ds = load_dataset(dg.data);
      const SplitData sd = materialize_split(ds, dg.split.spec(), dg.seed);
      PretrainConfig config;
      config.nca.max_iters = dg.nca_iters;
      config.nca.seed = dg.seed;
      config.dscan.episodes_per_d = dg.dscan_episodes;
      config.dscan.seed = dg.seed;
      const PretrainedModel model = pretrain(sd.X_train, sd.y_train, config);
      std::vector<int> shapes, mats;
      for (std::size_t id : sd.split.test_trial_ids) {
        shapes.push_back(ds.trials[id].shape_id);
        mats.push_back(static_cast<int>(ds.trials[id].material));
      }
      const EmbeddingDiagnostics d =
          embedding_diagnostics(model.embed(sd.X_test), shapes, mats);
      std::printf("1-NN shape accuracy: %.4f\nmaterial mixing:     %.4f\n"
                  "grouping index:      %.4f\n",
                  d.one_nn_shape_acc, d.mix_sil, d.dgi);
      if (!dg.out.empty()) write_diagnostics_csv(d, dg.out);
      return 0;
    };
  });

  // --- dscan-curve ---
  auto* curve = app.add_subcommand("dscan-curve", "write the D selection curve");
  struct {
    std::string data, out;
    SplitArgs split;
    std::uint64_t seed = 0;
    int nca_iters = 30, dscan_episodes = 200;
  } dc;
  curve->add_option("--data", dc.data, "input dataset")->required();
  curve->add_option("--out", dc.out, "output curve CSV")->required();
  add_split_options(curve, dc.split);
  curve->add_option("--seed", dc.seed, "split seed")->capture_default_str();
  curve->add_option("--nca-iters", dc.nca_iters, "feature-weight ascent iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  curve->add_option("--dscan-episodes", dc.dscan_episodes, "validation episodes per D")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  curve->callback([&] {
    handler = [&]() {
      const TactileDataset ds = load_dataset(dc.data);
      const SplitData sd = materialize_split(ds, dc.split.spec(), dc.seed);
      PretrainConfig config;
      config.nca.max_iters = dc.nca_iters;
      config.nca.seed = dc.seed;
      config.dscan.episodes_per_d = dc.dscan_episodes;
      config.dscan.seed = dc.seed;
      const PretrainedModel model = pretrain(sd.X_train, sd.y_train, config);
      write_dscan_curve_csv(model.dscan, dc.out);
      std::printf("selected D = %d; curve written to %s\n", model.selected_d,
                  dc.out.c_str());
      return 0;
    };
  });

  // --- report ---
  auto* rep = app.add_subcommand("report", "combine report JSONs into one table");
  struct {
    std::vector<std::string> inputs;
    std::string out;
  } rp;
  rep->add_option("--inputs", rp.inputs, "report JSON files")->required()->expected(-1);
  rep->add_option("--out", rp.out, "output table CSV")->required();
  rep->callback([&] {
    handler = [&]() {
      std::vector<EvalReport> reports;
      for (const std::string& path : rp.inputs) reports.push_back(load_report_json(path));
      write_report_table_csv(reports, rp.out);
      for (const EvalReport& r : reports) print_report(r);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_max_threads(threads);
    return dispatch(app, handler);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace afop
