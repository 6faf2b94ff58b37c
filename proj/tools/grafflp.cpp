// Command-line front end: synthetic bundles, splits, training, evaluation,
// separability traces, grid sweeps, and timing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "grafflp/bundle.hpp"
#include "grafflp/metrics.hpp"
#include "grafflp/split.hpp"
#include "grafflp/synth.hpp"
#include "grafflp/train.hpp"

namespace {

using namespace grafflp;

struct SynthArgs {
  std::string kind = "grid";
  std::string out;
  std::string name;
  int rows = 30, cols = 30;
  double mine_rate = 0.2;
  int n = 1000;
  double shortcut_rate = 0.05;
  int classes = 18;
  int feature_dim = 8;
  uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  Graph g;
  if (a.kind == "grid") {
    g = generate_grid_graph(a.rows, a.cols, a.mine_rate, a.seed);
  } else if (a.kind == "chain") {
    g = generate_chain_graph(a.n, a.shortcut_rate, a.classes, a.seed, a.feature_dim);
  } else {
    throw std::invalid_argument("synth: unknown kind " + a.kind);
  }
  const std::string name = a.name.empty() ? a.kind : a.name;
  save_bundle(a.out, g, name);
  const auto xi = edge_homophily(g);
  const auto xi_adj = adjusted_homophily(g);
  std::printf("wrote %s: %d nodes, %zu edges, edge homophily %s, adjusted %s\n", a.out.c_str(),
              g.num_nodes, g.edges.size(), xi ? std::to_string(*xi).c_str() : "NA",
              xi_adj ? std::to_string(*xi_adj).c_str() : "NA");
  return 0;
}

struct SplitArgs {
  std::string bundle;
  std::string out;
  SplitConfig cfg;
};

int run_split(const SplitArgs& a) {
  const Graph g = load_bundle(a.bundle);
  const EdgeSplit split = transductive_split(g, a.cfg);
  save_split_manifest(a.out, split);
  auto directed = [](const EdgeList& e) { return 2 * e.size(); };
  std::printf("split %s: train MP %zu (directed %zu) pos %zu | val MP %zu (directed %zu) "
              "pos %zu | test MP %zu (directed %zu) pos %zu\n",
              a.out.c_str(), split.train.message_passing.size(),
              directed(split.train.message_passing), split.train.positives.size(),
              split.val.message_passing.size(), directed(split.val.message_passing),
              split.val.positives.size(), split.test.message_passing.size(),
              directed(split.test.message_passing), split.test.positives.size());
  return 0;
}

struct TrainArgs {
  std::string bundle;
  std::string manifest;
  std::string config;
  std::string checkpoint_out;
  std::string report_out;
  std::string gs_trace_out;
  std::vector<std::string> overrides;
};

TrainConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  TrainConfig cfg;
  if (!path.empty()) cfg = load_train_config(path);
  for (const std::string& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + kv);
    apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int run_train(const TrainArgs& a) {
  const Graph g = load_bundle(a.bundle);
  const EdgeSplit split = load_split_manifest(a.manifest);
  const TrainConfig cfg = resolve_config(a.config, a.overrides);
  TrainResult result = train(g, split, cfg);
  if (!a.checkpoint_out.empty()) save_checkpoint(a.checkpoint_out, result.model);
  if (!a.gs_trace_out.empty()) {
    const EvalBundle bundle = evaluate(result.model, g, split, Role::kTest);
    std::ofstream out(a.gs_trace_out);
    if (!out) throw std::runtime_error("cannot write " + a.gs_trace_out);
    write_gs_csv(out, bundle.gs);
    result.report.gs_trace_path = a.gs_trace_out;
  }
  if (!a.report_out.empty()) save_run_report(a.report_out, result.report);
  std::printf("trained %s/%s: best val AUROC %.4f (epoch %d/%d), test AUROC %.4f, "
              "%ld parameters, %.1fs\n",
              cfg.model.c_str(), cfg.readout.c_str(), result.report.best_val_auroc,
              result.report.best_epoch, result.report.epochs_run, result.report.test_auroc,
              result.report.parameters, result.report.train_seconds);
  return 0;
}

struct EvalArgs {
  std::string bundle;
  std::string manifest;
  std::string checkpoint;
  std::string role = "test";
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const Graph g = load_bundle(a.bundle);
  const EdgeSplit split = load_split_manifest(a.manifest);
  const ModelParams model = load_checkpoint(a.checkpoint);
  const EvalBundle bundle = evaluate(model, g, split, parse_role(a.role));

  nlohmann::json j;
  j["role"] = a.role;
  j["auroc"] = bundle.auroc_value;
  auto put_mix = [&](const char* key, const std::optional<double>& v) {
    if (v) j["class_mix_auc"][key] = *v;
    else j["class_mix_auc"][key] = nullptr;
  };
  put_mix("hm_hm", bundle.mix.hm_hm);
  put_mix("hm_ht", bundle.mix.hm_ht);
  put_mix("ht_hm", bundle.mix.ht_hm);
  put_mix("ht_ht", bundle.mix.ht_ht);
  j["gs_first"] = bundle.gs.layers.front().gs ? nlohmann::json(*bundle.gs.layers.front().gs)
                                              : nlohmann::json(nullptr);
  j["gs_last"] = bundle.gs.layers.back().gs ? nlohmann::json(*bundle.gs.layers.back().gs)
                                            : nlohmann::json(nullptr);
  // GS layers are computed on the evaluated role's message-passing graph.
  j["gs_graph"] = std::string(role_name(parse_role(a.role))) + "_message_passing";
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    out << j.dump(1) << "\n";
  }
  std::cout << j.dump(1) << "\n";
  return 0;
}

int run_gs_trace(const EvalArgs& a) {
  const Graph g = load_bundle(a.bundle);
  const EdgeSplit split = load_split_manifest(a.manifest);
  const ModelParams model = load_checkpoint(a.checkpoint);
  const Role role = parse_role(a.role);
  const EvalBundle bundle = evaluate(model, g, split, role);
  if (a.out.empty()) {
    write_gs_csv(std::cout, bundle.gs);
  } else {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    write_gs_csv(out, bundle.gs);
    std::printf("wrote %s (%zu layers, %s message-passing graph)\n", a.out.c_str(),
                bundle.gs.layers.size(), role_name(role));
  }
  return 0;
}

struct GridArgs {
  std::string bundle;
  std::string manifest;
  std::string space;
  std::string base_config;
  std::string out_dir;
  long long budget = -1;
  uint64_t seed = 0;
};

int run_grid(const GridArgs& a) {
  const Graph g = load_bundle(a.bundle);
  const EdgeSplit split = load_split_manifest(a.manifest);
  const GridSpace space = load_grid_space(a.space);
  TrainConfig base;
  if (!a.base_config.empty()) base = load_train_config(a.base_config);
  const std::vector<TrainConfig> configs = grid_expand(space, base, a.budget, a.seed);
  std::filesystem::create_directories(a.out_dir);
  std::printf("grid: %zu of %llu configurations\n", configs.size(), grid_cardinality(space));
  for (size_t i = 0; i < configs.size(); ++i) {
    const TrainResult result = train(g, split, configs[i]);
    const std::string path = a.out_dir + "/report_" + std::to_string(i) + ".json";
    save_run_report(path, result.report);
    std::printf("[%zu/%zu] %s/%s val %.4f test %.4f -> %s\n", i + 1, configs.size(),
                configs[i].model.c_str(), configs[i].readout.c_str(),
                result.report.best_val_auroc, result.report.test_auroc, path.c_str());
  }
  return 0;
}

struct BenchArgs {
  std::string bundle;
  std::string manifest;
  std::string checkpoint;
  int repeats = 10;
  bool scaling = false;
};

int run_bench(const BenchArgs& a) {
  const Graph g = load_bundle(a.bundle);
  const EdgeSplit split = load_split_manifest(a.manifest);
  const ModelParams model = load_checkpoint(a.checkpoint);
  const TimingStats stats = measure_inference(model, g, split, a.repeats);
  std::printf("parameters %ld\n", param_count(model));
  if (stats.sd_seconds) {
    std::printf("inference %.6f +/- %.6f s over %d repeats\n", stats.mean_seconds,
                *stats.sd_seconds, stats.repeats);
  } else {
    std::printf("inference %.6f s (sd undefined, single repeat)\n", stats.mean_seconds);
  }
  if (a.scaling) {
    TrainConfig base;
    base.model = model_kind_name(model.kind);
    base.override_space = true;
    std::printf("model L d_h parameters\n");
    for (const ScalingRow& row :
         report_scaling(base, {1, 3, 5, 7, 9, 12}, {64, 128, 256})) {
      std::printf("%s %d %d %ld\n", row.model.c_str(), row.L, row.d_h, row.parameters);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-flow link prediction toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic graph bundle");
  synth->add_option("--kind", synth_args.kind, "grid | chain");
  synth->add_option("--out", synth_args.out, "bundle directory")->required();
  synth->add_option("--name", synth_args.name, "bundle name");
  synth->add_option("--rows", synth_args.rows);
  synth->add_option("--cols", synth_args.cols);
  synth->add_option("--mine-rate", synth_args.mine_rate);
  synth->add_option("--n", synth_args.n);
  synth->add_option("--shortcut-rate", synth_args.shortcut_rate);
  synth->add_option("--classes", synth_args.classes);
  synth->add_option("--feature-dim", synth_args.feature_dim);
  synth->add_option("--seed", synth_args.seed);

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "build a transductive split manifest");
  split->add_option("--bundle", split_args.bundle)->required();
  split->add_option("--out", split_args.out)->required();
  split->add_option("--seed", split_args.cfg.seed);
  split->add_option("--train-ratio", split_args.cfg.train_ratio);
  split->add_option("--val-ratio", split_args.cfg.val_ratio);
  split->add_option("--test-ratio", split_args.cfg.test_ratio);
  split->add_option("--train-holdout", split_args.cfg.disjoint_train_fraction);
  split->add_option("--neg-pool-ratio", split_args.cfg.negative_pool_ratio);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--bundle", train_args.bundle)->required();
  train_cmd->add_option("--manifest", train_args.manifest)->required();
  train_cmd->add_option("--config", train_args.config, "flat key/value config file");
  train_cmd->add_option("--checkpoint-out", train_args.checkpoint_out);
  train_cmd->add_option("--report-out", train_args.report_out);
  train_cmd->add_option("--gs-trace-out", train_args.gs_trace_out,
                        "also emit the test-role separability CSV");
  train_cmd->add_option("--set", train_args.overrides, "key=value config override")
      ->take_all();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--bundle", eval_args.bundle)->required();
  eval_cmd->add_option("--manifest", eval_args.manifest)->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--role", eval_args.role);
  eval_cmd->add_option("--out", eval_args.out);

  EvalArgs gs_args;
  auto* gs_cmd = app.add_subcommand("gs-trace", "emit the separability CSV");
  gs_cmd->add_option("--bundle", gs_args.bundle)->required();
  gs_cmd->add_option("--manifest", gs_args.manifest)->required();
  gs_cmd->add_option("--checkpoint", gs_args.checkpoint)->required();
  gs_cmd->add_option("--role", gs_args.role);
  gs_cmd->add_option("--out", gs_args.out);

  GridArgs grid_args;
  auto* grid_cmd = app.add_subcommand("grid", "run a hyperparameter grid");
  grid_cmd->add_option("--bundle", grid_args.bundle)->required();
  grid_cmd->add_option("--manifest", grid_args.manifest)->required();
  grid_cmd->add_option("--space", grid_args.space)->required();
  grid_cmd->add_option("--base-config", grid_args.base_config);
  grid_cmd->add_option("--out-dir", grid_args.out_dir)->required();
  grid_cmd->add_option("--budget", grid_args.budget);
  grid_cmd->add_option("--seed", grid_args.seed);

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "inference timing and parameter counts");
  bench_cmd->add_option("--bundle", bench_args.bundle)->required();
  bench_cmd->add_option("--manifest", bench_args.manifest)->required();
  bench_cmd->add_option("--checkpoint", bench_args.checkpoint)->required();
  bench_cmd->add_option("--repeats", bench_args.repeats);
  bench_cmd->add_flag("--scaling", bench_args.scaling, "print the parameter scaling table");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return run_synth(synth_args);
    if (split->parsed()) return run_split(split_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (gs_cmd->parsed()) return run_gs_trace(gs_args);
    if (grid_cmd->parsed()) return run_grid(grid_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const grafflp::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
