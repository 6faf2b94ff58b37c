#include "grafflp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace grafflp {

namespace {

template <typename T>
bool in_set(const T& v, std::initializer_list<T> allowed) {
  for (const T& a : allowed) {
    if (v == a) return true;
  }
  return false;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

void validate_domains(const TrainConfig& cfg) {
  if (!in_set<std::string>(cfg.model, {"graff", "gcn", "mlp"})) {
    throw std::invalid_argument("config: unknown model " + cfg.model);
  }
  if (!in_set<std::string>(cfg.readout, {"hadamard", "gradient"})) {
    throw std::invalid_argument("config: unknown readout " + cfg.readout);
  }
  if (!in_set<std::string>(cfg.w_param, {"dd", "sym"})) {
    throw std::invalid_argument("config: unknown w_param " + cfg.w_param);
  }
  if (cfg.max_epochs < 1) throw std::invalid_argument("config: max_epochs < 1");
  if (cfg.patience < 0) throw std::invalid_argument("config: negative patience");
  if (cfg.neg_ratio <= 0.0) throw std::invalid_argument("config: neg_ratio must be positive");
  if (cfg.override_space) return;
  const bool ok = in_set(cfg.alpha, {0.01, 0.001}) && in_set(cfg.gamma, {0.0, 0.01, 0.001}) &&
                  in_set(cfg.d_h, {128, 256}) && in_set(cfg.d_mlp, {32, 64}) &&
                  in_set(cfg.rho, {0.1, 0.3, 0.5}) && in_set(cfg.rho_mlp, {0.1, 0.3, 0.5}) &&
                  in_set(cfg.L, {1, 3, 5, 7, 9, 12}) && in_set(cfg.L_mlp, {0, 1, 2}) &&
                  in_set(cfg.neg_ratio, {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) &&
                  in_set(cfg.tau, {0.1, 0.25, 0.5});
  if (!ok) {
    throw std::invalid_argument(
        "config: value outside the canonical search domains (set override_space to allow)");
  }
}

ModelKind train_model_kind(const TrainConfig& cfg) { return parse_model_kind(cfg.model); }

GraffConfig to_graff_config(const TrainConfig& cfg) {
  GraffConfig g;
  g.layers = cfg.L;
  g.tau = cfg.tau;
  g.hidden_dim = cfg.d_h;
  g.encoder_dropout = cfg.rho;
  g.decoder_layers = cfg.L_mlp;
  g.decoder_dim = cfg.d_mlp;
  g.decoder_dropout = cfg.rho_mlp;
  g.batch_norm = cfg.batch_norm;
  g.readout = parse_readout(cfg.readout);
  g.source_term = cfg.source_term;
  g.w_param =
      cfg.w_param == "sym" ? WParametrization::kPlainSymmetric : WParametrization::kDiagDominant;
  return g;
}

void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  auto as_bool = [&](const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean '" + v + "' for " + key);
  };
  try {
    if (key == "model") cfg.model = value;
    else if (key == "readout") cfg.readout = value;
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "gamma") cfg.gamma = std::stod(value);
    else if (key == "d_h") cfg.d_h = std::stoi(value);
    else if (key == "d_mlp") cfg.d_mlp = std::stoi(value);
    else if (key == "rho") cfg.rho = std::stod(value);
    else if (key == "rho_mlp") cfg.rho_mlp = std::stod(value);
    else if (key == "L") cfg.L = std::stoi(value);
    else if (key == "L_mlp") cfg.L_mlp = std::stoi(value);
    else if (key == "batch_norm") cfg.batch_norm = as_bool(value);
    else if (key == "neg_ratio") cfg.neg_ratio = std::stod(value);
    else if (key == "tau") cfg.tau = std::stod(value);
    else if (key == "max_epochs") cfg.max_epochs = std::stoi(value);
    else if (key == "patience") cfg.patience = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "override_space") cfg.override_space = as_bool(value);
    else if (key == "w_param") cfg.w_param = value;
    else if (key == "source_term") cfg.source_term = as_bool(value);
    else throw std::invalid_argument("config: unknown key " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value '" + value + "' for " + key);
  }
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  TrainConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream ss(line);
    std::string key, value;
    if (!(ss >> key)) continue;
    if (!(ss >> value)) throw std::invalid_argument("config: missing value for " + key);
    apply_config_key(cfg, key, value);
  }
  return cfg;
}

void save_train_config(const std::string& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << "model " << cfg.model << "\n";
  out << "readout " << cfg.readout << "\n";
  out << "alpha " << cfg.alpha << "\n";
  out << "gamma " << cfg.gamma << "\n";
  out << "d_h " << cfg.d_h << "\n";
  out << "d_mlp " << cfg.d_mlp << "\n";
  out << "rho " << cfg.rho << "\n";
  out << "rho_mlp " << cfg.rho_mlp << "\n";
  out << "L " << cfg.L << "\n";
  out << "L_mlp " << cfg.L_mlp << "\n";
  out << "batch_norm " << (cfg.batch_norm ? 1 : 0) << "\n";
  out << "neg_ratio " << cfg.neg_ratio << "\n";
  out << "tau " << cfg.tau << "\n";
  out << "max_epochs " << cfg.max_epochs << "\n";
  out << "patience " << cfg.patience << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "override_space " << (cfg.override_space ? 1 : 0) << "\n";
  out << "w_param " << cfg.w_param << "\n";
  out << "source_term " << (cfg.source_term ? 1 : 0) << "\n";
}

namespace {

/// Validation AUROC of the current parameters on a frozen eval set.
double eval_auroc(const ModelParams& model, const NormalizedAdjacency& adj, const Tensor2& x,
                  const EvalSet& set) {
  const std::vector<double> probs = predict_edges(model, adj, x, set.edges);
  std::vector<int> labels(set.labels.size());
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = set.labels[i] > 0.5 ? 1 : 0;
  const auto value = auroc(probs, labels);
  return value ? *value : 0.5;
}

}  // namespace

TrainResult train(const Graph& g, const EdgeSplit& split, const TrainConfig& cfg) {
  validate_domains(cfg);
  if (split.train.positives.empty() || split.val.positives.empty() ||
      split.test.positives.empty()) {
    throw std::invalid_argument("train: every split role needs positives");
  }
  const double t_start = now_seconds();

  const NormalizedAdjacency adj_train = role_adjacency(g, split, Role::kTrain);
  const NormalizedAdjacency adj_val = role_adjacency(g, split, Role::kVal);
  const NormalizedAdjacency adj_test = role_adjacency(g, split, Role::kTest);
  const EvalSet val_set = make_eval_set(split.val);
  const EvalSet test_set = make_eval_set(split.test);

  ModelParams model = init_model(train_model_kind(cfg), to_graff_config(cfg), g.feature_dim(),
                                 cfg.seed);
  ModelParams grads = zeros_like(model);
  auto param_refs = trainable_views(model);
  auto grad_refs = trainable_views(grads);
  AdamConfig adam{cfg.alpha, 0.9, 0.999, 1e-8, cfg.gamma};
  AdamState adam_state;
  adam_state.init(param_refs);

  // Separate streams keep the negative-sampling schedule independent of the
  // dropout draws, so changing neg_ratio does not perturb anything else.
  Rng dropout_rng(cfg.seed ^ 0xd1ce5badULL);
  Rng neg_seed_rng(cfg.seed ^ 0x5eedf00dULL);

  // Training may only see train-visible edges; per-epoch negatives exclude
  // exactly those.
  EdgeList train_visible = split.train.message_passing;
  train_visible.insert(train_visible.end(), split.train.positives.begin(),
                       split.train.positives.end());
  const size_t negatives_per_epoch = static_cast<size_t>(
      std::llround(cfg.neg_ratio * double(split.train.positives.size())));
  if (negatives_per_epoch == 0) throw std::invalid_argument("train: neg_ratio yields 0 negatives");

  RunReport report;
  report.config = cfg;
  report.parameters = param_count(model);
  report.best_val_auroc = -1.0;

  ModelParams best_model = model;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const EdgeList negatives =
        sample_negatives(g.num_nodes, negatives_per_epoch, train_visible, neg_seed_rng.next_u64());
    EdgeList batch = split.train.positives;
    batch.insert(batch.end(), negatives.begin(), negatives.end());
    std::vector<double> labels(split.train.positives.size(), 1.0);
    labels.resize(batch.size(), 0.0);

    const double loss = loss_and_gradients(model, adj_train, g.features, batch, labels,
                                           /*train_mode=*/true, &dropout_rng, grads);
    if (!std::isfinite(loss)) {
      throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    report.loss_history.push_back(loss);
    adam_step(adam, param_refs, grad_refs, adam_state);

    const double val = eval_auroc(model, adj_val, g.features, val_set);
    report.epochs_run = epoch;
    if (val > report.best_val_auroc) {
      report.best_val_auroc = val;
      report.best_epoch = epoch;
      best_model = model;
    } else if (epoch - report.best_epoch > cfg.patience) {
      break;
    }
  }

  report.test_auroc = eval_auroc(best_model, adj_test, g.features, test_set);
  report.train_seconds = now_seconds() - t_start;
  return TrainResult{std::move(best_model), std::move(report)};
}

EvalBundle evaluate(const ModelParams& model, const Graph& g, const EdgeSplit& split, Role role) {
  const RoleEdges& edges = split.role(role);
  const EvalSet set = make_eval_set(edges);
  const NormalizedAdjacency adj = role_adjacency(g, split, role);

  EvalBundle bundle;
  const std::vector<double> probs = predict_edges(model, adj, g.features, set.edges);
  std::vector<int> labels(set.labels.size());
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = set.labels[i] > 0.5 ? 1 : 0;
  const auto value = auroc(probs, labels);
  if (!value) throw std::invalid_argument("evaluate: degenerate eval set");
  bundle.auroc_value = *value;

  const size_t num_pos = edges.positives.size();
  const std::vector<double> pos_scores(probs.begin(), probs.begin() + num_pos);
  const std::vector<double> neg_scores(probs.begin() + num_pos, probs.end());
  const EdgeList neg_edges(set.edges.begin() + num_pos, set.edges.end());
  bundle.mix = class_mix_auc(pos_scores, neg_scores, edges.positives, neg_edges, g.labels);

  const LayerTrace trace = forward_trace(model, adj, g.features);
  bundle.gs = gradient_separability(trace, adj, edges.positives, neg_edges, g.labels);
  return bundle;
}

GridSpace load_grid_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read grid space: " + path);
  GridSpace space;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    std::vector<std::string> values;
    std::string v;
    while (ss >> v) values.push_back(v);
    if (values.empty()) throw std::invalid_argument("grid space: no values for " + key);
    space.axes[key] = std::move(values);
  }
  return space;
}

unsigned long long grid_cardinality(const GridSpace& space) {
  unsigned long long card = 1;
  for (const auto& [key, values] : space.axes) card *= values.size();
  return card;
}

std::vector<TrainConfig> grid_expand(const GridSpace& space, const TrainConfig& base,
                                     long long budget, uint64_t seed) {
  const unsigned long long card = grid_cardinality(space);
  std::vector<std::pair<std::string, std::vector<std::string>>> axes(space.axes.begin(),
                                                                     space.axes.end());
  auto config_at = [&](unsigned long long index) {
    TrainConfig cfg = base;
    for (const auto& [key, values] : axes) {
      apply_config_key(cfg, key, values[index % values.size()]);
      index /= values.size();
    }
    return cfg;
  };

  std::vector<unsigned long long> picks;
  if (budget < 0 || static_cast<unsigned long long>(budget) >= card) {
    picks.resize(card);
    for (unsigned long long i = 0; i < card; ++i) picks[i] = i;
  } else {
    // Distinct uniform grid points without materializing the product.
    Rng rng(seed);
    std::unordered_set<unsigned long long> seen;
    while (picks.size() < static_cast<size_t>(budget)) {
      const unsigned long long i = rng.below(card);
      if (seen.insert(i).second) picks.push_back(i);
    }
  }
  std::vector<TrainConfig> out;
  out.reserve(picks.size());
  for (unsigned long long i : picks) out.push_back(config_at(i));
  return out;
}

TimingStats measure_inference(const ModelParams& model, const Graph& g, const EdgeSplit& split,
                              int repeats) {
  if (repeats < 1) throw std::invalid_argument("measure_inference: repeats < 1");
  const NormalizedAdjacency adj = role_adjacency(g, split, Role::kTest);
  const EvalSet set = make_eval_set(split.test);

  (void)predict_edges(model, adj, g.features, set.edges);  // warmup, excluded
  std::vector<double> times;
  times.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    const double t0 = now_seconds();
    (void)predict_edges(model, adj, g.features, set.edges);
    times.push_back(now_seconds() - t0);
  }
  TimingStats stats;
  stats.repeats = repeats;
  for (double t : times) stats.mean_seconds += t;
  stats.mean_seconds /= repeats;
  if (repeats > 1) {
    double ss = 0.0;
    for (double t : times) ss += (t - stats.mean_seconds) * (t - stats.mean_seconds);
    stats.sd_seconds = std::sqrt(ss / (repeats - 1));
  }
  return stats;
}

std::vector<ScalingRow> report_scaling(const TrainConfig& base, const std::vector<int>& l_values,
                                       const std::vector<int>& dh_values) {
  std::vector<ScalingRow> rows;
  // Counting only; a 2-node feature stub keeps construction cheap.
  const int input_dim = 8;
  for (int l : l_values) {
    TrainConfig cfg = base;
    cfg.L = l;
    cfg.override_space = true;
    ModelParams m = init_model(train_model_kind(cfg), to_graff_config(cfg), input_dim, 0);
    rows.push_back({cfg.model, l, cfg.d_h, param_count(m)});
  }
  for (int dh : dh_values) {
    TrainConfig cfg = base;
    cfg.d_h = dh;
    cfg.override_space = true;
    ModelParams m = init_model(train_model_kind(cfg), to_graff_config(cfg), input_dim, 0);
    rows.push_back({cfg.model, cfg.L, dh, param_count(m)});
  }
  return rows;
}

void save_run_report(const std::string& path, const RunReport& report) {
  nlohmann::json j;
  j["best_val_auroc"] = report.best_val_auroc;
  j["test_auroc"] = report.test_auroc;
  j["best_epoch"] = report.best_epoch;
  j["epochs_run"] = report.epochs_run;
  j["parameters"] = report.parameters;
  j["train_seconds"] = report.train_seconds;
  if (report.gs_trace_path.empty()) {
    j["gs_trace"] = nullptr;
  } else {
    j["gs_trace"] = report.gs_trace_path;
  }
  j["loss_history"] = report.loss_history;
  j["config"] = {{"model", report.config.model},
                 {"readout", report.config.readout},
                 {"alpha", report.config.alpha},
                 {"gamma", report.config.gamma},
                 {"d_h", report.config.d_h},
                 {"d_mlp", report.config.d_mlp},
                 {"rho", report.config.rho},
                 {"rho_mlp", report.config.rho_mlp},
                 {"L", report.config.L},
                 {"L_mlp", report.config.L_mlp},
                 {"batch_norm", report.config.batch_norm},
                 {"neg_ratio", report.config.neg_ratio},
                 {"tau", report.config.tau},
                 {"max_epochs", report.config.max_epochs},
                 {"patience", report.config.patience},
                 {"seed", report.config.seed}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace grafflp
