#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grafflp/graph.hpp"
#include "grafflp/metrics.hpp"
#include "grafflp/model.hpp"
#include "grafflp/split.hpp"

namespace grafflp {

/// Raised when training produces a non-finite loss; maps to exit code 3.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment configuration. Field names double as the flat key/value
/// config-file keys. Values must stay inside the canonical search domains
/// unless override_space is set.
struct TrainConfig {
  std::string model = "graff";     // graff | gcn | mlp
  std::string readout = "gradient";  // hadamard | gradient
  double alpha = 0.01;             // learning rate
  double gamma = 0.0;              // decoupled weight decay
  int d_h = 128;
  int d_mlp = 32;
  double rho = 0.1;                // encoder dropout
  double rho_mlp = 0.1;            // decoder dropout
  int L = 3;
  int L_mlp = 1;
  bool batch_norm = false;
  double neg_ratio = 1.0;          // train negatives per positive, per epoch
  double tau = 0.25;
  int max_epochs = 3000;
  int patience = 300;
  uint64_t seed = 0;
  bool override_space = false;
  std::string w_param = "dd";      // dd | sym
  bool source_term = true;
};

/// Rejects values outside the canonical hyperparameter domains unless
/// override_space is set.
void validate_domains(const TrainConfig& cfg);

GraffConfig to_graff_config(const TrainConfig& cfg);
ModelKind train_model_kind(const TrainConfig& cfg);

/// Assign one key from its textual value; shared by the config-file parser
/// and the grid expander.
void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value);

TrainConfig load_train_config(const std::string& path);
void save_train_config(const std::string& path, const TrainConfig& cfg);

struct RunReport {
  double best_val_auroc = 0.0;
  double test_auroc = 0.0;  // from the checkpoint selected on validation only
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<double> loss_history;
  long parameters = 0;
  double train_seconds = 0.0;
  std::string gs_trace_path;  // separability CSV emitted for this run, if any
  TrainConfig config;
};

struct TrainResult {
  ModelParams model;
  RunReport report;
};

/// Full-batch training with per-epoch negative resampling, early stopping on
/// validation AUROC, and best-checkpoint restoration. Test supervision never
/// reaches the loop; the test metric is computed once at the end from the
/// restored checkpoint.
TrainResult train(const Graph& g, const EdgeSplit& split, const TrainConfig& cfg);

struct EvalBundle {
  double auroc_value = 0.0;
  ClassMixAuc mix;
  GsTrace gs;
};

/// Eval-mode metrics on the balanced eval set of one role, using that role's
/// message-passing graph.
EvalBundle evaluate(const ModelParams& model, const Graph& g, const EdgeSplit& split, Role role);

/// Axes of a hyperparameter grid: config key -> candidate textual values.
struct GridSpace {
  std::map<std::string, std::vector<std::string>> axes;
};

GridSpace load_grid_space(const std::string& path);
unsigned long long grid_cardinality(const GridSpace& space);

/// Cartesian expansion over `base`. A non-negative budget draws that many
/// distinct grid points uniformly by seed instead of the full product.
std::vector<TrainConfig> grid_expand(const GridSpace& space, const TrainConfig& base,
                                     long long budget = -1, uint64_t seed = 0);

struct TimingStats {
  double mean_seconds = 0.0;
  std::optional<double> sd_seconds;
  int repeats = 0;
};

/// Times eval-mode prediction over the test eval edges. One warmup pass is
/// excluded from the statistics.
TimingStats measure_inference(const ModelParams& model, const Graph& g, const EdgeSplit& split,
                              int repeats = 10);

struct ScalingRow {
  std::string model;
  int L = 0;
  int d_h = 0;
  long parameters = 0;
};

/// Parameter counts across depth and width axes for the given base config.
std::vector<ScalingRow> report_scaling(const TrainConfig& base, const std::vector<int>& l_values,
                                       const std::vector<int>& dh_values);

void save_run_report(const std::string& path, const RunReport& report);

}  // namespace grafflp
