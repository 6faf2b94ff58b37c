#include "grafflp/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "grafflp/rng.hpp"
#include "json.hpp"

namespace grafflp {

const char* role_name(Role r) {
  switch (r) {
    case Role::kTrain: return "train";
    case Role::kVal: return "val";
    case Role::kTest: return "test";
  }
  return "?";
}

Role parse_role(const std::string& name) {
  if (name == "train") return Role::kTrain;
  if (name == "val") return Role::kVal;
  if (name == "test") return Role::kTest;
  throw std::invalid_argument("unknown split role: " + name);
}

const RoleEdges& EdgeSplit::role(Role r) const {
  switch (r) {
    case Role::kTrain: return train;
    case Role::kVal: return val;
    case Role::kTest: return test;
  }
  throw std::invalid_argument("bad role");
}

static void validate_config(const SplitConfig& cfg) {
  const double sum = cfg.train_ratio + cfg.val_ratio + cfg.test_ratio;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  for (double f : {cfg.train_ratio, cfg.val_ratio, cfg.test_ratio, cfg.disjoint_train_fraction}) {
    if (f <= 0.0 || f >= 1.0) throw std::invalid_argument("split fractions must lie in (0, 1)");
  }
  if (cfg.negative_pool_ratio <= 0.0) {
    throw std::invalid_argument("negative_pool_ratio must be positive");
  }
}

EdgeList sample_negatives(int num_nodes, size_t count, const EdgeList& exclusion, uint64_t seed) {
  EdgeKeySet excluded;
  excluded.reserve(exclusion.size() * 2);
  for (const Edge& e : exclusion) excluded.insert(edge_key(make_edge(e.u, e.v)));

  const size_t all_pairs = static_cast<size_t>(num_nodes) * (num_nodes - 1) / 2;
  if (excluded.size() > all_pairs) throw std::invalid_argument("sample_negatives: bad exclusion");
  const size_t feasible = all_pairs - excluded.size();
  if (count > feasible) {
    throw std::invalid_argument("sample_negatives: requested " + std::to_string(count) +
                                " but only " + std::to_string(feasible) + " non-edges exist");
  }

  Rng rng(seed);
  EdgeList out;
  out.reserve(count);

  if (count * 4 >= feasible) {
    // Dense regime: enumerate the candidates and take a partial shuffle.
    EdgeList candidates;
    candidates.reserve(feasible);
    for (int i = 0; i < num_nodes; ++i) {
      for (int j = i + 1; j < num_nodes; ++j) {
        const Edge e{i, j};
        if (!excluded.contains(edge_key(e))) candidates.push_back(e);
      }
    }
    for (size_t k = 0; k < count; ++k) {
      const size_t pick = k + rng.below(candidates.size() - k);
      std::swap(candidates[k], candidates[pick]);
      out.push_back(candidates[k]);
    }
    return out;
  }

  EdgeKeySet drawn;
  drawn.reserve(count * 2);
  while (out.size() < count) {
    const int a = rng.below_int(num_nodes);
    const int b = rng.below_int(num_nodes);
    if (a == b) continue;
    const Edge e = make_edge(a, b);
    const uint64_t key = edge_key(e);
    if (excluded.contains(key)) continue;
    if (!drawn.insert(key).second) continue;
    out.push_back(e);
  }
  return out;
}

EdgeSplit transductive_split(const Graph& g, const SplitConfig& cfg) {
  validate_config(cfg);
  const size_t num_edges = g.edges.size();
  const size_t n_test = static_cast<size_t>(std::floor(cfg.test_ratio * double(num_edges)));
  const size_t n_val = static_cast<size_t>(std::floor(cfg.val_ratio * double(num_edges)));
  if (n_test + n_val >= num_edges) {
    throw std::invalid_argument("transductive_split: too few edges for the requested ratios");
  }
  const size_t pool = num_edges - n_test - n_val;
  const size_t n_train_pos =
      static_cast<size_t>(std::llround(cfg.disjoint_train_fraction * double(pool)));
  if (n_test == 0 || n_val == 0 || n_train_pos == 0 || n_train_pos >= pool) {
    throw std::invalid_argument("transductive_split: a role would receive no positives");
  }

  EdgeList shuffled = g.edges;
  Rng rng(cfg.seed);
  rng.shuffle(shuffled);

  EdgeSplit s;
  s.config = cfg;
  auto cut = shuffled.begin();
  s.test.positives.assign(cut, cut + n_test);
  cut += n_test;
  s.val.positives.assign(cut, cut + n_val);
  cut += n_val;
  s.train.positives.assign(cut, cut + n_train_pos);
  cut += n_train_pos;
  s.train.message_passing.assign(cut, shuffled.end());

  s.val.message_passing = s.train.message_passing;
  s.val.message_passing.insert(s.val.message_passing.end(), s.train.positives.begin(),
                               s.train.positives.end());
  s.test.message_passing = s.val.message_passing;
  s.test.message_passing.insert(s.test.message_passing.end(), s.val.positives.begin(),
                                s.val.positives.end());

  // Frozen negatives exclude every edge of the original graph, so they can
  // never collide with any role's positives or message-passing edges.
  auto negatives_for = [&](const EdgeList& positives, uint64_t salt) {
    const size_t count =
        static_cast<size_t>(std::llround(cfg.negative_pool_ratio * double(positives.size())));
    return sample_negatives(g.num_nodes, count, g.edges, cfg.seed * 0x9e3779b97f4a7c15ULL + salt);
  };
  s.train.negatives = negatives_for(s.train.positives, 1);
  s.val.negatives = negatives_for(s.val.positives, 2);
  s.test.negatives = negatives_for(s.test.positives, 3);
  return s;
}

EvalSet make_eval_set(const RoleEdges& role) {
  if (role.positives.empty()) throw std::invalid_argument("make_eval_set: role has no positives");
  if (role.negatives.size() < role.positives.size()) {
    throw std::invalid_argument("make_eval_set: role has fewer negatives than positives");
  }
  EvalSet set;
  set.edges = role.positives;
  set.edges.insert(set.edges.end(), role.negatives.begin(),
                   role.negatives.begin() + role.positives.size());
  set.labels.assign(role.positives.size(), 1.0);
  set.labels.resize(set.edges.size(), 0.0);
  return set;
}

NormalizedAdjacency role_adjacency(const Graph& g, const EdgeSplit& split, Role r) {
  return normalized_adjacency(g.num_nodes, split.role(r).message_passing);
}

static nlohmann::json edges_to_json(const EdgeList& edges) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Edge& e : edges) arr.push_back({e.u, e.v});
  return arr;
}

static EdgeList edges_from_json(const nlohmann::json& arr) {
  EdgeList out;
  out.reserve(arr.size());
  for (const auto& pair : arr) out.push_back(Edge{pair.at(0).get<int>(), pair.at(1).get<int>()});
  return out;
}

void save_split_manifest(const std::string& path, const EdgeSplit& split) {
  nlohmann::json j;
  j["seed"] = split.config.seed;
  j["config"] = {{"train_ratio", split.config.train_ratio},
                 {"val_ratio", split.config.val_ratio},
                 {"test_ratio", split.config.test_ratio},
                 {"disjoint_train_fraction", split.config.disjoint_train_fraction},
                 {"negative_pool_ratio", split.config.negative_pool_ratio}};
  for (Role r : {Role::kTrain, Role::kVal, Role::kTest}) {
    const RoleEdges& role = split.role(r);
    j[role_name(r)] = {{"message_passing", edges_to_json(role.message_passing)},
                       {"positives", edges_to_json(role.positives)},
                       {"negatives", edges_to_json(role.negatives)}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write split manifest: " + path);
  out << j.dump(1) << "\n";
}

EdgeSplit load_split_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read split manifest: " + path);
  nlohmann::json j;
  in >> j;
  EdgeSplit s;
  s.config.seed = j.at("seed").get<uint64_t>();
  const auto& cfg = j.at("config");
  s.config.train_ratio = cfg.at("train_ratio").get<double>();
  s.config.val_ratio = cfg.at("val_ratio").get<double>();
  s.config.test_ratio = cfg.at("test_ratio").get<double>();
  s.config.disjoint_train_fraction = cfg.at("disjoint_train_fraction").get<double>();
  s.config.negative_pool_ratio = cfg.at("negative_pool_ratio").get<double>();
  auto load_role = [&](Role r) {
    const auto& jr = j.at(role_name(r));
    RoleEdges role;
    role.message_passing = edges_from_json(jr.at("message_passing"));
    role.positives = edges_from_json(jr.at("positives"));
    role.negatives = edges_from_json(jr.at("negatives"));
    return role;
  };
  s.train = load_role(Role::kTrain);
  s.val = load_role(Role::kVal);
  s.test = load_role(Role::kTest);
  return s;
}

}  // namespace grafflp
