#include "grafflp/bundle.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace grafflp {

namespace fs = std::filesystem;

static std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

static std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return in;
}

void save_bundle(const std::string& dir, const Graph& g, const std::string& name) {
  fs::create_directories(dir);
  const fs::path base(dir);
  {
    auto out = open_out(base / "edges.tsv");
    for (const Edge& e : g.edges) out << e.u << "\t" << e.v << "\n";
  }
  {
    auto out = open_out(base / "features.csv");
    char buf[32];
    for (int i = 0; i < g.num_nodes; ++i) {
      const double* row = g.features.row(i);
      for (int j = 0; j < g.features.cols; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
        out << (j ? "," : "") << buf;
      }
      out << "\n";
    }
  }
  {
    auto out = open_out(base / "labels.txt");
    for (int y : g.labels) out << y << "\n";
  }
  {
    nlohmann::json meta = {{"name", name},
                           {"num_nodes", g.num_nodes},
                           {"feature_dim", g.feature_dim()},
                           {"num_classes", g.num_classes}};
    open_out(base / "meta.json") << meta.dump(1) << "\n";
  }
}

Graph load_bundle(const std::string& dir) {
  const fs::path base(dir);
  nlohmann::json meta;
  open_in(base / "meta.json") >> meta;
  const int n = meta.at("num_nodes").get<int>();
  const int d = meta.at("feature_dim").get<int>();

  std::vector<std::pair<int, int>> pairs;
  {
    auto in = open_in(base / "edges.tsv");
    int a = 0, b = 0;
    while (in >> a >> b) pairs.emplace_back(a, b);
  }
  Tensor2 features(n, d);
  {
    auto in = open_in(base / "features.csv");
    std::string line;
    for (int i = 0; i < n; ++i) {
      if (!std::getline(in, line)) {
        throw std::runtime_error("features.csv: expected " + std::to_string(n) + " rows");
      }
      std::stringstream ss(line);
      std::string cell;
      for (int j = 0; j < d; ++j) {
        if (!std::getline(ss, cell, ',')) {
          throw std::runtime_error("features.csv: short row " + std::to_string(i));
        }
        features.at(i, j) = std::stod(cell);
      }
    }
  }
  std::vector<int> labels;
  labels.reserve(n);
  {
    auto in = open_in(base / "labels.txt");
    int y = 0;
    while (in >> y) labels.push_back(y);
    if (static_cast<int>(labels.size()) != n) {
      throw std::runtime_error("labels.txt: expected " + std::to_string(n) + " labels");
    }
  }
  Graph g = build_graph(pairs, std::move(features), std::move(labels));
  g.num_classes = meta.at("num_classes").get<int>();
  return g;
}

}  // namespace grafflp
