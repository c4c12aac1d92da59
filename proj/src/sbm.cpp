#include <algorithm>
#include <cmath>

#include "scr/data_io.hpp"
#include "scr/errors.hpp"

namespace scr {

Dataset generate_sbm(const SbmParams& p, Rng& rng) {
  if (p.num_nodes == 0 || p.num_classes == 0 || p.feature_dim == 0) {
    throw ConfigError("generate_sbm: nodes, classes and feature dim must be positive");
  }
  if (!(p.p_in > p.p_out && p.p_out >= 0.0 && p.p_in <= 1.0)) {
    throw ConfigError("generate_sbm: need 1 >= p_in > p_out >= 0");
  }
  if (!(p.sigma >= 0.0)) throw ConfigError("generate_sbm: sigma must be >= 0");
  if (p.labels_per_class == 0 || p.num_classes * p.labels_per_class > p.num_nodes) {
    throw ConfigError("generate_sbm: classes * labels_per_class = " +
                      std::to_string(p.num_classes * p.labels_per_class) +
                      " must be in [1, num_nodes = " + std::to_string(p.num_nodes) + "]");
  }
  const std::size_t n = p.num_nodes;

  Dataset ds;
  ds.num_classes = p.num_classes;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = i % p.num_classes;
  shuffle(std::span<Label>(ds.labels), rng);

  Matrix means(p.num_classes, p.feature_dim);
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    auto row = means.row(c);
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : row) v = rng.normal();
      for (double v : row) norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  ds.features = Matrix(n, p.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mean = means.row(ds.labels[i]);
    auto row = ds.features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = p.sigma == 0.0 ? mean[j] : mean[j] + p.sigma * rng.normal();
    }
  }

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double prob = ds.labels[i] == ds.labels[j] ? p.p_in : p.p_out;
      if (rng.uniform() < prob) edges.emplace_back(i, j);
    }
  }
  ds.graph = build_graph(edges, n, true);

  std::vector<NodeId> rest;
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    std::vector<NodeId> members;
    for (NodeId i = 0; i < n; ++i) {
      if (ds.labels[i] == c) members.push_back(i);
    }
    shuffle(std::span<NodeId>(members), rng);
    ds.splits.train.insert(ds.splits.train.end(), members.begin(),
                           members.begin() + static_cast<std::ptrdiff_t>(p.labels_per_class));
    rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(p.labels_per_class),
                members.end());
  }
  std::sort(rest.begin(), rest.end());
  shuffle(std::span<NodeId>(rest), rng);
  const auto half = static_cast<std::ptrdiff_t>(rest.size() / 2);
  ds.splits.valid.assign(rest.begin(), rest.begin() + half);
  ds.splits.test.assign(rest.begin() + half, rest.end());
  std::sort(ds.splits.train.begin(), ds.splits.train.end());
  std::sort(ds.splits.valid.begin(), ds.splits.valid.end());
  std::sort(ds.splits.test.begin(), ds.splits.test.end());
  return ds;
}

}  // namespace scr
