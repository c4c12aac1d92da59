#include "scr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scr/errors.hpp"
#include "scr/parallel.hpp"

namespace scr {

void SparseGraph::check_invariants() const {
  if (row_offsets.size() != num_nodes + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != col_indices.size() || values.size() != col_indices.size() ||
      num_edges != col_indices.size()) {
    throw ContractError("SparseGraph: inconsistent CSR sizes");
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (row_offsets[i] > row_offsets[i + 1]) {
      throw ContractError("SparseGraph: row_offsets decreasing at row " + std::to_string(i));
    }
    const auto cols = neighbors(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] >= num_nodes) throw ContractError("SparseGraph: column out of range");
      if (k > 0 && cols[k - 1] >= cols[k]) {
        throw ContractError("SparseGraph: columns not strictly increasing in row " +
                            std::to_string(i));
      }
    }
  }
}

SparseGraph build_graph(std::span<const Edge> edges, std::size_t num_nodes, bool symmetrize) {
  std::vector<Edge> entries;
  entries.reserve(symmetrize ? 2 * edges.size() : edges.size());
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw InputError("build_graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    entries.emplace_back(u, v);
    if (symmetrize && u != v) entries.emplace_back(v, u);
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  SparseGraph g;
  g.num_nodes = num_nodes;
  g.num_edges = entries.size();
  g.row_offsets.assign(num_nodes + 1, 0);
  g.col_indices.reserve(entries.size());
  for (const auto& [u, v] : entries) {
    ++g.row_offsets[u + 1];
    g.col_indices.push_back(v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.row_offsets[i + 1] += g.row_offsets[i];
  g.values.assign(entries.size(), 1.0);
  return g;
}

SparseGraph normalize_adjacency(const SparseGraph& graph, bool add_self_loops) {
  graph.check_invariants();
  const std::size_t n = graph.num_nodes;

  SparseGraph out;
  out.num_nodes = n;
  out.row_offsets.assign(n + 1, 0);
  out.col_indices.reserve(graph.col_indices.size() + (add_self_loops ? n : 0));
  out.values.reserve(out.col_indices.capacity());
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = graph.neighbors(i);
    const auto w = graph.weights(i);
    bool diagonal_done = !add_self_loops;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (!diagonal_done && cols[k] >= i) {
        out.col_indices.push_back(i);
        out.values.push_back(1.0);
        diagonal_done = true;
        if (cols[k] == i) continue;  // existing self-loop keeps weight 1
      }
      out.col_indices.push_back(cols[k]);
      out.values.push_back(w[k]);
    }
    if (!diagonal_done) {
      out.col_indices.push_back(i);
      out.values.push_back(1.0);
    }
    out.row_offsets[i + 1] = out.col_indices.size();
  }
  out.num_edges = out.col_indices.size();

  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (double w : out.weights(i)) degree[i] += w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = out.row_offsets[i]; k < out.row_offsets[i + 1]; ++k) {
      out.values[k] *= 1.0 / std::sqrt(degree[i] * degree[out.col_indices[k]]);
    }
  }
  return out;
}

Matrix spmm(const SparseGraph& a, const Matrix& x) {
  if (a.num_nodes != x.rows()) {
    throw InputError("spmm: graph has " + std::to_string(a.num_nodes) + " nodes but X has " +
                     std::to_string(x.rows()) + " rows");
  }
  Matrix out(x.rows(), x.cols());
  const std::size_t avg_degree = a.num_nodes == 0 ? 0 : a.num_edges / a.num_nodes + 1;
  parallel_for_rows(a.num_nodes, avg_degree * x.cols(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto dst = out.row(i);
      const auto cols = a.neighbors(i);
      const auto w = a.weights(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const auto src = x.row(cols[k]);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w[k] * src[j];
      }
    }
  });
  return out;
}

HopFeatures propagate_features(const SparseGraph& a, const Matrix& x, std::size_t num_hops) {
  if (!x.all_finite()) throw InputError("propagate_features: non-finite entry in X");
  HopFeatures features;
  features.hops.reserve(num_hops + 1);
  features.hops.push_back(x);
  for (std::size_t k = 1; k <= num_hops; ++k) {
    features.hops.push_back(spmm(a, features.hops.back()));
  }
  return features;
}

Matrix concat_hops(const HopFeatures& features) { return hconcat(features.hops); }

}  // namespace scr
