#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "scr/matrix.hpp"

namespace scr {

using Edge = std::pair<NodeId, NodeId>;

// Compressed sparse row graph. Immutable once built; safe to share between
// threads. `values` holds edge weights: all ones straight out of build_graph,
// normalized aggregation weights after normalize_adjacency.
struct SparseGraph {
  std::size_t num_nodes = 0;
  // Stored (directed) entries; an undirected edge contributes two.
  std::size_t num_edges = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;
  std::vector<double> values;

  std::span<const NodeId> neighbors(NodeId i) const {
    return {col_indices.data() + row_offsets[i], row_offsets[i + 1] - row_offsets[i]};
  }
  std::span<const double> weights(NodeId i) const {
    return {values.data() + row_offsets[i], row_offsets[i + 1] - row_offsets[i]};
  }

  // Throws ContractError if the CSR structure is inconsistent.
  void check_invariants() const;
};

// Deduplicates the edge list into CSR form. With `symmetrize`, every (u, v)
// also stores (v, u). Throws InputError on out-of-range ids.
SparseGraph build_graph(std::span<const Edge> edges, std::size_t num_nodes, bool symmetrize);

// Symmetric normalization D^-1/2 (A [+ I]) D^-1/2, degrees taken from the
// (self-loop augmented) row weight sums. Rows of isolated nodes stay empty
// when self-loops are off.
SparseGraph normalize_adjacency(const SparseGraph& graph, bool add_self_loops);

// Sparse-dense product A * X. Each output row accumulates in column order.
Matrix spmm(const SparseGraph& a, const Matrix& x);

// hops[0] = X and hops[k] = A * hops[k-1].
struct HopFeatures {
  std::vector<Matrix> hops;

  std::size_t num_hops() const { return hops.empty() ? 0 : hops.size() - 1; }
  std::size_t feature_dim() const { return hops.empty() ? 0 : hops.front().cols(); }
};

HopFeatures propagate_features(const SparseGraph& a, const Matrix& x, std::size_t num_hops);

// Hop matrices side by side: N x d(K+1), the encoder's input.
Matrix concat_hops(const HopFeatures& features);

}  // namespace scr
