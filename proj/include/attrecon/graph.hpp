#pragma once

#include <span>
#include <utility>
#include <vector>

#include "attrecon/common.hpp"

namespace attrecon {

using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected simple graph in compressed sparse row form.
///
/// Every undirected edge {u,v} is stored twice (u->v and v->u); columns are
/// sorted within each row. Self-loops and duplicates are removed at build time.
class Graph {
public:
    Graph() = default;

    std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_edges() const { return columns_.size() / 2; }

    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {columns_.data() + offsets_[v], degree(v)};
    }

    bool has_edge(NodeId u, NodeId v) const;

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<NodeId>& columns() const { return columns_; }

    /// Undirected edges as (u, v) with u < v, in row order.
    std::vector<Edge> edge_list() const;

    friend Graph build_graph(std::span<const Edge> edges, std::size_t n_nodes);

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> columns_;
};

/// Symmetrizes, deduplicates and drops self-loops. Throws InputError on an
/// out-of-range endpoint or n_nodes == 0.
Graph build_graph(std::span<const Edge> edges, std::size_t n_nodes);

/// D^{-1/2} A D^{-1/2} sharing the Graph's sparsity layout. The Laplacian
/// I - Â is implied and never stored. Isolated nodes have empty rows.
class NormalizedAdjacency {
public:
    NormalizedAdjacency() = default;
    explicit NormalizedAdjacency(const Graph& g);

    std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

    std::span<const NodeId> row_columns(NodeId v) const {
        return {columns_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::span<const double> row_values(NodeId v) const {
        return {values_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }

    double value(NodeId i, NodeId j) const;

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<NodeId>& columns() const { return columns_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> columns_;
    std::vector<double> values_;
};

NormalizedAdjacency sym_normalize(const Graph& g);

/// Partition of V into known (V_k) and unknown (V_u) nodes.
class NodeMask {
public:
    NodeMask() = default;
    explicit NodeMask(std::vector<bool> known);
    static NodeMask from_known(std::span<const NodeId> known, std::size_t n_nodes);

    std::size_t num_nodes() const { return known_.size(); }
    std::size_t known_count() const { return known_idx_.size(); }
    std::size_t unknown_count() const { return unknown_idx_.size(); }

    bool is_known(NodeId v) const { return known_[v]; }

    /// Sorted, disjoint index lists.
    const std::vector<NodeId>& known_nodes() const { return known_idx_; }
    const std::vector<NodeId>& unknown_nodes() const { return unknown_idx_; }

    /// Position of v within known_nodes(), or -1.
    std::ptrdiff_t known_position(NodeId v) const { return position_[v]; }

private:
    std::vector<bool> known_;
    std::vector<NodeId> known_idx_;
    std::vector<NodeId> unknown_idx_;
    std::vector<std::ptrdiff_t> position_;
};

/// Hop distance from the nearest source; kUnreachable where no source reaches.
std::vector<std::uint32_t> multi_source_bfs(const Graph& g, std::span<const NodeId> sources);

/// m · x. Rows of isolated nodes are zero.
Matrix spmm(const NormalizedAdjacency& m, const Matrix& x);

/// out = m · x without allocating; out must not alias x.
void spmm_into(const NormalizedAdjacency& m, const Matrix& x, Matrix& out);

/// Connected component id per node, numbered in order of smallest member.
std::vector<std::uint32_t> connected_components(const Graph& g);

} // namespace attrecon
