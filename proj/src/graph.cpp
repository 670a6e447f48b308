#include "attrecon/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace attrecon {

bool all_finite(const Matrix& m) { return m.allFinite(); }

Graph build_graph(std::span<const Edge> edges, std::size_t n_nodes) {
    if (n_nodes == 0) throw InputError("build_graph: n_nodes must be positive");

    std::vector<Edge> directed;
    directed.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u >= n_nodes || v >= n_nodes) {
            throw InputError("build_graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                             ") has an endpoint >= n_nodes=" + std::to_string(n_nodes));
        }
        if (u == v) continue;
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    Graph g;
    g.offsets_.assign(n_nodes + 1, 0);
    g.columns_.reserve(directed.size());
    for (const auto& [u, v] : directed) {
        ++g.offsets_[u + 1];
        g.columns_.push_back(v);
    }
    for (std::size_t i = 0; i < n_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
    return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edge_list() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < num_nodes(); ++u) {
        for (NodeId v : neighbors(u)) {
            if (u < v) out.emplace_back(u, v);
        }
    }
    return out;
}

NormalizedAdjacency::NormalizedAdjacency(const Graph& g)
    : offsets_(g.offsets()), columns_(g.columns()), values_(g.columns().size()) {
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
        for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) {
            const auto j = columns_[e];
            // 1/sqrt(d_i d_j) computed in one rounding so value*sqrt(d_i d_j) == 1 closely.
            values_[e] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)) * static_cast<double>(g.degree(j)));
        }
    }
}

double NormalizedAdjacency::value(NodeId i, NodeId j) const {
    const auto cols = row_columns(i);
    const auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
}

NormalizedAdjacency sym_normalize(const Graph& g) { return NormalizedAdjacency(g); }

NodeMask::NodeMask(std::vector<bool> known) : known_(std::move(known)), position_(known_.size(), -1) {
    for (NodeId v = 0; v < known_.size(); ++v) {
        if (known_[v]) {
            position_[v] = static_cast<std::ptrdiff_t>(known_idx_.size());
            known_idx_.push_back(v);
        } else {
            unknown_idx_.push_back(v);
        }
    }
}

NodeMask NodeMask::from_known(std::span<const NodeId> known, std::size_t n_nodes) {
    std::vector<bool> flags(n_nodes, false);
    for (NodeId v : known) {
        if (v >= n_nodes) throw InputError("NodeMask: known node " + std::to_string(v) + " out of range");
        flags[v] = true;
    }
    return NodeMask(std::move(flags));
}

std::vector<std::uint32_t> multi_source_bfs(const Graph& g, std::span<const NodeId> sources) {
    if (sources.empty()) throw InputError("multi_source_bfs: source set is empty");
    std::vector<std::uint32_t> dist(g.num_nodes(), kUnreachable);
    std::vector<NodeId> frontier;
    frontier.reserve(sources.size());
    for (NodeId s : sources) {
        if (s >= g.num_nodes()) throw InputError("multi_source_bfs: source out of range");
        if (dist[s] != 0) {
            dist[s] = 0;
            frontier.push_back(s);
        }
    }
    std::vector<NodeId> next;
    std::uint32_t level = 0;
    while (!frontier.empty()) {
        ++level;
        next.clear();
        for (NodeId u : frontier) {
            for (NodeId v : g.neighbors(u)) {
                if (dist[v] == kUnreachable) {
                    dist[v] = level;
                    next.push_back(v);
                }
            }
        }
        frontier.swap(next);
    }
    return dist;
}

void spmm_into(const NormalizedAdjacency& m, const Matrix& x, Matrix& out) {
    if (static_cast<std::size_t>(x.rows()) != m.num_nodes()) {
        throw InputError("spmm: matrix has " + std::to_string(x.rows()) + " rows, expected " +
                         std::to_string(m.num_nodes()));
    }
    out.resize(x.rows(), x.cols());
    const auto& off = m.offsets();
    const auto& col = m.columns();
    const auto& val = m.values();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        auto row = out.row(i);
        row.setZero();
        for (std::size_t e = off[i]; e < off[i + 1]; ++e) row.noalias() += val[e] * x.row(col[e]);
    }
}

Matrix spmm(const NormalizedAdjacency& m, const Matrix& x) {
    Matrix out;
    spmm_into(m, x, out);
    return out;
}

std::vector<std::uint32_t> connected_components(const Graph& g) {
    std::vector<std::uint32_t> comp(g.num_nodes(), kUnreachable);
    std::uint32_t next_id = 0;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < g.num_nodes(); ++s) {
        if (comp[s] != kUnreachable) continue;
        comp[s] = next_id;
        stack.push_back(s);
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : g.neighbors(u)) {
                if (comp[v] == kUnreachable) {
                    comp[v] = next_id;
                    stack.push_back(v);
                }
            }
        }
        ++next_id;
    }
    return comp;
}

} // namespace attrecon
