#pragma once

#include <cstdint>
#include <vector>

#include "attrecon/common.hpp"
#include "attrecon/graph.hpp"

namespace attrecon {

/// Topological position of every node relative to the known/unknown split.
struct TopoPosition {
    /// Hops to the nearest known node (0 on known nodes, kUnreachable if none reachable).
    std::vector<std::uint32_t> k2u;
    /// Number of unknown neighbours (0 on unknown nodes).
    std::vector<std::uint32_t> u2k;
};

struct ConfidenceWeights {
    /// One scalar per node, shared by every embedding dimension.
    Vector w;
    double gamma_decay = 0.9;
};

struct AugmentedEmbedding {
    Matrix e;  // Z + epsilon * B
    Matrix b;  // (w ⊙ (Z - colmean Z)) · C
    double epsilon = 0.0;
};

TopoPosition topo_position(const Graph& g, const NodeMask& mask);

/// Unknown: gamma^k2u (0 when unreachable). Known: 2 - gamma^u2k.
ConfidenceWeights confidence_weights(const TopoPosition& tp, double gamma_decay);

/// D x D Pearson correlation between embedding dimensions across nodes.
/// Diagonal is 0; a dimension with zero variance gets a zero row and column.
Matrix correlation_matrix(const Matrix& z);

/// E = Z + epsilon * (w ⊙ (Z - Z̄)) · C with Z̄ the column mean of Z.
AugmentedEmbedding augment_embedding(const Matrix& z, const ConfidenceWeights& w, const Matrix& c,
                                     double epsilon);

/// Same, centering on a supplied mean instead of Z's own (frozen-statistics evaluation).
AugmentedEmbedding augment_embedding(const Matrix& z, const ConfidenceWeights& w, const Matrix& c,
                                     double epsilon, const Eigen::RowVectorXd& center);

/// Backward of augment_embedding with w, C and Z̄ held constant:
/// dZ = dE + epsilon * w ⊙ (dE · Cᵀ).
Matrix augment_embedding_backward(const Matrix& grad_e, const ConfidenceWeights& w, const Matrix& c,
                                  double epsilon);

} // namespace attrecon
