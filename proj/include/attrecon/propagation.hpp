#pragma once

#include <cstdint>
#include <vector>

#include "attrecon/common.hpp"
#include "attrecon/graph.hpp"

namespace attrecon {

enum class PropagationMode { FP, TAAP };

struct PropagationConfig {
    std::size_t iterations = 10;
    double alpha_global = 0.05;  // weight of the known-mean term on unknown rows
    double beta_reset = 0.1;     // weight of the evolving known rows in the refined output
    PropagationMode mode = PropagationMode::TAAP;

    void validate() const;
};

enum class RowOrigin : std::uint8_t { OriginalKnown, RefinedKnown, PrefilledUnknown };

struct RefinedAttributes {
    Matrix x_tilde;
    std::vector<RowOrigin> origin;
};

/// One feature-propagation step: unknown rows <- (Â X)_u, known rows reset to x0_known.
/// x0_known is k x F, ordered like mask.known_nodes().
Matrix fp_step(const Matrix& x, const NodeMask& mask, const NormalizedAdjacency& a_hat,
               const Matrix& x0_known);

struct TaapStepResult {
    /// Next iterate. Known rows hold the refined values X_k^(0) + beta * working.
    Matrix state;
    /// (Â X)_k, the evolving known rows before the reset, k x F.
    Matrix working_known;
};

/// One TAAP step. Unknown rows <- (Â X)_u + alpha * colmean(X_k); known rows are
/// refined as x0_known + beta * (Â X)_k. Requires at least one known node.
TaapStepResult taap_step(const Matrix& x, const NodeMask& mask, const NormalizedAdjacency& a_hat,
                         const Matrix& x0_known, const PropagationConfig& cfg);

/// Runs cfg.iterations steps. Unknown rows of x_init are treated as zero
/// regardless of their content, so masked values never enter the iteration.
RefinedAttributes run_propagation(const Matrix& x_init, const NodeMask& mask,
                                  const NormalizedAdjacency& a_hat, const PropagationConfig& cfg);

/// Harmonic extension X_u = (I - Â_uu)^{-1} Â_uk X_k by dense LU.
/// Test tool: limited to graphs with at most kDirectSolveMaxNodes nodes.
inline constexpr std::size_t kDirectSolveMaxNodes = 2000;
Matrix direct_solve_oracle(const NodeMask& mask, const NormalizedAdjacency& a_hat, const Matrix& x_known);

/// Gathers rows of x listed in nodes.
Matrix gather_rows(const Matrix& x, const std::vector<NodeId>& nodes);

} // namespace attrecon
