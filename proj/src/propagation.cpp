#include "attrecon/propagation.hpp"

#include <string>

namespace attrecon {

namespace {

void check_shapes(const Matrix& x, const NodeMask& mask, const NormalizedAdjacency& a_hat,
                  const Matrix& x0_known) {
    if (static_cast<std::size_t>(x.rows()) != a_hat.num_nodes() || mask.num_nodes() != a_hat.num_nodes()) {
        throw InputError("propagation: row count does not match the graph");
    }
    if (static_cast<std::size_t>(x0_known.rows()) != mask.known_count() || x0_known.cols() != x.cols()) {
        throw InputError("propagation: x0_known must be k x F");
    }
    if (!x.allFinite()) throw NumericError("propagation: non-finite value in the iterate");
}

// Accumulates (Â x) for a single row into out.
template <class Out>
void propagate_row(const NormalizedAdjacency& a_hat, const Matrix& x, NodeId i, Out&& out) {
    out.setZero();
    const auto cols = a_hat.row_columns(i);
    const auto vals = a_hat.row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) out.noalias() += vals[e] * x.row(cols[e]);
}

} // namespace

void PropagationConfig::validate() const {
    if (alpha_global < 0.0) throw ConfigError("alpha_global must be >= 0");
    if (beta_reset < 0.0) throw ConfigError("beta_reset must be >= 0");
}

Matrix gather_rows(const Matrix& x, const std::vector<NodeId>& nodes) {
    Matrix out(static_cast<Eigen::Index>(nodes.size()), x.cols());
    for (std::size_t r = 0; r < nodes.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(nodes[r]);
    return out;
}

Matrix fp_step(const Matrix& x, const NodeMask& mask, const NormalizedAdjacency& a_hat,
               const Matrix& x0_known) {
    check_shapes(x, mask, a_hat, x0_known);
    Matrix next(x.rows(), x.cols());
    for (NodeId v : mask.unknown_nodes()) propagate_row(a_hat, x, v, next.row(v));
    const auto& known = mask.known_nodes();
    for (std::size_t r = 0; r < known.size(); ++r) next.row(known[r]) = x0_known.row(static_cast<Eigen::Index>(r));
    return next;
}

TaapStepResult taap_step(const Matrix& x, const NodeMask& mask, const NormalizedAdjacency& a_hat,
                         const Matrix& x0_known, const PropagationConfig& cfg) {
    check_shapes(x, mask, a_hat, x0_known);
    if (mask.known_count() == 0) throw InputError("taap_step: at least one known node is required");

    const auto& known = mask.known_nodes();
    Eigen::RowVectorXd known_mean = Eigen::RowVectorXd::Zero(x.cols());
    for (NodeId v : known) known_mean += x.row(v);
    known_mean /= static_cast<double>(known.size());

    TaapStepResult out{Matrix(x.rows(), x.cols()), Matrix(static_cast<Eigen::Index>(known.size()), x.cols())};
    for (NodeId v : mask.unknown_nodes()) {
        auto row = out.state.row(v);
        propagate_row(a_hat, x, v, row);
        row += cfg.alpha_global * known_mean;
    }
    for (std::size_t r = 0; r < known.size(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        propagate_row(a_hat, x, known[r], out.working_known.row(ri));
        out.state.row(known[r]) = x0_known.row(ri) + cfg.beta_reset * out.working_known.row(ri);
    }
    return out;
}

RefinedAttributes run_propagation(const Matrix& x_init, const NodeMask& mask,
                                  const NormalizedAdjacency& a_hat, const PropagationConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(x_init.rows()) != mask.num_nodes()) {
        throw InputError("run_propagation: x_init rows do not match the mask");
    }
    const Matrix x0_known = gather_rows(x_init, mask.known_nodes());

    Matrix x = Matrix::Zero(x_init.rows(), x_init.cols());
    for (std::size_t r = 0; r < mask.known_count(); ++r) {
        x.row(mask.known_nodes()[r]) = x0_known.row(static_cast<Eigen::Index>(r));
    }

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (cfg.mode == PropagationMode::FP) {
            x = fp_step(x, mask, a_hat, x0_known);
        } else {
            x = std::move(taap_step(x, mask, a_hat, x0_known, cfg).state);
        }
    }

    RefinedAttributes out{std::move(x), std::vector<RowOrigin>(mask.num_nodes())};
    const bool refined = cfg.mode == PropagationMode::TAAP && cfg.iterations > 0;
    for (NodeId v = 0; v < mask.num_nodes(); ++v) {
        if (!mask.is_known(v)) {
            out.origin[v] = RowOrigin::PrefilledUnknown;
        } else {
            out.origin[v] = refined ? RowOrigin::RefinedKnown : RowOrigin::OriginalKnown;
        }
    }
    return out;
}

Matrix direct_solve_oracle(const NodeMask& mask, const NormalizedAdjacency& a_hat, const Matrix& x_known) {
    const std::size_t n = a_hat.num_nodes();
    if (n > kDirectSolveMaxNodes) {
        throw InputError("direct_solve_oracle: graph has " + std::to_string(n) + " nodes, limit is " +
                         std::to_string(kDirectSolveMaxNodes));
    }
    if (static_cast<std::size_t>(x_known.rows()) != mask.known_count()) {
        throw InputError("direct_solve_oracle: x_known must have one row per known node");
    }
    const auto& unknown = mask.unknown_nodes();
    const auto u = static_cast<Eigen::Index>(unknown.size());
    if (u == 0) return Matrix(0, x_known.cols());

    // Every unknown node must share a component with some known node.
    std::vector<std::uint32_t> comp(n, kUnreachable);
    std::vector<bool> comp_has_known;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < n; ++s) {
        if (comp[s] != kUnreachable) continue;
        const auto id = static_cast<std::uint32_t>(comp_has_known.size());
        comp_has_known.push_back(false);
        comp[s] = id;
        stack.push_back(s);
        while (!stack.empty()) {
            const NodeId a = stack.back();
            stack.pop_back();
            if (mask.is_known(a)) comp_has_known[id] = true;
            for (NodeId b : a_hat.row_columns(a)) {
                if (comp[b] == kUnreachable) {
                    comp[b] = id;
                    stack.push_back(b);
                }
            }
        }
    }
    for (NodeId v : unknown) {
        if (!comp_has_known[comp[v]]) {
            throw NumericError("direct_solve_oracle: singular system, the component containing node " +
                               std::to_string(v) + " has no known node");
        }
    }

    std::vector<std::ptrdiff_t> upos(n, -1);
    for (Eigen::Index r = 0; r < u; ++r) upos[unknown[static_cast<std::size_t>(r)]] = r;

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(u, u);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(u, x_known.cols());
    for (Eigen::Index r = 0; r < u; ++r) {
        const NodeId v = unknown[static_cast<std::size_t>(r)];
        const auto cols = a_hat.row_columns(v);
        const auto vals = a_hat.row_values(v);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            if (mask.is_known(cols[e])) {
                rhs.row(r) += vals[e] * x_known.row(mask.known_position(cols[e]));
            } else {
                system(r, upos[cols[e]]) -= vals[e];
            }
        }
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Matrix out = lu.solve(rhs);
    if (!out.allFinite()) throw NumericError("direct_solve_oracle: solve produced non-finite values");
    return out;
}

} // namespace attrecon
