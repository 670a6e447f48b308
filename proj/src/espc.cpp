#include "attrecon/espc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace attrecon {

TopoPosition topo_position(const Graph& g, const NodeMask& mask) {
    if (mask.num_nodes() != g.num_nodes()) throw InputError("topo_position: mask size does not match graph");
    if (mask.known_count() == 0) throw InputError("topo_position: at least one known node is required");

    TopoPosition tp;
    tp.k2u = multi_source_bfs(g, mask.known_nodes());
    tp.u2k.assign(g.num_nodes(), 0);
    for (NodeId v : mask.known_nodes()) {
        std::uint32_t count = 0;
        for (NodeId w : g.neighbors(v)) count += mask.is_known(w) ? 0 : 1;
        tp.u2k[v] = count;
    }
    return tp;
}

ConfidenceWeights confidence_weights(const TopoPosition& tp, double gamma_decay) {
    if (!(gamma_decay > 0.0 && gamma_decay < 1.0)) {
        throw ConfigError("confidence_weights: gamma_decay must lie in (0,1), got " + std::to_string(gamma_decay));
    }
    ConfidenceWeights out{Vector(static_cast<Eigen::Index>(tp.k2u.size())), gamma_decay};
    for (std::size_t v = 0; v < tp.k2u.size(); ++v) {
        double w;
        if (tp.k2u[v] == kUnreachable) {
            w = 0.0;
        } else if (tp.k2u[v] > 0) {
            w = std::pow(gamma_decay, static_cast<double>(tp.k2u[v]));
        } else {
            w = 1.0 + (1.0 - std::pow(gamma_decay, static_cast<double>(tp.u2k[v])));
        }
        out.w[static_cast<Eigen::Index>(v)] = w;
    }
    return out;
}

Matrix correlation_matrix(const Matrix& z) {
    const auto n = z.rows();
    const auto d = z.cols();
    if (n < 2) throw InputError("correlation_matrix: need at least 2 rows");

    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Matrix centered = z.rowwise() - mean;
    Matrix cov = Matrix::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());

    Eigen::VectorXd inv_sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double ss = cov(j, j);
        const double scale = std::max(1.0, std::abs(mean[j]));
        const double floor = static_cast<double>(n) * (1e-14 * scale) * (1e-14 * scale);
        inv_sd[j] = ss <= floor ? 0.0 : 1.0 / std::sqrt(ss);
    }
    Matrix c(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        c(i, i) = 0.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r = std::clamp(cov(i, j) * inv_sd[i] * inv_sd[j], -1.0, 1.0);
            c(i, j) = r;
            c(j, i) = r;
        }
    }
    return c;
}

AugmentedEmbedding augment_embedding(const Matrix& z, const ConfidenceWeights& w, const Matrix& c,
                                     double epsilon) {
    return augment_embedding(z, w, c, epsilon, z.colwise().mean());
}

AugmentedEmbedding augment_embedding(const Matrix& z, const ConfidenceWeights& w, const Matrix& c,
                                     double epsilon, const Eigen::RowVectorXd& center) {
    if (w.w.size() != z.rows() || c.rows() != z.cols() || c.cols() != z.cols() || center.size() != z.cols()) {
        throw InputError("augment_embedding: shape mismatch");
    }
    Matrix weighted = z.rowwise() - center;
    weighted.array().colwise() *= w.w.array();
    AugmentedEmbedding out;
    out.b.noalias() = weighted * c;
    out.e = z + epsilon * out.b;
    out.epsilon = epsilon;
    return out;
}

Matrix augment_embedding_backward(const Matrix& grad_e, const ConfidenceWeights& w, const Matrix& c,
                                  double epsilon) {
    Matrix through_b;
    through_b.noalias() = grad_e * c.transpose();
    through_b.array().colwise() *= w.w.array();
    return grad_e + epsilon * through_b;
}

} // namespace attrecon
