#include "attrecon/objective.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace attrecon {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct UnitRows {
    Matrix unit;
    Vector norm;
};

UnitRows normalize_rows(const Matrix& e) {
    UnitRows u{e, e.rowwise().norm()};
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        if (u.norm[i] > 0.0) {
            u.unit.row(i) /= u.norm[i];
        } else {
            u.unit.row(i).setZero();
        }
    }
    return u;
}

// Chain rule from the unit-normalized rows back to E:
// dE_i = (dU_i - (dU_i·U_i) U_i) / |E_i|.
void unit_backward(const UnitRows& u, const Matrix& grad_unit, double scale, Matrix& grad_e) {
    if (grad_e.rows() != u.unit.rows() || grad_e.cols() != u.unit.cols()) {
        throw InputError("loss gradient buffer has the wrong shape");
    }
    for (Eigen::Index i = 0; i < u.unit.rows(); ++i) {
        if (u.norm[i] <= 0.0) continue;
        const double radial = grad_unit.row(i).dot(u.unit.row(i));
        grad_e.row(i) += (scale / u.norm[i]) * (grad_unit.row(i) - radial * u.unit.row(i));
    }
}

// Loss value and d/dsim of a single gated non-adjacent pair.
std::pair<double, double> nlsc_term(double s, SignMode mode) {
    if (mode == SignMode::IntentConsistent) return {softplus(s), sigmoid(s)};
    return {softplus(-s), -sigmoid(-s)};
}

} // namespace

std::string to_string(SignMode m) { return m == SignMode::IntentConsistent ? "intent-consistent" : "as-written"; }

SignMode sign_mode_from_string(const std::string& s) {
    if (s == "intent-consistent") return SignMode::IntentConsistent;
    if (s == "as-written") return SignMode::AsWritten;
    throw ConfigError("unknown sign mode '" + s + "'");
}

void LossConfig::validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda1 and lambda2 must be >= 0");
    if (tau < -1.0 || tau > 1.0) throw ConfigError("tau must lie in [-1,1]");
    if (nlsc_sampling != NlscSampling::Exact && nlsc_sample_count == 0) {
        throw ConfigError("nlsc_sample_count must be positive");
    }
}

bool nlsc_is_exact(const LossConfig& cfg, std::size_t n_nodes) {
    switch (cfg.nlsc_sampling) {
        case NlscSampling::Exact: return true;
        case NlscSampling::Sampled: return false;
        case NlscSampling::Auto: break;
    }
    return n_nodes <= cfg.nlsc_exact_max_nodes;
}

double recon_loss(const Matrix& target_known, const Matrix& x_hat_known) {
    if (target_known.rows() != x_hat_known.rows() || target_known.cols() != x_hat_known.cols()) {
        throw InputError("recon_loss: shape mismatch");
    }
    if (target_known.rows() == 0) throw InputError("recon_loss: no known rows");
    return (target_known - x_hat_known).squaredNorm() / static_cast<double>(target_known.rows());
}

double cosine_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

PairObjective nhs_loss(const Matrix& e, const Graph& g, const LossConfig& cfg, Matrix* grad_e, double grad_scale) {
    if (static_cast<std::size_t>(e.rows()) != g.num_nodes()) throw InputError("nhs_loss: embedding rows do not match graph");
    PairObjective out;
    if (g.num_edges() == 0) {
        out.no_edges = true;
        return out;
    }
    const UnitRows u = normalize_rows(e);
    Matrix grad_unit;
    if (grad_e != nullptr) grad_unit = Matrix::Zero(e.rows(), e.cols());
    const double sign = cfg.sign_mode == SignMode::IntentConsistent ? 1.0 : -1.0;

    for (NodeId i = 0; i < g.num_nodes(); ++i) {
        for (NodeId j : g.neighbors(i)) {
            if (j <= i) continue;
            const double s = u.unit.row(i).dot(u.unit.row(j));
            out.loss += sign * softplus(-s);
            out.score += sigmoid(s);
            ++out.pairs;
            if (grad_e != nullptr) {
                const double ds = -sign * sigmoid(-s);
                grad_unit.row(i) += ds * u.unit.row(j);
                grad_unit.row(j) += ds * u.unit.row(i);
            }
        }
    }
    out.active = out.pairs;
    if (grad_e != nullptr) unit_backward(u, grad_unit, grad_scale, *grad_e);
    return out;
}

PairObjective nlsc_loss(const Matrix& e, const Graph& g, const LossConfig& cfg, CounterRng* rng, Matrix* grad_e,
                        double grad_scale) {
    const std::size_t n = g.num_nodes();
    if (static_cast<std::size_t>(e.rows()) != n) throw InputError("nlsc_loss: embedding rows do not match graph");
    PairObjective out;
    const std::size_t all_pairs = n * (n - 1) / 2;
    const std::size_t non_edges = all_pairs - g.num_edges();
    if (non_edges == 0) return out;

    const UnitRows u = normalize_rows(e);
    Matrix grad_unit;
    if (grad_e != nullptr) grad_unit = Matrix::Zero(e.rows(), e.cols());

    if (nlsc_is_exact(cfg, n)) {
        // Row blocks of the upper triangle of the similarity matrix. Pairs on or
        // below the diagonal and adjacent pairs get a sentinel below any tau.
        constexpr Eigen::Index kBlock = 256;
        constexpr double kExcluded = -2.0;
        const auto nn = static_cast<Eigen::Index>(n);
        const bool intent = cfg.sign_mode == SignMode::IntentConsistent;
        out.pairs = non_edges;
        Matrix sim;
        Matrix coeff;
        using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
        RowArray ex;
        RowArray act;
        RowArray sig;
        for (Eigen::Index b0 = 0; b0 < nn; b0 += kBlock) {
            const Eigen::Index rows = std::min(kBlock, nn - b0);
            const Eigen::Index cols = nn - b0;
            sim.noalias() = u.unit.middleRows(b0, rows) * u.unit.middleRows(b0, cols).transpose();
            if (grad_e != nullptr) coeff.setZero(rows, cols);
            // Row by row so that every elementwise pass stays in cache.
            for (Eigen::Index r = 0; r < rows; ++r) {
                const Eigen::Index len = cols - r - 1;
                if (len == 0) continue;
                auto s = sim.row(r).tail(len).array();
                s = s.cwiseMax(-1.0).cwiseMin(1.0);
                for (NodeId j : g.neighbors(static_cast<NodeId>(b0 + r))) {
                    const Eigen::Index c = static_cast<Eigen::Index>(j) - b0 - r - 1;
                    if (c >= 0) s(c) = kExcluded;
                }
                act = (s >= cfg.tau).cast<double>();
                ex = s.exp();
                sig = ex / (1.0 + ex);  // sigmoid(s)
                out.loss += intent ? (act * (1.0 + ex).log()).sum() : (act * ((1.0 + ex).log() - s)).sum();
                out.score += (act * sig).sum();
                out.active += static_cast<std::size_t>(act.sum());
                if (grad_e != nullptr) {
                    // d/ds softplus(s) = sigmoid(s); d/ds softplus(-s) = sigmoid(s) - 1.
                    auto c = coeff.row(r).tail(len).array();
                    if (intent) {
                        c = act * sig;
                    } else {
                        c = act * (sig - 1.0);
                    }
                }
            }
            if (grad_e != nullptr) {
                grad_unit.middleRows(b0, rows).noalias() += coeff * u.unit.middleRows(b0, cols);
                grad_unit.middleRows(b0, cols).noalias() += coeff.transpose() * u.unit.middleRows(b0, rows);
            }
        }
    } else {
        if (rng == nullptr) throw InputError("nlsc_loss: sampling requires an rng");
        out.sampled = true;
        const double weight = static_cast<double>(non_edges) / static_cast<double>(cfg.nlsc_sample_count);
        while (out.pairs < cfg.nlsc_sample_count) {
            auto i = static_cast<NodeId>(rng->below(n));
            auto j = static_cast<NodeId>(rng->below(n - 1));
            if (j >= i) ++j;
            if (g.has_edge(i, j)) continue;
            ++out.pairs;
            const double s = std::clamp(u.unit.row(i).dot(u.unit.row(j)), -1.0, 1.0);
            if (s < cfg.tau) continue;
            const auto [value, slope] = nlsc_term(s, cfg.sign_mode);
            out.loss += weight * value;
            out.score += weight * sigmoid(s);
            ++out.active;
            if (grad_e != nullptr) {
                grad_unit.row(i) += weight * slope * u.unit.row(j);
                grad_unit.row(j) += weight * slope * u.unit.row(i);
            }
        }
    }
    if (grad_e != nullptr) unit_backward(u, grad_unit, grad_scale, *grad_e);
    return out;
}

double total_loss(double recon, double nhs, double nlsc, const LossConfig& cfg) {
    if (!std::isfinite(recon)) throw NumericError("total_loss: reconstruction loss is not finite");
    if (!std::isfinite(nhs)) throw NumericError("total_loss: NHS loss is not finite");
    if (!std::isfinite(nlsc)) throw NumericError("total_loss: NLSC loss is not finite");
    return recon + cfg.lambda1 * nhs + cfg.lambda2 * nlsc;
}

} // namespace attrecon
