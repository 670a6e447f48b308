#pragma once

#include <optional>
#include <string>

#include "attrecon/common.hpp"
#include "attrecon/graph.hpp"
#include "attrecon/rng.hpp"

namespace attrecon {

/// Orientation of the two pair losses.
///
/// IntentConsistent: connected pairs are pulled together (softplus(-sim)) and
/// gated non-adjacent pairs are pushed apart (softplus(sim)).
/// AsWritten: the literal printed forms, -softplus(-sim) for connected pairs and
/// softplus(-sim) for gated non-adjacent pairs.
enum class SignMode { IntentConsistent, AsWritten };

enum class ReconTarget { Refined, Original };

enum class NlscSampling { Auto, Exact, Sampled };

std::string to_string(SignMode m);
SignMode sign_mode_from_string(const std::string& s);

struct LossConfig {
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double tau = 0.2;
    SignMode sign_mode = SignMode::IntentConsistent;
    NlscSampling nlsc_sampling = NlscSampling::Auto;
    std::size_t nlsc_sample_count = 200000;
    std::size_t nlsc_exact_max_nodes = 5000;  // Auto switches to sampling above this
    ReconTarget recon_target = ReconTarget::Refined;

    void validate() const;
};

struct PairObjective {
    double loss = 0.0;
    double score = 0.0;        // Σ σ(sim) over the contributing pairs
    std::size_t pairs = 0;     // pairs visited (edges, or non-edges enumerated/sampled)
    std::size_t active = 0;    // pairs contributing to the loss
    bool no_edges = false;     // NHS on an edgeless graph
    bool sampled = false;
};

struct LossReport {
    double recon = 0.0;
    double nhs = 0.0;
    double nlsc = 0.0;
    double total = 0.0;
    double nhs_score = 0.0;
    double nlsc_score = 0.0;
};

/// (1/k) Σ_i ||target_i - x_hat_i||². Both k x F.
double recon_loss(const Matrix& target_known, const Matrix& x_hat_known);

/// a·b / (|a||b|); 0 when either vector has zero norm.
double cosine_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b);

/// Sum over undirected edges, each counted once. If grad_e is given,
/// grad_scale * dLoss/dE is added to it.
PairObjective nhs_loss(const Matrix& e, const Graph& g, const LossConfig& cfg, Matrix* grad_e = nullptr,
                       double grad_scale = 1.0);

/// Sum over non-adjacent pairs i<j with sim >= tau. Exact enumeration or an
/// unbiased sampled estimate scaled to the full non-edge count; sampling draws
/// from rng (required when sampling is selected).
PairObjective nlsc_loss(const Matrix& e, const Graph& g, const LossConfig& cfg, CounterRng* rng = nullptr,
                        Matrix* grad_e = nullptr, double grad_scale = 1.0);

/// recon + λ1·nhs + λ2·nlsc; NumericError naming any non-finite component.
double total_loss(double recon, double nhs, double nlsc, const LossConfig& cfg);

/// True when nlsc_loss would enumerate every pair for a graph of this size.
bool nlsc_is_exact(const LossConfig& cfg, std::size_t n_nodes);

} // namespace attrecon
