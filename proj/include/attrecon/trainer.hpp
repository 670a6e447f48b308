#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attrecon/common.hpp"
#include "attrecon/espc.hpp"
#include "attrecon/graph.hpp"
#include "attrecon/model.hpp"
#include "attrecon/objective.hpp"

namespace attrecon {

enum class DatasetProfile { Citation, Large };

std::string to_string(DatasetProfile p);
DatasetProfile profile_from_string(const std::string& s);

struct TrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 1000;
    std::uint64_t seed = 72;
    DatasetProfile profile = DatasetProfile::Citation;

    Architecture arch = Architecture::Mlp1Mlp1;
    double dropout = 0.8;
    std::size_t hidden = 256;
    std::size_t latent = 256;

    double gamma_decay = 0.9;
    double epsilon = 0.01;
    LossConfig loss;

    /// Validation Recall@10 is evaluated every val_every epochs (0 disables it).
    std::size_t val_every = 1;

    /// Defaults for a dataset profile: citation = mlp1-mlp1, lr 1e-3, 1000 epochs,
    /// dropout 0.8; large = gcn2-mlp2, lr 1e-2, 400 epochs, dropout 0.2.
    static TrainConfig for_profile(DatasetProfile profile);

    void validate() const;
};

/// Gradient (or any other tensor) laid out like the trainable weights.
struct ParamTensors {
    Matrix phi0;
    Matrix phi1;
    Matrix theta0;
    Matrix theta1;

    static ParamTensors zeros_like(const ModelParams& p);
    std::array<Matrix*, 4> tensors() { return {&phi0, &phi1, &theta0, &theta1}; }
    std::array<const Matrix*, 4> tensors() const { return {&phi0, &phi1, &theta0, &theta1}; }
};

inline constexpr std::array<const char*, 4> kTensorNames = {"phi0", "phi1", "theta0", "theta1"};

std::array<Matrix*, 4> weight_tensors(ModelParams& p);
std::array<const Matrix*, 4> weight_tensors(const ModelParams& p);

/// Everything a forward/backward pass reads besides the weights.
struct TrainingInputs {
    const Graph* graph = nullptr;
    const NormalizedAdjacency* a_hat = nullptr;  // propagation inside the encoder
    const NodeMask* mask = nullptr;
    Matrix encoder_input;     // encoder_input(X̃, Â, arch), constant over training
    Matrix recon_target;      // k x F target rows for the known nodes
    FeatureKind kind = FeatureKind::Binary;
    ConfidenceWeights weights;

    // Optional validation data for the per-epoch diagnostic.
    std::vector<NodeId> val_nodes;
    Matrix val_truth;
};

/// Builds TrainingInputs from refined attributes. x_known_original is k x F (the
/// original known rows, ordered like mask.known_nodes()); it is read only when
/// the reconstruction target is Original.
TrainingInputs make_training_inputs(const Graph& g, const NormalizedAdjacency& a_hat, const NodeMask& mask,
                                    const Matrix& x_tilde, const Matrix& x_known_original, FeatureKind kind,
                                    const TrainConfig& cfg);

/// Statistics of the augmented embedding that the backward pass treats as constants.
struct FrozenEspc {
    Matrix correlation;
    Eigen::RowVectorXd center;
};

/// Per-step randomness: the dropout mask and the key of the NLSC sampling stream.
struct StepContext {
    const Matrix* dropout_mask = nullptr;
    std::uint64_t nlsc_seed = 0;
    std::uint64_t nlsc_substream = 0;
};

struct ForwardResult {
    LossReport report;
    Matrix z;
    FrozenEspc frozen;
};

/// Forward pass to the total loss. When `frozen` is given, W/C/Z̄ come from it
/// instead of the current Z.
ForwardResult evaluate_objective(const ModelParams& p, const TrainingInputs& in, const TrainConfig& cfg,
                                 const StepContext& ctx, const FrozenEspc* frozen = nullptr);

struct GradientResult {
    ParamTensors grads;
    LossReport report;
    Matrix z;
    FrozenEspc frozen;
};

/// Exact gradients of the total loss, with C, W and Z̄ held constant and the
/// dropout mask fixed. Throws NumericError naming a non-finite gradient tensor.
GradientResult compute_gradients(const ModelParams& p, const TrainingInputs& in, const TrainConfig& cfg,
                                 const StepContext& ctx);

struct AdamState {
    ParamTensors m;
    ParamTensors v;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const ModelParams& p);
};

void adam_step(ModelParams& p, const ParamTensors& grads, AdamState& state, double lr);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    LossReport loss;
    double val_recall10 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    Matrix z;      // eval-mode embedding after the final epoch
    Matrix x_hat;  // eval-mode reconstruction of every node
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const Graph& g, const NormalizedAdjacency& a_hat, const NodeMask& mask, const Matrix& x_tilde,
                  const Matrix& x_known_original, FeatureKind kind, const TrainConfig& cfg,
                  const std::vector<NodeId>& val_nodes = {}, const Matrix& val_truth = {},
                  const EpochCallback& on_epoch = {});

/// Writes epoch,recon,nhs,nlsc,total,val_recall@10.
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

} // namespace attrecon
