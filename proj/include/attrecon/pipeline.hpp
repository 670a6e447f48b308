#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrecon/dataset.hpp"
#include "attrecon/metrics.hpp"
#include "attrecon/propagation.hpp"
#include "attrecon/trainer.hpp"

namespace attrecon {

/// Every knob of a run. The split seed, initialization and dropout all derive from train.seed.
struct RunConfig {
    // Data source: a native dataset directory, a content/cites pair, or an in-memory dataset.
    std::filesystem::path dataset_dir;
    std::filesystem::path content;
    std::filesystem::path cites;

    SplitFractions split;
    std::optional<double> missing_rate;  // overrides split with SplitFractions::for_missing_rate
    double known_within_train = 1.0;

    PropagationConfig propagation;
    TrainConfig train;

    std::vector<std::size_t> ks = {10, 20, 50};
    bool classification = true;
    bool clustering = true;
    bool homogeneity = true;
    ClassifierConfig classifier;

    std::filesystem::path out_dir = "out";

    SplitFractions effective_split() const;
    void validate() const;
};

/// Config echo for reports. Output locations are deliberately excluded so that
/// reports from different output directories compare byte-for-byte.
nlohmann::json config_to_json(const RunConfig& cfg);

Dataset load_dataset(const RunConfig& cfg);

/// The model-facing view of a dataset under a split: masked rows are zero and
/// the original values of masked nodes are never copied into it.
struct PreparedData {
    SplitMask split;
    Matrix x_init;              // N x F, known rows original, all others 0
    Matrix x_known_original;    // k x F in known_nodes() order
    NormalizedAdjacency a_hat;
};

PreparedData prepare_data(const Dataset& ds, const RunConfig& cfg);

/// Propagation with the configured mode; X̃ is rounded to float32 (its file format).
RefinedAttributes run_prefill(const PreparedData& data, const RunConfig& cfg);

struct TrainOutput {
    TrainResult result;       // params and outputs rounded to float32
    nlohmann::json metrics;   // evaluate_outputs on the rounded outputs
};

/// Trains on X̃. Weights, Z and X̂ are rounded to float32 after training so the
/// in-memory results equal what the checkpoint and matrix files hold.
TrainOutput run_training(const Dataset& ds, const PreparedData& data, const Matrix& x_tilde, const RunConfig& cfg);

/// Z and X̂ for every node from (possibly reloaded) weights, rounded to float32.
std::pair<Matrix, Matrix> infer_outputs(const Dataset& ds, const PreparedData& data, const Matrix& x_tilde,
                                        const ModelParams& params);

/// All downstream metrics: reconstruction on test nodes (Recall/nDCG@K for
/// binary, RMSE/CORR for continuous), classification and KNN homogeneity on the
/// test nodes' reconstructed rows, and k-means clustering of Z over all nodes.
/// z may be empty, which skips clustering.
nlohmann::json evaluate_outputs(const Dataset& ds, const SplitMask& split, const Matrix& x_hat, const Matrix& z,
                                const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Subcommands. Each writes its files under cfg.out_dir and returns its report.

struct TrainOptions {
    std::optional<std::filesystem::path> x_tilde;  // --skip-prefill input
};

nlohmann::json cmd_prefill(const RunConfig& cfg);
nlohmann::json cmd_train(const RunConfig& cfg, const TrainOptions& opts = {});

struct EvalOptions {
    std::optional<std::filesystem::path> checkpoint;
    std::optional<std::filesystem::path> x_hat;
    std::optional<std::filesystem::path> z;
    std::optional<std::filesystem::path> x_tilde;
};
nlohmann::json cmd_eval(const RunConfig& cfg, const EvalOptions& opts);

inline const std::vector<double> kDefaultMissingRates = {0.2, 0.4, 0.6, 0.8};
nlohmann::json cmd_sweep_missing(const RunConfig& cfg, const std::vector<double>& rates = kDefaultMissingRates);

/// The six ablation variants, in reporting order.
inline const std::vector<std::string> kAblationVariants = {"baseline-gae", "fp",       "taap",
                                                           "taap-espc-nhs", "taap-espc-nlsc", "full"};
RunConfig ablation_config(const RunConfig& base, const std::string& variant);
nlohmann::json cmd_ablate(const RunConfig& cfg);

nlohmann::json cmd_gen_synth(const SbmConfig& sbm, const std::filesystem::path& out_dir);

/// Serializes a report as pretty JSON followed by a newline.
void write_report(const std::filesystem::path& path, const nlohmann::json& report);

} // namespace attrecon
