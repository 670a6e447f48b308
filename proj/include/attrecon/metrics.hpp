#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "attrecon/common.hpp"

namespace attrecon {

using RowRef = Eigen::Ref<const Eigen::RowVectorXd>;

// ---------------------------------------------------------------------------
// Attribute reconstruction

/// Indices of the k highest scores, descending; ties go to the lower index.
std::vector<std::size_t> top_k(const RowRef& scores, std::size_t k);

/// |top-K ∩ positives| / min(K, #positives). K is clamped to F.
/// nullopt when the truth row has no positive entry (> 0.5).
std::optional<double> recall_at_k(const RowRef& scores, const RowRef& truth, std::size_t k);

/// Binary-gain DCG@K / IDCG@K with a log2(rank + 1) discount.
std::optional<double> ndcg_at_k(const RowRef& scores, const RowRef& truth, std::size_t k);

struct RankingMetrics {
    std::map<std::size_t, double> recall_at;
    std::map<std::size_t, double> ndcg_at;
    std::size_t evaluated_nodes = 0;  // rows with at least one positive
};

/// Averages over rows having at least one positive attribute.
RankingMetrics ranking_metrics(const Matrix& scores, const Matrix& truth, const std::vector<std::size_t>& ks);

struct RmseCorr {
    double rmse = 0.0;
    double corr = 0.0;
};

/// RMSE over every entry; CORR is the mean per-row Pearson correlation
/// (rows where either side has zero variance contribute 0).
RmseCorr rmse_and_corr(const Matrix& x_hat, const Matrix& truth);

// ---------------------------------------------------------------------------
// Clustering

struct KMeansResult {
    std::vector<std::uint32_t> assignment;
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
};

/// k-means++ seeding, Lloyd iterations until the assignment stops changing or
/// 300 iterations. An emptied cluster is re-seeded at the point farthest from
/// its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations = 300);

/// Maximum-weight perfect assignment of rows to columns (Hungarian method).
/// Rectangular inputs are padded with zeros; result[r] is the column for row r,
/// or -1 if row r was matched to padding.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

struct ClusterMetrics {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    double f1 = 0.0;
};

ClusterMetrics clustering_metrics(const std::vector<std::uint32_t>& assignment, const std::vector<std::uint32_t>& labels);

// ---------------------------------------------------------------------------
// Classification

struct ClassifierConfig {
    std::size_t folds = 5;
    std::size_t hidden = 256;
    double lr = 1e-2;
    std::size_t epochs = 300;
};

struct ClassificationResult {
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracy;
};

/// Stratified k-fold cross-validation of a one-hidden-layer ReLU/softmax MLP
/// trained full-batch with Adam. Throws InputError when a class has fewer
/// members than folds, or when fewer than two classes are present.
ClassificationResult classify_cv(const Matrix& features, const std::vector<std::uint32_t>& labels, std::uint64_t seed,
                                 const ClassifierConfig& cfg = {});

/// Fold id per sample: each class is shuffled and dealt round-robin.
std::vector<std::uint32_t> stratified_folds(const std::vector<std::uint32_t>& labels, std::size_t folds,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// KNN homogeneity

inline const std::vector<std::size_t> kDefaultHomogeneityKs = {1, 10, 20, 50, 100, 200};

struct HomogeneityCurve {
    std::map<std::size_t, double> at;
};

/// Each row links to its k most cosine-similar other rows (ties by index);
/// value = fraction of those directed links joining equal labels.
HomogeneityCurve knn_homogeneity(const Matrix& features, const std::vector<std::uint32_t>& labels,
                                 const std::vector<std::size_t>& ks);

} // namespace attrecon
