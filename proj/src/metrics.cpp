#include "attrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "attrecon/rng.hpp"

namespace attrecon {

// ---------------------------------------------------------------------------
// Ranking

std::vector<std::size_t> top_k(const RowRef& scores, std::size_t k) {
    const auto f = static_cast<std::size_t>(scores.size());
    k = std::min(k, f);
    std::vector<std::size_t> idx(f);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double sa = scores[static_cast<Eigen::Index>(a)];
                          const double sb = scores[static_cast<Eigen::Index>(b)];
                          return sa > sb || (sa == sb && a < b);
                      });
    idx.resize(k);
    return idx;
}

namespace {

bool positive(double v) { return v > 0.5; }

std::size_t count_positives(const RowRef& truth) {
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) n += positive(truth[i]) ? 1 : 0;
    return n;
}

void check_row_pair(const RowRef& scores, const RowRef& truth) {
    if (scores.size() != truth.size()) throw InputError("ranking metric: score and truth rows differ in length");
}

} // namespace

std::optional<double> recall_at_k(const RowRef& scores, const RowRef& truth, std::size_t k) {
    check_row_pair(scores, truth);
    const std::size_t pos = count_positives(truth);
    if (pos == 0) return std::nullopt;
    k = std::min<std::size_t>(k, static_cast<std::size_t>(scores.size()));
    std::size_t hits = 0;
    for (std::size_t j : top_k(scores, k)) hits += positive(truth[static_cast<Eigen::Index>(j)]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(std::min(k, pos));
}

std::optional<double> ndcg_at_k(const RowRef& scores, const RowRef& truth, std::size_t k) {
    check_row_pair(scores, truth);
    const std::size_t pos = count_positives(truth);
    if (pos == 0) return std::nullopt;
    k = std::min<std::size_t>(k, static_cast<std::size_t>(scores.size()));
    const auto ranked = top_k(scores, k);
    double dcg = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (positive(truth[static_cast<Eigen::Index>(ranked[r])])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, pos); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return dcg / idcg;
}

RankingMetrics ranking_metrics(const Matrix& scores, const Matrix& truth, const std::vector<std::size_t>& ks) {
    if (scores.rows() != truth.rows() || scores.cols() != truth.cols()) {
        throw InputError("ranking_metrics: score and truth matrices differ in shape");
    }
    RankingMetrics out;
    std::map<std::size_t, double> recall_sum;
    std::map<std::size_t, double> ndcg_sum;
    for (std::size_t k : ks) {
        recall_sum[k] = 0.0;
        ndcg_sum[k] = 0.0;
    }
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        if (count_positives(truth.row(i)) == 0) continue;
        ++out.evaluated_nodes;
        for (std::size_t k : ks) {
            recall_sum[k] += *recall_at_k(scores.row(i), truth.row(i), k);
            ndcg_sum[k] += *ndcg_at_k(scores.row(i), truth.row(i), k);
        }
    }
    const double denom = out.evaluated_nodes == 0 ? 1.0 : static_cast<double>(out.evaluated_nodes);
    for (std::size_t k : ks) {
        out.recall_at[k] = recall_sum[k] / denom;
        out.ndcg_at[k] = ndcg_sum[k] / denom;
    }
    return out;
}

RmseCorr rmse_and_corr(const Matrix& x_hat, const Matrix& truth) {
    if (x_hat.rows() != truth.rows() || x_hat.cols() != truth.cols()) {
        throw InputError("rmse_and_corr: shape mismatch");
    }
    if (x_hat.rows() == 0) throw InputError("rmse_and_corr: no rows to evaluate");
    RmseCorr out;
    out.rmse = std::sqrt((x_hat - truth).squaredNorm() / static_cast<double>(x_hat.size()));
    double corr_sum = 0.0;
    for (Eigen::Index i = 0; i < x_hat.rows(); ++i) {
        const Eigen::RowVectorXd a = x_hat.row(i).array() - x_hat.row(i).mean();
        const Eigen::RowVectorXd b = truth.row(i).array() - truth.row(i).mean();
        const double denom = a.norm() * b.norm();
        if (denom > 0.0) corr_sum += std::clamp(a.dot(b) / denom, -1.0, 1.0);
    }
    out.corr = corr_sum / static_cast<double>(x_hat.rows());
    return out;
}

// ---------------------------------------------------------------------------
// k-means

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (k == 0) throw InputError("kmeans: k must be positive");
    if (k > n) throw InputError("kmeans: k=" + std::to_string(k) + " exceeds the number of points " + std::to_string(n));

    auto rng = make_rng(seed, RngStream::KMeans);
    KMeansResult res;
    res.centroids.resize(static_cast<Eigen::Index>(k), points.cols());

    // k-means++ seeding.
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::vector<bool> chosen(n, false);
    std::size_t first = rng.below(n);
    res.centroids.row(0) = points.row(static_cast<Eigen::Index>(first));
    chosen[first] = true;
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (points.row(static_cast<Eigen::Index>(i)) - res.centroids.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                pick = i;
                target -= d2[i];
                if (target < 0.0) break;
            }
        }
        if (pick == n) {
            // Every remaining point coincides with a centroid.
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        chosen[pick] = true;
        res.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
    }

    res.assignment.assign(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> sizes(k);
    bool first_pass = true;
    for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = points.row(static_cast<Eigen::Index>(i));
            std::uint32_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (row - res.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<std::uint32_t>(c);
                }
            }
            if (best != res.assignment[i]) changed = true;
            res.assignment[i] = best;
            dist[i] = best_d;
        }
        if (!changed && !first_pass) break;
        first_pass = false;

        std::fill(sizes.begin(), sizes.end(), 0);
        Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(res.assignment[i]) += points.row(static_cast<Eigen::Index>(i));
            ++sizes[res.assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) {
                res.centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
                continue;
            }
            // Re-seed an empty cluster at the point farthest from its centroid.
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (dist[i] > dist[far]) far = i;
            }
            res.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
            dist[far] = 0.0;
        }
    }

    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res.inertia += (points.row(static_cast<Eigen::Index>(i)) - res.centroids.row(res.assignment[i])).squaredNorm();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Assignment and clustering scores

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
    const auto rows = static_cast<std::size_t>(weights.rows());
    const auto cols = static_cast<std::size_t>(weights.cols());
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return {};
    const double top = weights.size() > 0 ? weights.maxCoeff() : 0.0;

    // Minimum-cost Hungarian method on cost = top - weight (1-based potentials).
    const auto cost = [&](std::size_t i, std::size_t j) {
        const double w = (i < rows && j < cols) ? weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) : 0.0;
        return top - w;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> result(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j] - 1;
        if (i < rows && j - 1 < cols) result[i] = static_cast<int>(j - 1);
    }
    return result;
}

namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

} // namespace

ClusterMetrics clustering_metrics(const std::vector<std::uint32_t>& assignment, const std::vector<std::uint32_t>& labels) {
    if (assignment.size() != labels.size()) throw InputError("clustering_metrics: assignment and labels differ in length");
    const std::size_t n = labels.size();
    ClusterMetrics out;
    if (n == 0) return out;

    const std::size_t clusters = *std::max_element(assignment.begin(), assignment.end()) + 1;
    const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
    Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(classes));
    for (std::size_t i = 0; i < n; ++i) confusion(assignment[i], labels[i]) += 1.0;
    const Eigen::VectorXd cluster_sizes = confusion.rowwise().sum();
    const Eigen::RowVectorXd class_sizes = confusion.colwise().sum();
    const double nn = static_cast<double>(n);

    // ACC and F1 under the best one-to-one cluster -> class mapping. Several
    // mappings can reach the same matched count; among those, prefer the one with
    // the highest macro-F1, so F1 does not depend on how clusters are numbered.
    // Per-pair F1 is 2·n_ck / (|c| + |k|), which keeps the objective additive, and
    // its total stays below one after scaling, so it never outweighs one matched node.
    Eigen::MatrixXd objective = confusion;
    const double f1_scale = 1.0 / static_cast<double>(std::max(clusters, classes) + 1);
    for (Eigen::Index c = 0; c < confusion.rows(); ++c) {
        for (Eigen::Index k = 0; k < confusion.cols(); ++k) {
            const double nck = confusion(c, k);
            if (nck > 0.0) objective(c, k) += f1_scale * 2.0 * nck / (cluster_sizes[c] + class_sizes[k]);
        }
    }
    const auto mapping = max_weight_assignment(objective);
    double matched = 0.0;
    std::vector<double> predicted_count(classes, 0.0);
    std::vector<double> true_positive(classes, 0.0);
    for (std::size_t c = 0; c < clusters; ++c) {
        if (mapping[c] < 0) continue;
        const auto cls = static_cast<Eigen::Index>(mapping[c]);
        matched += confusion(static_cast<Eigen::Index>(c), cls);
        predicted_count[static_cast<std::size_t>(cls)] += cluster_sizes[static_cast<Eigen::Index>(c)];
        true_positive[static_cast<std::size_t>(cls)] += confusion(static_cast<Eigen::Index>(c), cls);
    }
    out.acc = matched / nn;
    double f1_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t cls = 0; cls < classes; ++cls) {
        const double support = class_sizes[static_cast<Eigen::Index>(cls)];
        if (support == 0.0) continue;
        ++present;
        const double tp = true_positive[cls];
        if (tp == 0.0) continue;
        const double precision = tp / predicted_count[cls];
        const double recall = tp / support;
        f1_sum += 2.0 * precision * recall / (precision + recall);
    }
    out.f1 = present == 0 ? 0.0 : f1_sum / static_cast<double>(present);

    // NMI with arithmetic-mean normalization.
    double mi = 0.0;
    for (Eigen::Index c = 0; c < confusion.rows(); ++c) {
        for (Eigen::Index k = 0; k < confusion.cols(); ++k) {
            const double nij = confusion(c, k);
            if (nij > 0.0) mi += nij / nn * std::log(nn * nij / (cluster_sizes[c] * class_sizes[k]));
        }
    }
    const auto entropy = [&](const auto& sizes) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < sizes.size(); ++i) {
            if (sizes[i] > 0.0) h -= sizes[i] / nn * std::log(sizes[i] / nn);
        }
        return h;
    };
    const double h_sum = entropy(cluster_sizes) + entropy(class_sizes);
    out.nmi = h_sum <= 0.0 ? 1.0 : std::clamp(2.0 * std::max(mi, 0.0) / h_sum, 0.0, 1.0);

    // Adjusted Rand index.
    double index = 0.0;
    for (Eigen::Index c = 0; c < confusion.rows(); ++c) {
        for (Eigen::Index k = 0; k < confusion.cols(); ++k) index += choose2(confusion(c, k));
    }
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (Eigen::Index c = 0; c < cluster_sizes.size(); ++c) sum_a += choose2(cluster_sizes[c]);
    for (Eigen::Index k = 0; k < class_sizes.size(); ++k) sum_b += choose2(class_sizes[k]);
    const double expected = sum_a * sum_b / choose2(nn);
    const double max_index = 0.5 * (sum_a + sum_b);
    out.ari = max_index == expected ? 1.0 : (index - expected) / (max_index - expected);
    return out;
}

// ---------------------------------------------------------------------------
// Classification

std::vector<std::uint32_t> stratified_folds(const std::vector<std::uint32_t>& labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw InputError("stratified_folds: need at least 2 folds");
    if (labels.empty()) throw InputError("stratified_folds: no samples");
    const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    std::vector<std::uint32_t> fold(labels.size(), 0);
    std::size_t dealt = 0;  // continue the round-robin across classes to balance fold sizes
    for (std::size_t c = 0; c < classes; ++c) {
        auto& m = members[c];
        if (m.empty()) continue;
        if (m.size() < folds) {
            throw InputError("stratified_folds: class " + std::to_string(c) + " has " + std::to_string(m.size()) +
                             " members, fewer than " + std::to_string(folds) + " folds");
        }
        auto rng = make_rng(seed, RngStream::Folds, c);
        shuffle(m.begin(), m.end(), rng);
        for (std::size_t i : m) fold[i] = static_cast<std::uint32_t>(dealt++ % folds);
    }
    return fold;
}

namespace {

struct Mlp {
    Matrix w1;
    Eigen::RowVectorXd b1;
    Matrix w2;
    Eigen::RowVectorXd b2;
};

struct MlpAdam {
    Mlp m;
    Mlp v;
    std::uint64_t step = 0;
};

Matrix glorot_matrix(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    return w;
}

template <class T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, double bias1, double bias2) {
    m = 0.9 * m + 0.1 * grad;
    v.array() = 0.999 * v.array() + 0.001 * grad.array().square();
    param.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + 1e-8);
}

// Row-wise softmax probabilities of logits.
Matrix softmax(const Matrix& logits) {
    Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

} // namespace

ClassificationResult classify_cv(const Matrix& features, const std::vector<std::uint32_t>& labels, std::uint64_t seed,
                                 const ClassifierConfig& cfg) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (labels.size() != n) throw InputError("classify_cv: labels and features differ in length");
    if (n == 0) throw InputError("classify_cv: no samples");
    const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::size_t> class_count(classes, 0);
    for (auto l : labels) ++class_count[l];
    if (std::count_if(class_count.begin(), class_count.end(), [](std::size_t c) { return c > 0; }) < 2) {
        throw InputError("classify_cv: need at least two classes");
    }
    const auto fold = stratified_folds(labels, cfg.folds, seed);

    ClassificationResult out;
    const auto f = features.cols();
    const auto h = static_cast<Eigen::Index>(cfg.hidden);
    const auto c = static_cast<Eigen::Index>(classes);
    for (std::size_t k = 0; k < cfg.folds; ++k) {
        std::vector<NodeId> train_idx, test_idx;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == k ? test_idx : train_idx).push_back(static_cast<NodeId>(i));
        Matrix x_train(static_cast<Eigen::Index>(train_idx.size()), f);
        Matrix y_train = Matrix::Zero(static_cast<Eigen::Index>(train_idx.size()), c);
        for (std::size_t r = 0; r < train_idx.size(); ++r) {
            x_train.row(static_cast<Eigen::Index>(r)) = features.row(train_idx[r]);
            y_train(static_cast<Eigen::Index>(r), labels[train_idx[r]]) = 1.0;
        }

        auto rng = make_rng(seed, RngStream::Classifier, k);
        Mlp net{glorot_matrix(f, h, rng), Eigen::RowVectorXd::Zero(h), glorot_matrix(h, c, rng), Eigen::RowVectorXd::Zero(c)};
        MlpAdam adam{{Matrix::Zero(f, h), Eigen::RowVectorXd::Zero(h), Matrix::Zero(h, c), Eigen::RowVectorXd::Zero(c)},
                     {Matrix::Zero(f, h), Eigen::RowVectorXd::Zero(h), Matrix::Zero(h, c), Eigen::RowVectorXd::Zero(c)}};
        const double inv_m = 1.0 / static_cast<double>(train_idx.size());

        Matrix pre, hid, probs, d_logits, d_hid;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            pre.noalias() = x_train * net.w1;
            pre.rowwise() += net.b1;
            hid = pre.cwiseMax(0.0);
            Matrix logits = hid * net.w2;
            logits.rowwise() += net.b2;
            probs = softmax(logits);
            d_logits = (probs - y_train) * inv_m;
            const Matrix g_w2 = hid.transpose() * d_logits;
            const Eigen::RowVectorXd g_b2 = d_logits.colwise().sum();
            d_hid.noalias() = d_logits * net.w2.transpose();
            d_hid.array() *= (pre.array() > 0.0).cast<double>();
            const Matrix g_w1 = x_train.transpose() * d_hid;
            const Eigen::RowVectorXd g_b1 = d_hid.colwise().sum();

            ++adam.step;
            const double bias1 = 1.0 - std::pow(0.9, static_cast<double>(adam.step));
            const double bias2 = 1.0 - std::pow(0.999, static_cast<double>(adam.step));
            adam_update(net.w1, g_w1, adam.m.w1, adam.v.w1, cfg.lr, bias1, bias2);
            adam_update(net.b1, g_b1, adam.m.b1, adam.v.b1, cfg.lr, bias1, bias2);
            adam_update(net.w2, g_w2, adam.m.w2, adam.v.w2, cfg.lr, bias1, bias2);
            adam_update(net.b2, g_b2, adam.m.b2, adam.v.b2, cfg.lr, bias1, bias2);
        }

        std::size_t correct = 0;
        for (NodeId i : test_idx) {
            Eigen::RowVectorXd hrow = (features.row(i) * net.w1 + net.b1).cwiseMax(0.0);
            const Eigen::RowVectorXd logits = hrow * net.w2 + net.b2;
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < logits.size(); ++j) {
                if (logits[j] > logits[best]) best = j;
            }
            correct += static_cast<std::uint32_t>(best) == labels[i] ? 1 : 0;
        }
        out.fold_accuracy.push_back(test_idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test_idx.size()));
    }
    out.mean_accuracy = std::accumulate(out.fold_accuracy.begin(), out.fold_accuracy.end(), 0.0) /
                        static_cast<double>(out.fold_accuracy.size());
    return out;
}

// ---------------------------------------------------------------------------
// KNN homogeneity

HomogeneityCurve knn_homogeneity(const Matrix& features, const std::vector<std::uint32_t>& labels,
                                 const std::vector<std::size_t>& ks) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (labels.size() != n) throw InputError("knn_homogeneity: labels and features differ in length");
    if (ks.empty()) return {};
    const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
    if (k_max >= n) {
        throw InputError("knn_homogeneity: k=" + std::to_string(k_max) + " must be smaller than N=" + std::to_string(n));
    }

    Matrix unit = features;
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
        const double norm = unit.row(i).norm();
        if (norm > 0.0) {
            unit.row(i) /= norm;
        } else {
            unit.row(i).setZero();
        }
    }
    const Matrix sim = unit * unit.transpose();

    // same_prefix[r] = number of same-label neighbours among the first r+1.
    std::vector<double> same_at(k_max, 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) order.push_back(j);
        }
        const auto row = sim.row(static_cast<Eigen::Index>(i));
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_max), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double sa = row[static_cast<Eigen::Index>(a)];
                              const double sb = row[static_cast<Eigen::Index>(b)];
                              return sa > sb || (sa == sb && a < b);
                          });
        for (std::size_t r = 0; r < k_max; ++r) same_at[r] += labels[order[r]] == labels[i] ? 1.0 : 0.0;
    }
    HomogeneityCurve out;
    for (std::size_t k : ks) {
        if (k == 0) throw InputError("knn_homogeneity: k must be positive");
        double same = 0.0;
        for (std::size_t r = 0; r < k; ++r) same += same_at[r];
        out.at[k] = same / (static_cast<double>(n) * static_cast<double>(k));
    }
    return out;
}

} // namespace attrecon
