#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "attrecon/metrics.hpp"
#include "test_util.hpp"

using namespace attrecon;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

/// Among all orderings of the F dimensions, the ranking is the unique one in
/// which scores never increase and equal scores keep ascending index order.
std::vector<std::size_t> oracle_ranking(const Eigen::RowVectorXd& s) {
    std::vector<std::size_t> perm(static_cast<std::size_t>(s.size()));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (std::size_t i = 0; i + 1 < perm.size() && ok; ++i) {
            const double a = s(perm[i]), b = s(perm[i + 1]);
            ok = a > b || (a == b && perm[i] < perm[i + 1]);
        }
        if (ok) return perm;
    } while (std::next_permutation(perm.begin(), perm.end()));
    FAIL("no valid ranking");
    return {};
}

std::pair<double, double> oracle_recall_ndcg(const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& t, std::size_t k) {
    const auto rank = oracle_ranking(s);
    k = std::min<std::size_t>(k, rank.size());
    std::size_t pos = 0;
    for (Eigen::Index j = 0; j < t.size(); ++j) pos += t(j) > 0.5;
    double hits = 0.0, dcg = 0.0, idcg = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        if (t(rank[r]) > 0.5) {
            hits += 1.0;
            dcg += 1.0 / std::log2(double(r) + 2.0);
        }
        if (r < pos) idcg += 1.0 / std::log2(double(r) + 2.0);
    }
    return {hits / double(std::min(k, pos)), dcg / idcg};
}

double brute_force_assignment(const Eigen::MatrixXd& w) {
    const auto n = std::max(w.rows(), w.cols());
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, n);
    sq.topLeftCorner(w.rows(), w.cols()) = w;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1e300;
    do {
        double s = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) s += sq(r, perm[static_cast<std::size_t>(r)]);
        best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<std::uint32_t> random_labels(std::size_t n, std::uint32_t classes, std::uint64_t seed) {
    CounterRng rng(seed, 500);
    std::vector<std::uint32_t> l(n);
    for (auto& x : l) x = static_cast<std::uint32_t>(rng.below(classes));
    return l;
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    CounterRng rng(seed, 501);
    attrecon::shuffle(p.begin(), p.end(), rng);
    return p;
}

} // namespace

TEST_CASE("top_k: ordering and ties") {
    CHECK(top_k(row({0.1, 0.9, 0.5, 0.9}), 3) == std::vector<std::size_t>{1, 3, 2});
    CHECK(top_k(row({0.0, 0.0, 0.0}), 2) == std::vector<std::size_t>{0, 1});
    CHECK(top_k(row({0.3, 0.2}), 5).size() == 2);
}

TEST_CASE("recall_at_k / ndcg_at_k: hand examples") {
    // positives {2,5}; scores rank 5 first and 1 second.
    const auto truth = row({0, 0, 1, 0, 0, 1});
    const auto scores = row({0.1, 0.8, 0.3, 0.2, 0.0, 0.9});
    CHECK(*recall_at_k(scores, truth, 2) == 0.5);
    CHECK(*ndcg_at_k(scores, truth, 2) == doctest::Approx(1.0 / (1.0 + 1.0 / std::log2(3.0))).epsilon(1e-12));
    CHECK(*ndcg_at_k(scores, truth, 2) == doctest::Approx(0.6131).epsilon(1e-4));

    CHECK(*recall_at_k(truth, truth, 2) == 1.0);
    CHECK(*recall_at_k(truth, truth, 50) == 1.0);
    CHECK(*ndcg_at_k(truth, truth, 3) == doctest::Approx(1.0).epsilon(1e-15));

    const auto miss = row({0.9, 0.8, 0.0, 0.0, 0.0, 0.0});
    CHECK(*ndcg_at_k(miss, truth, 2) == 0.0);
    CHECK(*recall_at_k(miss, truth, 2) == 0.0);

    // K beyond F clamps to F.
    CHECK(*recall_at_k(scores, truth, 100) == *recall_at_k(scores, truth, 6));
    CHECK(*ndcg_at_k(scores, truth, 100) == *ndcg_at_k(scores, truth, 6));

    CHECK_FALSE(recall_at_k(scores, row({0, 0, 0, 0, 0, 0}), 2).has_value());
    CHECK_FALSE(ndcg_at_k(scores, row({0, 0, 0, 0, 0, 0}), 2).has_value());
}

TEST_CASE("recall_at_k / ndcg_at_k match an exhaustive ranking oracle") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CounterRng rng(seed, 502);
        const auto f = static_cast<Eigen::Index>(2 + rng.below(7));  // 2..8
        Eigen::RowVectorXd s(f), t(f);
        for (Eigen::Index j = 0; j < f; ++j) {
            s(j) = double(rng.below(4)) / 4.0;  // coarse values force ties
            t(j) = rng.bernoulli(0.4) ? 1.0 : 0.0;
        }
        if (t.sum() == 0.0) t(0) = 1.0;
        for (std::size_t k = 1; k <= static_cast<std::size_t>(f) + 1; ++k) {
            const auto [rec, ndcg] = oracle_recall_ndcg(s, t, k);
            CHECK(*recall_at_k(s, t, k) == doctest::Approx(rec).epsilon(1e-12));
            CHECK(*ndcg_at_k(s, t, k) == doctest::Approx(ndcg).epsilon(1e-12));
        }
    }
}

TEST_CASE("ranking_metrics: averages over rows with positives, values in [0,1]") {
    Matrix scores = testutil::random_matrix(20, 8, 1, 0.0, 1.0);
    Matrix truth = (testutil::random_matrix(20, 8, 2, 0.0, 1.0).array() > 0.7).cast<double>().matrix();
    truth.row(3).setZero();
    truth.row(7).setZero();
    const auto m = ranking_metrics(scores, truth, {1, 3, 50});
    CHECK(m.evaluated_nodes == 20 - static_cast<std::size_t>((truth.rowwise().sum().array() == 0.0).count()));
    for (std::size_t k : {1, 3, 50}) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < 20; ++i) {
            if (auto r = recall_at_k(scores.row(i), truth.row(i), k)) sum += *r;
        }
        CHECK(m.recall_at.at(k) == doctest::Approx(sum / double(m.evaluated_nodes)).epsilon(1e-12));
        CHECK((m.recall_at.at(k) >= 0.0 && m.recall_at.at(k) <= 1.0));
        CHECK((m.ndcg_at.at(k) >= 0.0 && m.ndcg_at.at(k) <= 1.0));
    }

    // Node permutation invariance (up to summation order).
    const auto perm = random_permutation(20, 3);
    Matrix ps(20, 8), pt(20, 8);
    for (std::size_t i = 0; i < 20; ++i) {
        ps.row(perm[i]) = scores.row(i);
        pt.row(perm[i]) = truth.row(i);
    }
    const auto pm = ranking_metrics(ps, pt, {1, 3, 50});
    for (std::size_t k : {1, 3, 50}) {
        CHECK(pm.recall_at.at(k) == doctest::Approx(m.recall_at.at(k)).epsilon(1e-12));
        CHECK(pm.ndcg_at.at(k) == doctest::Approx(m.ndcg_at.at(k)).epsilon(1e-12));
    }
}

TEST_CASE("rmse_and_corr: examples") {
    const Matrix t = testutil::random_matrix(6, 5, 4);
    const auto exact = rmse_and_corr(t, t);
    CHECK(exact.rmse == 0.0);
    CHECK(exact.corr == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rmse_and_corr(-t, t).corr == doctest::Approx(-1.0).epsilon(1e-12));

    Matrix truth(1, 2), pred(1, 2);
    truth << 0, 1;
    pred << 0.5, 0.5;
    const auto r = rmse_and_corr(pred, truth);
    CHECK(r.rmse == 0.5);
    CHECK(r.corr == 0.0);
    CHECK_THROWS_AS(rmse_and_corr(Matrix(0, 2), Matrix(0, 2)), InputError);
}

TEST_CASE("kmeans: examples") {
    Matrix p(4, 2);
    p << 0, 0, 0.1, 0, 10, 10, 10, 10.1;
    const auto r = kmeans(p, 2, 72);
    CHECK(r.assignment[0] == r.assignment[1]);
    CHECK(r.assignment[2] == r.assignment[3]);
    CHECK(r.assignment[0] != r.assignment[2]);
    CHECK(r.inertia == doctest::Approx(0.01).epsilon(1e-9));

    const auto all = kmeans(p, 4, 1);
    CHECK(std::set<std::uint32_t>(all.assignment.begin(), all.assignment.end()).size() == 4);
    CHECK(all.inertia == 0.0);

    const Matrix pts = testutil::random_matrix(60, 3, 5);
    const auto a = kmeans(pts, 4, 9), b = kmeans(pts, 4, 9);
    CHECK(a.assignment == b.assignment);
    CHECK(a.centroids == b.centroids);
    CHECK(a.iterations <= 300);

    CHECK_THROWS_AS(kmeans(p, 5, 1), InputError);
    CHECK_THROWS_AS(kmeans(p, 0, 1), InputError);
}

TEST_CASE("kmeans: more clusters than distinct points terminates with zero inertia") {
    Matrix p = Matrix::Zero(6, 2);
    p.row(5) << 1, 1;
    const auto r = kmeans(p, 3, 2);
    CHECK(r.iterations <= 300);
    CHECK(r.inertia == 0.0);
    CHECK(r.assignment[0] != r.assignment[5]);
    CHECK(r.centroids.rows() == 3);
}

TEST_CASE("max_weight_assignment equals brute force") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CounterRng rng(seed, 503);
        const auto rows = static_cast<Eigen::Index>(1 + rng.below(6));
        const auto cols = static_cast<Eigen::Index>(1 + rng.below(6));
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = double(rng.below(10));
        const auto a = max_weight_assignment(w);
        REQUIRE(a.size() == static_cast<std::size_t>(rows));
        double total = 0.0;
        std::set<int> used;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const int c = a[static_cast<std::size_t>(r)];
            if (c < 0) continue;
            CHECK(c < cols);
            CHECK(used.insert(c).second);
            total += w(r, c);
        }
        CHECK(total == brute_force_assignment(w));
    }
}

TEST_CASE("clustering_metrics: examples") {
    const std::vector<std::uint32_t> labels = {0, 0, 1, 1, 2, 2, 2};
    const std::vector<std::uint32_t> permuted = {2, 2, 0, 0, 1, 1, 1};
    const auto m = clustering_metrics(permuted, labels);
    CHECK(m.acc == 1.0);
    CHECK(m.nmi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.ari == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<std::uint32_t> two = {0, 0, 0, 1, 1, 1};
    const auto single = clustering_metrics(std::vector<std::uint32_t>(6, 0), two);
    CHECK(single.acc == 0.5);
    CHECK(single.ari == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(single.nmi == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(clustering_metrics({0, 1}, {0, 1, 1}), InputError);
}

TEST_CASE("clustering_metrics: ACC equals brute force over label permutations; ranges; invariance") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::uint32_t k = 2 + static_cast<std::uint32_t>(seed % 5);  // 2..6
        const auto labels = random_labels(40, k, seed);
        const auto assign = random_labels(40, k, seed + 1000);
        const auto m = clustering_metrics(assign, labels);
        Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(k, k);
        for (std::size_t i = 0; i < 40; ++i) confusion(assign[i], labels[i]) += 1.0;
        CHECK(m.acc == doctest::Approx(brute_force_assignment(confusion) / 40.0).epsilon(1e-12));
        CHECK((m.acc >= 0 && m.acc <= 1 && m.nmi >= 0 && m.nmi <= 1 + 1e-12 && m.f1 >= 0 && m.f1 <= 1));
        CHECK((m.ari >= -1 && m.ari <= 1));

        // Cluster-id relabelling and consistent node permutation leave everything unchanged.
        std::vector<std::uint32_t> relabel(k);
        std::iota(relabel.begin(), relabel.end(), 0u);
        std::reverse(relabel.begin(), relabel.end());
        const auto perm = random_permutation(40, seed);
        std::vector<std::uint32_t> pa(40), pl(40);
        for (std::size_t i = 0; i < 40; ++i) {
            pa[perm[i]] = relabel[assign[i]];
            pl[perm[i]] = labels[i];
        }
        const auto p = clustering_metrics(pa, pl);
        CHECK(p.acc == doctest::Approx(m.acc).epsilon(1e-12));
        CHECK(p.nmi == doctest::Approx(m.nmi).epsilon(1e-12));
        CHECK(p.ari == doctest::Approx(m.ari).epsilon(1e-12));
        CHECK(p.f1 == doctest::Approx(m.f1).epsilon(1e-12));
    }
}

TEST_CASE("stratified_folds: balanced per class and deterministic") {
    const auto labels = random_labels(103, 3, 7);
    const auto f = stratified_folds(labels, 5, 72);
    CHECK(f == stratified_folds(labels, 5, 72));
    for (std::uint32_t c = 0; c < 3; ++c) {
        std::vector<int> count(5, 0);
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) ++count[f[i]];
        CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
    }
    std::vector<int> total(5, 0);
    for (auto x : f) ++total[x];
    CHECK(*std::max_element(total.begin(), total.end()) - *std::min_element(total.begin(), total.end()) <= 1);
}

TEST_CASE("classify_cv: separable, chance-level, determinism, errors") {
    const std::size_t n = 100;
    std::vector<std::uint32_t> labels(n);
    Matrix sep = testutil::random_matrix(n, 4, 11);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<std::uint32_t>(i % 2);
        sep(static_cast<Eigen::Index>(i), 0) += labels[i] ? 3.0 : -3.0;
    }
    const auto s = classify_cv(sep, labels, 72);
    CHECK(s.mean_accuracy >= 0.95);
    CHECK(s.fold_accuracy.size() == 5);

    const Matrix noise = testutil::random_matrix(200, 8, 12);
    std::vector<std::uint32_t> coin(200);
    for (std::size_t i = 0; i < 200; ++i) coin[i] = static_cast<std::uint32_t>(i % 2);
    const auto r = classify_cv(noise, coin, 72);
    CHECK(std::abs(r.mean_accuracy - 0.5) <= 0.1);

    const auto again = classify_cv(sep, labels, 72);
    CHECK(again.fold_accuracy == s.fold_accuracy);

    std::vector<std::uint32_t> small = labels;
    small[0] = small[2] = small[4] = 2;  // class 2 has three members
    CHECK_THROWS_AS(classify_cv(sep, small, 72), InputError);
    CHECK_THROWS_AS(classify_cv(sep, std::vector<std::uint32_t>(n, 0), 72), InputError);
}

TEST_CASE("knn_homogeneity: examples, range and permutation invariance") {
    const std::size_t per = 6;
    Matrix onehot = Matrix::Zero(3 * per, 3);
    std::vector<std::uint32_t> labels(3 * per);
    for (std::size_t i = 0; i < 3 * per; ++i) {
        labels[i] = static_cast<std::uint32_t>(i / per);
        onehot(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    const auto h = knn_homogeneity(onehot, labels, {1, 3, 5});
    for (std::size_t k : {1, 3, 5}) CHECK(h.at.at(k) == 1.0);

    const Matrix feats = testutil::random_matrix(300, 10, 13);
    std::vector<std::uint32_t> coin(300);
    for (std::size_t i = 0; i < 300; ++i) coin[i] = static_cast<std::uint32_t>(i % 2);
    const auto r = knn_homogeneity(feats, coin, {10, 50});
    for (const auto& [k, v] : r.at) {
        CHECK((v >= 0.0 && v <= 1.0));
        CHECK(std::abs(v - 0.5) <= 0.05);
    }

    const auto perm = random_permutation(300, 14);
    Matrix pf(300, 10);
    std::vector<std::uint32_t> pl(300);
    for (std::size_t i = 0; i < 300; ++i) {
        pf.row(static_cast<Eigen::Index>(perm[i])) = feats.row(static_cast<Eigen::Index>(i));
        pl[perm[i]] = coin[i];
    }
    const auto pr = knn_homogeneity(pf, pl, {10, 50});
    for (std::size_t k : {10, 50}) CHECK(pr.at.at(k) == doctest::Approx(r.at.at(k)).epsilon(1e-12));

    CHECK_THROWS_AS(knn_homogeneity(onehot, labels, {3 * per}), InputError);
    CHECK_THROWS_AS(knn_homogeneity(onehot, labels, {0}), InputError);
}
