#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "attrecon/objective.hpp"
#include "test_util.hpp"

using namespace attrecon;
using testutil::make_graph;

namespace {

/// Two 2-D rows whose cosine similarity is exactly cos(angle).
Matrix pair_at_angle(double angle) {
    Matrix e(2, 2);
    e << 1.0, 0.0, std::cos(angle), std::sin(angle);
    return e;
}

double softplus(double x) { return std::log1p(std::exp(x)); }

LossConfig exact_cfg(SignMode mode = SignMode::IntentConsistent) {
    LossConfig c;
    c.sign_mode = mode;
    c.nlsc_sampling = NlscSampling::Exact;
    return c;
}

/// Dense oracle for both pair losses.
std::pair<double, double> pair_oracle(const Matrix& e, const Graph& g, const LossConfig& cfg) {
    double nhs = 0.0, nlsc = 0.0;
    const bool intent = cfg.sign_mode == SignMode::IntentConsistent;
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
        for (NodeId j = i + 1; j < g.num_nodes(); ++j) {
            const double s = cosine_similarity(e.row(i), e.row(j));
            if (g.has_edge(i, j)) {
                nhs += intent ? softplus(-s) : -softplus(-s);
            } else if (s >= cfg.tau) {
                nlsc += intent ? softplus(s) : softplus(-s);
            }
        }
    }
    return {nhs, nlsc};
}

} // namespace

TEST_CASE("recon_loss: examples") {
    const Matrix a = testutil::random_matrix(5, 3, 1);
    CHECK(recon_loss(a, a) == 0.0);

    Matrix t(1, 2), h(1, 2);
    t << 1.0, 0.0;
    h << 0.5, 0.5;
    CHECK(recon_loss(t, h) == 0.5);

    const Matrix b = testutil::random_matrix(5, 3, 2);
    const Matrix doubled = a + 2.0 * (b - a);
    CHECK(recon_loss(a, doubled) == doctest::Approx(4.0 * recon_loss(a, b)).epsilon(1e-12));

    // Mean over rows of the per-row squared norms.
    CHECK(recon_loss(a, b) == doctest::Approx((a - b).squaredNorm() / 5.0).epsilon(1e-12));

    CHECK_THROWS_AS(recon_loss(Matrix(0, 3), Matrix(0, 3)), InputError);
    CHECK_THROWS_AS(recon_loss(a, Matrix::Zero(5, 2)), InputError);
}

TEST_CASE("cosine_similarity: examples") {
    Eigen::RowVectorXd a(3), b(3), z(3);
    a << 1, 2, 3;
    b << -3, 0, 1;
    z.setZero();
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(a, b) == 0.0);
    CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(cosine_similarity(a, z) == 0.0);
    CHECK(cosine_similarity(z, z) == 0.0);
}

TEST_CASE("nhs_loss: examples") {
    const Graph edge = make_graph(2, {{0, 1}});
    {
        const auto r = nhs_loss(pair_at_angle(M_PI / 2), edge, exact_cfg());
        CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(r.loss == doctest::Approx(0.6931).epsilon(1e-4));
        CHECK(r.pairs == 1);
        CHECK_FALSE(r.no_edges);
    }
    {
        const auto r = nhs_loss(pair_at_angle(0.0), edge, exact_cfg());
        CHECK(r.loss == doctest::Approx(0.3133).epsilon(1e-4));
    }
    {
        const auto r = nhs_loss(pair_at_angle(0.0), make_graph(2, {}), exact_cfg());
        CHECK(r.loss == 0.0);
        CHECK(r.no_edges);
    }
}

TEST_CASE("nhs_loss: as-written is the exact negation of intent-consistent") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Graph g = testutil::random_graph(20, 0.2, seed);
        const Matrix e = testutil::random_matrix(20, 5, seed);
        const auto a = nhs_loss(e, g, exact_cfg(SignMode::IntentConsistent));
        const auto b = nhs_loss(e, g, exact_cfg(SignMode::AsWritten));
        CHECK(b.loss == -a.loss);
        CHECK(b.score == a.score);
    }
}

TEST_CASE("nlsc_loss: examples") {
    const Graph none = make_graph(2, {});
    {
        // sim = 0.1 is below tau = 0.2: contributes nothing.
        const auto r = nlsc_loss(pair_at_angle(std::acos(0.1)), none, exact_cfg());
        CHECK(r.loss == 0.0);
        CHECK(r.active == 0);
        CHECK(r.pairs == 1);
    }
    {
        const auto r = nlsc_loss(pair_at_angle(0.0), none, exact_cfg());
        CHECK(r.loss == doctest::Approx(1.3133).epsilon(1e-4));
        CHECK(r.loss == doctest::Approx(softplus(1.0)).epsilon(1e-12));
        CHECK(r.active == 1);
    }
    {
        const auto r = nlsc_loss(pair_at_angle(0.0), none, exact_cfg(SignMode::AsWritten));
        CHECK(r.loss == doctest::Approx(softplus(-1.0)).epsilon(1e-12));
    }
    {
        // Exactly at the threshold the pair is gated in.
        LossConfig c = exact_cfg();
        c.tau = 0.0;
        const auto r = nlsc_loss(pair_at_angle(M_PI / 2), none, c);
        CHECK(r.active == 1);
        CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    {
        std::vector<Edge> all;
        for (NodeId i = 0; i < 6; ++i)
            for (NodeId j = i + 1; j < 6; ++j) all.emplace_back(i, j);
        const auto r = nlsc_loss(testutil::random_matrix(6, 3, 1), make_graph(6, all), exact_cfg());
        CHECK(r.loss == 0.0);
        CHECK(r.pairs == 0);
    }
}

TEST_CASE("nhs/nlsc: agree with a dense pairwise oracle") {
    for (SignMode mode : {SignMode::IntentConsistent, SignMode::AsWritten}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const std::size_t n = 30 + 70 * (seed % 2) + 250 * (seed == 9);  // covers multi-block enumeration
            const Graph g = testutil::random_graph(n, 0.1, seed);
            const Matrix e = testutil::random_matrix(n, 4, seed + 50);
            const LossConfig cfg = exact_cfg(mode);
            const auto [nhs, nlsc] = pair_oracle(e, g, cfg);
            CHECK(nhs_loss(e, g, cfg).loss == doctest::Approx(nhs).epsilon(1e-10));
            const auto r = nlsc_loss(e, g, cfg);
            CHECK(r.loss == doctest::Approx(nlsc).epsilon(1e-10));
            CHECK(r.pairs == n * (n - 1) / 2 - g.num_edges());
        }
    }
}

TEST_CASE("nhs/nlsc gradients match finite differences") {
    for (SignMode mode : {SignMode::IntentConsistent, SignMode::AsWritten}) {
        const Graph g = testutil::random_graph(12, 0.3, 4);
        const Matrix e = testutil::random_matrix(12, 3, 5);
        const LossConfig cfg = exact_cfg(mode);
        Matrix g_nhs = Matrix::Zero(12, 3), g_nlsc = Matrix::Zero(12, 3);
        nhs_loss(e, g, cfg, &g_nhs, 0.5);
        nlsc_loss(e, g, cfg, nullptr, &g_nlsc, 2.0);
        const double h = 1e-6;
        int checked = 0;
        for (Eigen::Index i = 0; i < e.size(); ++i) {
            Matrix ep = e, em = e;
            ep.data()[i] += h;
            em.data()[i] -= h;
            const auto lp = nlsc_loss(ep, g, cfg), lm = nlsc_loss(em, g, cfg);
            CHECK(0.5 * (nhs_loss(ep, g, cfg).loss - nhs_loss(em, g, cfg).loss) / (2 * h) ==
                  doctest::Approx(g_nhs.data()[i]).epsilon(1e-6));
            // Skip coordinates whose perturbation crosses the tau gate.
            if (lp.active != lm.active) continue;
            ++checked;
            CHECK(2.0 * (lp.loss - lm.loss) / (2 * h) == doctest::Approx(g_nlsc.data()[i]).epsilon(1e-6));
        }
        CHECK(checked > 30);
    }
}

TEST_CASE("nhs decreases and nlsc increases with pair similarity") {
    const Graph edge = make_graph(2, {{0, 1}});
    const Graph none = make_graph(2, {});
    double prev_nhs = std::numeric_limits<double>::infinity();
    double prev_nlsc = -1.0;
    // Angles from acos(0.2) down to 0, i.e. similarity from tau up to 1.
    for (int k = 0; k <= 20; ++k) {
        const double angle = std::acos(0.2) * (1.0 - k / 20.0);
        const Matrix e = pair_at_angle(angle);
        const double nhs = nhs_loss(e, edge, exact_cfg()).loss;
        const double nlsc = nlsc_loss(e, none, exact_cfg()).loss;
        if (k > 0) {
            CHECK(nhs < prev_nhs);
            CHECK(nlsc > prev_nlsc);
        }
        prev_nhs = nhs;
        prev_nlsc = nlsc;
    }
}

TEST_CASE("nlsc sampled estimate is unbiased") {
    const std::size_t n = 50;
    const Graph g = testutil::random_graph(n, 0.1, 7);
    const Matrix e = testutil::random_matrix(n, 4, 8, -0.2, 1.0);
    LossConfig cfg = exact_cfg();
    const double exact = nlsc_loss(e, g, cfg).loss;
    REQUIRE(exact > 0.0);

    cfg.nlsc_sampling = NlscSampling::Sampled;
    cfg.nlsc_sample_count = 100;
    double sum = 0.0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        CounterRng rng(123, 4, static_cast<std::uint64_t>(r));
        const auto s = nlsc_loss(e, g, cfg, &rng);
        CHECK(s.sampled);
        sum += s.loss;
    }
    CHECK(std::abs(sum / reps - exact) <= 0.02 * exact);

    CHECK_THROWS_AS(nlsc_loss(e, g, cfg, nullptr), InputError);
}

TEST_CASE("nlsc_is_exact follows the node-count switch") {
    LossConfig c;
    CHECK(nlsc_is_exact(c, 5000));
    CHECK_FALSE(nlsc_is_exact(c, 5001));
    c.nlsc_sampling = NlscSampling::Exact;
    CHECK(nlsc_is_exact(c, 100000));
    c.nlsc_sampling = NlscSampling::Sampled;
    CHECK_FALSE(nlsc_is_exact(c, 10));
}

TEST_CASE("total_loss: examples and errors") {
    LossConfig c;
    CHECK(total_loss(1.0, 2.0, 3.0, c) == doctest::Approx(1.5).epsilon(1e-15));
    c.lambda1 = c.lambda2 = 0.0;
    CHECK(total_loss(1.25, 2.0, 3.0, c) == 1.25);
    c.lambda2 = 0.0;
    for (double l1 : {0.0, 0.5, 1.0, 2.0}) {
        c.lambda1 = l1;
        CHECK(total_loss(1.0, 2.0, 3.0, c) == doctest::Approx(1.0 + 2.0 * l1).epsilon(1e-15));
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(total_loss(nan, 0, 0, c), doctest::Contains("recon"), NumericError);
    CHECK_THROWS_WITH_AS(total_loss(0, inf, 0, c), doctest::Contains("NHS"), NumericError);
    CHECK_THROWS_WITH_AS(total_loss(0, 0, nan, c), doctest::Contains("NLSC"), NumericError);
}

TEST_CASE("LossConfig validation") {
    LossConfig c;
    CHECK_NOTHROW(c.validate());
    c.tau = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = LossConfig{};
    c.lambda1 = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(sign_mode_from_string("sideways"), ConfigError);
    for (SignMode m : {SignMode::IntentConsistent, SignMode::AsWritten}) CHECK(sign_mode_from_string(to_string(m)) == m);
}

TEST_CASE("pair losses are invariant to node relabelling") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::size_t n = 40;
        const Graph g = testutil::random_graph(n, 0.15, seed);
        const Matrix e = testutil::random_matrix(n, 5, seed + 9);
        std::vector<NodeId> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        CounterRng rng(seed, 77);
        attrecon::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Edge> pe;
        for (const auto& [u, v] : g.edge_list()) pe.emplace_back(perm[u], perm[v]);
        const Graph pg = make_graph(n, pe);
        Matrix pe_emb(n, 5);
        for (std::size_t i = 0; i < n; ++i) pe_emb.row(perm[i]) = e.row(i);
        const LossConfig cfg = exact_cfg();
        CHECK(nhs_loss(pe_emb, pg, cfg).loss == doctest::Approx(nhs_loss(e, g, cfg).loss).epsilon(1e-12));
        CHECK(nlsc_loss(pe_emb, pg, cfg).loss == doctest::Approx(nlsc_loss(e, g, cfg).loss).epsilon(1e-12));
        const Matrix target = testutil::random_matrix(n, 5, seed + 10);
        Matrix pt(n, 5);
        for (std::size_t i = 0; i < n; ++i) pt.row(perm[i]) = target.row(i);
        CHECK(recon_loss(pt, pe_emb) == doctest::Approx(recon_loss(target, e)).epsilon(1e-12));
    }
}
