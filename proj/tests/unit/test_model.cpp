#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "attrecon/model.hpp"
#include "test_util.hpp"

using namespace attrecon;

namespace {

ModelDims small_dims() { return ModelDims{6, 5, 4, 3}; }

ModelParams zero_params(const ModelDims& d, Architecture arch) {
    ModelParams p = init_params(1, d, arch, 0.0);
    p.phi0.setZero();
    p.phi1.setZero();
    p.theta0.setZero();
    p.theta1.setZero();
    return p;
}

std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "attrecon_test_model";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("init_params: deterministic, seed-sensitive, within the Glorot bound") {
    for (Architecture arch : {Architecture::Mlp1Mlp1, Architecture::Gcn2Mlp2}) {
        const ModelParams a = init_params(72, small_dims(), arch, 0.2);
        const ModelParams b = init_params(72, small_dims(), arch, 0.2);
        const ModelParams c = init_params(73, small_dims(), arch, 0.2);
        CHECK(a.phi0 == b.phi0);
        CHECK(a.phi1 == b.phi1);
        CHECK(a.theta0 == b.theta0);
        CHECK(a.theta1 == b.theta1);
        CHECK(a.phi0 != c.phi0);
        CHECK(a.theta1 != c.theta1);
        CHECK(a.arch == arch);
        CHECK(a.dropout_rate == 0.2);
        for (const Matrix* m : {&a.phi0, &a.phi1, &a.theta0, &a.theta1}) {
            const double bound = std::sqrt(6.0 / double(m->rows() + m->cols()));
            CHECK(m->cwiseAbs().maxCoeff() <= bound);
            CHECK(m->cwiseAbs().maxCoeff() > 0.0);
        }
        const ModelDims d = a.dims();
        CHECK(d.features == 6);
        CHECK(d.hidden == 5);
        CHECK(d.latent == 4);
        CHECK(d.decoder_hidden == 3);
    }
}

TEST_CASE("init_params: zero dimensions and bad dropout are config errors") {
    for (int which = 0; which < 4; ++which) {
        ModelDims d = small_dims();
        (which == 0 ? d.features : which == 1 ? d.hidden : which == 2 ? d.latent : d.decoder_hidden) = 0;
        CHECK_THROWS_AS(init_params(1, d, Architecture::Mlp1Mlp1, 0.0), ConfigError);
    }
    CHECK_THROWS_AS(init_params(1, small_dims(), Architecture::Mlp1Mlp1, 1.0), ConfigError);
    CHECK_THROWS_AS(init_params(1, small_dims(), Architecture::Mlp1Mlp1, -0.1), ConfigError);
}

TEST_CASE("architecture names round-trip") {
    for (Architecture a : {Architecture::Mlp1Mlp1, Architecture::Gcn2Mlp2}) CHECK(architecture_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(architecture_from_string("transformer"), ConfigError);
}

TEST_CASE("encode: zero weights give one half everywhere") {
    const Graph g = testutil::random_connected_graph(10, 5, 3);
    const NormalizedAdjacency a(g);
    const Matrix x = testutil::random_matrix(10, 6, 4);
    for (Architecture arch : {Architecture::Mlp1Mlp1, Architecture::Gcn2Mlp2}) {
        const Matrix z = encode(x, a, zero_params(small_dims(), arch), false);
        CHECK(z.rows() == 10);
        CHECK(z.cols() == 4);
        CHECK((z.array() == 0.5).all());
    }
}

TEST_CASE("encode: isolated single node under gcn2 gives one half regardless of x") {
    const NormalizedAdjacency a(testutil::make_graph(1, {}));
    for (double v : {-3.0, 0.0, 1.0, 100.0}) {
        const Matrix x = Matrix::Constant(1, 1, v);
        const ModelParams p = init_params(5, ModelDims{1, 1, 1, 1}, Architecture::Gcn2Mlp2, 0.0);
        CHECK(encode(x, a, p, false)(0, 0) == 0.5);
    }
}

TEST_CASE("encode: matches the defining formulas") {
    const Graph g = testutil::random_connected_graph(12, 6, 8);
    const NormalizedAdjacency a(g);
    const Matrix ad = testutil::dense_adjacency(a);
    const Matrix x = testutil::random_matrix(12, 6, 9);
    const auto sigmoid = [](const Matrix& m) -> Matrix { return (1.0 / (1.0 + (-m.array()).exp())).matrix(); };
    {
        const ModelParams p = init_params(2, small_dims(), Architecture::Mlp1Mlp1, 0.0);
        const Matrix expect = sigmoid((x * p.phi0).cwiseMax(0.0) * p.phi1);
        CHECK((encode(x, a, p, false) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    {
        const ModelParams p = init_params(2, small_dims(), Architecture::Gcn2Mlp2, 0.0);
        const Matrix expect = sigmoid(ad * (ad * x * p.phi0).cwiseMax(0.0) * p.phi1);
        CHECK((encode(x, a, p, false) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("encode: eval mode is deterministic and ignores dropout") {
    const Graph g = testutil::random_connected_graph(15, 5, 1);
    const NormalizedAdjacency a(g);
    const Matrix x = testutil::random_matrix(15, 6, 2);
    const ModelParams p = init_params(3, small_dims(), Architecture::Gcn2Mlp2, 0.5);
    const Matrix z1 = encode(x, a, p, false);
    const Matrix z2 = encode(x, a, p, false);
    CHECK(z1 == z2);
    CHECK((z1.array() > 0.0).all());
    CHECK((z1.array() < 1.0).all());

    CounterRng r1(7, 3), r2(7, 3), r3(8, 3);
    const Matrix t1 = encode(x, a, p, true, &r1);
    const Matrix t2 = encode(x, a, p, true, &r2);
    const Matrix t3 = encode(x, a, p, true, &r3);
    CHECK(t1 == t2);
    CHECK(t1 != t3);
    CHECK(t1 != z1);
    CHECK_THROWS_AS(encode(x, a, p, true, nullptr), InputError);
}

TEST_CASE("draw_dropout_mask: inverted scaling") {
    CounterRng rng(1, 3);
    const Matrix m = draw_dropout_mask(200, 50, 0.8, rng);
    const double scale = 1.0 / (1.0 - 0.8);
    CHECK(((m.array() == 0.0) || (m.array() == scale)).all());
    CHECK(scale == doctest::Approx(5.0).epsilon(1e-12));
    const double keep = (m.array() > 0.0).cast<double>().mean();
    CHECK(keep == doctest::Approx(0.2).epsilon(0.1));
    CHECK(m.mean() == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("encode/decode: shape mismatches are input errors") {
    const NormalizedAdjacency a(testutil::path_graph(4));
    const ModelParams p = init_params(1, small_dims(), Architecture::Mlp1Mlp1, 0.0);
    CHECK_THROWS_AS(encode(Matrix::Zero(4, 5), a, p, false), InputError);
    CHECK_THROWS_AS(encode(Matrix::Zero(3, 6), a, p, false), InputError);
    CHECK_THROWS_AS(decode(Matrix::Zero(4, 3), p, FeatureKind::Binary), InputError);
}

TEST_CASE("decode: zero theta and output ranges") {
    const Matrix z = testutil::random_matrix(9, 4, 6, 0.0, 1.0);
    const ModelParams zp = zero_params(small_dims(), Architecture::Mlp1Mlp1);
    CHECK((decode(z, zp, FeatureKind::Binary).array() == 0.5).all());
    CHECK(decode(z, zp, FeatureKind::Continuous).isZero(0.0));

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        // Latents as the encoder produces them (in (0,1)); weights scaled up so
        // logits reach well beyond the sigmoid's linear region without saturating
        // double precision.
        ModelParams p = init_params(seed, small_dims(), Architecture::Mlp1Mlp1, 0.0);
        p.theta1 *= 10.0;
        const Matrix zz = testutil::random_matrix(9, 4, seed, 0.0, 1.0);
        const Matrix xb = decode(zz, p, FeatureKind::Binary);
        CHECK((xb.array() > 0.0).all());
        CHECK((xb.array() < 1.0).all());
        const Matrix xc = decode(zz, p, FeatureKind::Continuous);
        CHECK(xc.allFinite());
        // The binary head is the sigmoid of the continuous one.
        CHECK((xb - (1.0 / (1.0 + (-xc.array()).exp())).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("checkpoint: bit-exact round trip of float32-representable weights") {
    for (Architecture arch : {Architecture::Mlp1Mlp1, Architecture::Gcn2Mlp2}) {
        ModelParams p = init_params(11, small_dims(), arch, 0.3);
        quantize_to_float(p);
        const auto path = temp_path("roundtrip.ckpt");
        save_checkpoint(path, p);
        const ModelParams q = load_checkpoint(path);
        CHECK(q.phi0 == p.phi0);
        CHECK(q.phi1 == p.phi1);
        CHECK(q.theta0 == p.theta0);
        CHECK(q.theta1 == p.theta1);
        CHECK(q.arch == arch);
        CHECK(q.dropout_rate == p.dropout_rate);

        // Saving unquantized weights stores their float32 rounding.
        ModelParams raw = init_params(12, small_dims(), arch, 0.3);
        save_checkpoint(path, raw);
        const ModelParams r = load_checkpoint(path);
        quantize_to_float(raw);
        CHECK(r.phi0 == raw.phi0);
        CHECK(r.theta1 == raw.theta1);
    }
}

TEST_CASE("checkpoint: corrupt files are format errors") {
    const ModelParams p = init_params(1, small_dims(), Architecture::Mlp1Mlp1, 0.0);
    const auto path = temp_path("corrupt.ckpt");
    save_checkpoint(path, p);
    const auto size = std::filesystem::file_size(path);

    SUBCASE("truncated payload") {
        std::filesystem::resize_file(path, size - 4);
        CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    }
    SUBCASE("trailing bytes") {
        std::ofstream(path, std::ios::binary | std::ios::app) << "xxxx";
        CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    }
    SUBCASE("header is not JSON") {
        std::ofstream(path, std::ios::binary) << "not json\n";
        CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(temp_path("does_not_exist.ckpt")), FormatError);
    }
}
