#include "attrecon/model.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

#include <json.hpp>

#include "attrecon/binary_io.hpp"

namespace attrecon {

namespace {

void sigmoid_inplace(Matrix& m) { m = (1.0 + (-m.array()).exp()).inverse().matrix(); }

void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0); }

Matrix glorot(std::size_t fan_in, std::size_t fan_out, CounterRng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    return w;
}

void expect_cols(const Matrix& x, const Matrix& w, const char* what) {
    if (x.cols() != w.rows()) {
        throw InputError(std::string(what) + ": input has " + std::to_string(x.cols()) + " columns, weight expects " +
                         std::to_string(w.rows()));
    }
}

} // namespace

std::string to_string(Architecture a) { return a == Architecture::Gcn2Mlp2 ? "gcn2-mlp2" : "mlp1-mlp1"; }

Architecture architecture_from_string(const std::string& s) {
    if (s == "gcn2-mlp2") return Architecture::Gcn2Mlp2;
    if (s == "mlp1-mlp1") return Architecture::Mlp1Mlp1;
    throw ConfigError("unknown architecture '" + s + "'");
}

std::string to_string(FeatureKind k) { return k == FeatureKind::Binary ? "binary" : "continuous"; }

ModelDims ModelParams::dims() const {
    return {static_cast<std::size_t>(phi0.rows()), static_cast<std::size_t>(phi0.cols()),
            static_cast<std::size_t>(phi1.cols()), static_cast<std::size_t>(theta0.cols())};
}

bool ModelParams::all_finite() const {
    return phi0.allFinite() && phi1.allFinite() && theta0.allFinite() && theta1.allFinite();
}

ModelParams init_params(std::uint64_t seed, const ModelDims& d, Architecture arch, double dropout_rate) {
    if (d.features == 0 || d.hidden == 0 || d.latent == 0 || d.decoder_hidden == 0) {
        throw ConfigError("init_params: every dimension must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("init_params: dropout must lie in [0,1)");
    auto rng = make_rng(seed, RngStream::Init);
    ModelParams p;
    p.phi0 = glorot(d.features, d.hidden, rng);
    p.phi1 = glorot(d.hidden, d.latent, rng);
    p.theta0 = glorot(d.latent, d.decoder_hidden, rng);
    p.theta1 = glorot(d.decoder_hidden, d.features, rng);
    p.dropout_rate = dropout_rate;
    p.arch = arch;
    return p;
}

Matrix draw_dropout_mask(std::size_t rows, std::size_t cols, double rate, CounterRng& rng) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    return m;
}

Matrix encoder_input(const Matrix& x_tilde, const NormalizedAdjacency& a_hat, Architecture arch) {
    if (arch == Architecture::Gcn2Mlp2) return spmm(a_hat, x_tilde);
    return x_tilde;
}

void encode_traced(const Matrix& input, const NormalizedAdjacency& a_hat, const ModelParams& p,
                   const Matrix* dropout_mask, EncoderTrace& t) {
    expect_cols(input, p.phi0, "encode");
    t.input = &input;
    t.pre_hidden.noalias() = input * p.phi0;
    t.hidden = t.pre_hidden;
    relu_inplace(t.hidden);
    if (dropout_mask != nullptr) {
        if (dropout_mask->rows() != t.hidden.rows() || dropout_mask->cols() != t.hidden.cols()) {
            throw InputError("encode: dropout mask shape mismatch");
        }
        t.hidden.array() *= dropout_mask->array();
    }
    if (p.arch == Architecture::Gcn2Mlp2) {
        Matrix projected;
        projected.noalias() = t.hidden * p.phi1;
        spmm_into(a_hat, projected, t.z);
    } else {
        t.z.noalias() = t.hidden * p.phi1;
    }
    sigmoid_inplace(t.z);
}

Matrix encode(const Matrix& x_tilde, const NormalizedAdjacency& a_hat, const ModelParams& p, bool train_mode,
              CounterRng* rng) {
    if (static_cast<std::size_t>(x_tilde.rows()) != a_hat.num_nodes()) {
        throw InputError("encode: feature rows do not match the graph");
    }
    EncoderTrace t;
    std::optional<Matrix> mask;
    if (train_mode && p.dropout_rate > 0.0) {
        if (rng == nullptr) throw InputError("encode: train mode with dropout needs an rng");
        mask = draw_dropout_mask(static_cast<std::size_t>(x_tilde.rows()), static_cast<std::size_t>(p.phi0.cols()),
                                 p.dropout_rate, *rng);
    }
    encode_traced(encoder_input(x_tilde, a_hat, p.arch), a_hat, p, mask ? &*mask : nullptr, t);
    return std::move(t.z);
}

void decode_traced(const Matrix& z, const ModelParams& p, FeatureKind kind, DecoderTrace& t) {
    expect_cols(z, p.theta0, "decode");
    t.pre_hidden.noalias() = z * p.theta0;
    t.hidden = t.pre_hidden;
    relu_inplace(t.hidden);
    t.output.noalias() = t.hidden * p.theta1;
    if (kind == FeatureKind::Binary) sigmoid_inplace(t.output);
}

Matrix decode(const Matrix& z, const ModelParams& p, FeatureKind kind) {
    DecoderTrace t;
    decode_traced(z, p, kind, t);
    return std::move(t.output);
}

void quantize_to_float(ModelParams& p) {
    for (Matrix* m : {&p.phi0, &p.phi1, &p.theta0, &p.theta1}) {
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<float>(m->data()[i]);
    }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
    const auto shape = [](const Matrix& m) { return nlohmann::json::array({m.rows(), m.cols()}); };
    const std::size_t floats = static_cast<std::size_t>(p.phi0.size() + p.phi1.size() + p.theta0.size() + p.theta1.size());
    nlohmann::json header = {
        {"format", "attrecon-params"},
        {"version", 1},
        {"arch", to_string(p.arch)},
        {"dropout", p.dropout_rate},
        {"dtype", "float32-le"},
        {"shapes", {{"phi0", shape(p.phi0)}, {"phi1", shape(p.phi1)}, {"theta0", shape(p.theta0)}, {"theta1", shape(p.theta1)}}},
        {"payload_bytes", floats * 4},
    };
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
    out << header.dump() << '\n';
    for (const Matrix* m : {&p.phi0, &p.phi1, &p.theta0, &p.theta1}) {
        for (Eigen::Index i = 0; i < m->size(); ++i) binary_io::write_f32(out, static_cast<float>(m->data()[i]));
    }
    if (!out) throw FormatError("failed writing checkpoint: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("checkpoint has no header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint header is not valid JSON: " + std::string(e.what()));
    }
    if (header.value("format", "") != "attrecon-params") throw FormatError("not a parameter checkpoint: " + path.string());

    const std::vector<unsigned char> payload{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto expected = header.at("payload_bytes").get<std::size_t>();
    if (payload.size() != expected) {
        throw FormatError("checkpoint payload has " + std::to_string(payload.size()) + " bytes, expected " +
                          std::to_string(expected));
    }

    ModelParams p;
    p.arch = architecture_from_string(header.at("arch").get<std::string>());
    p.dropout_rate = header.at("dropout").get<double>();
    std::size_t offset = 0;
    const auto read = [&](const char* name, Matrix& m) {
        const auto& s = header.at("shapes").at(name);
        m.resize(s.at(0).get<Eigen::Index>(), s.at(1).get<Eigen::Index>());
        if (offset + static_cast<std::size_t>(m.size()) * 4 > payload.size()) {
            throw FormatError("checkpoint shapes exceed payload");
        }
        for (Eigen::Index i = 0; i < m.size(); ++i, offset += 4) m.data()[i] = binary_io::decode_f32(&payload[offset]);
    };
    read("phi0", p.phi0);
    read("phi1", p.phi1);
    read("theta0", p.theta0);
    read("theta1", p.theta1);
    if (offset != payload.size()) throw FormatError("checkpoint shapes do not cover the payload");
    if (p.phi0.cols() != p.phi1.rows() || p.phi1.cols() != p.theta0.rows() || p.theta0.cols() != p.theta1.rows() ||
        p.theta1.cols() != p.phi0.rows()) {
        throw FormatError("checkpoint shapes are inconsistent");
    }
    return p;
}

} // namespace attrecon
