#include "attrecon/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "attrecon/metrics.hpp"
#include "attrecon/propagation.hpp"

namespace attrecon {

std::string to_string(DatasetProfile p) { return p == DatasetProfile::Citation ? "citation" : "large"; }

DatasetProfile profile_from_string(const std::string& s) {
    if (s == "citation") return DatasetProfile::Citation;
    if (s == "large") return DatasetProfile::Large;
    throw ConfigError("unknown dataset profile '" + s + "'");
}

TrainConfig TrainConfig::for_profile(DatasetProfile profile) {
    TrainConfig c;
    c.profile = profile;
    if (profile == DatasetProfile::Citation) {
        c.arch = Architecture::Mlp1Mlp1;
        c.lr = 1e-3;
        c.epochs = 1000;
        c.dropout = 0.8;
    } else {
        c.arch = Architecture::Gcn2Mlp2;
        c.lr = 1e-2;
        c.epochs = 400;
        c.dropout = 0.2;
    }
    return c;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
    if (hidden == 0 || latent == 0) throw ConfigError("hidden and latent sizes must be positive");
    if (!(gamma_decay > 0.0 && gamma_decay < 1.0)) throw ConfigError("gamma_decay must lie in (0,1)");
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    loss.validate();
}

ParamTensors ParamTensors::zeros_like(const ModelParams& p) {
    return {Matrix::Zero(p.phi0.rows(), p.phi0.cols()), Matrix::Zero(p.phi1.rows(), p.phi1.cols()),
            Matrix::Zero(p.theta0.rows(), p.theta0.cols()), Matrix::Zero(p.theta1.rows(), p.theta1.cols())};
}

std::array<Matrix*, 4> weight_tensors(ModelParams& p) { return {&p.phi0, &p.phi1, &p.theta0, &p.theta1}; }
std::array<const Matrix*, 4> weight_tensors(const ModelParams& p) { return {&p.phi0, &p.phi1, &p.theta0, &p.theta1}; }

TrainingInputs make_training_inputs(const Graph& g, const NormalizedAdjacency& a_hat, const NodeMask& mask,
                                    const Matrix& x_tilde, const Matrix& x_known_original, FeatureKind kind,
                                    const TrainConfig& cfg) {
    if (static_cast<std::size_t>(x_tilde.rows()) != g.num_nodes() || mask.num_nodes() != g.num_nodes()) {
        throw InputError("training inputs: row counts do not match the graph");
    }
    if (mask.known_count() == 0) throw InputError("training inputs: at least one known node is required");
    if (!x_tilde.allFinite()) throw NumericError("training inputs: refined attributes contain non-finite values");

    TrainingInputs in;
    in.graph = &g;
    in.a_hat = &a_hat;
    in.mask = &mask;
    in.kind = kind;
    in.encoder_input = encoder_input(x_tilde, a_hat, cfg.arch);
    if (cfg.loss.recon_target == ReconTarget::Refined) {
        in.recon_target = gather_rows(x_tilde, mask.known_nodes());
    } else {
        if (static_cast<std::size_t>(x_known_original.rows()) != mask.known_count() ||
            x_known_original.cols() != x_tilde.cols()) {
            throw InputError("training inputs: original known rows must be k x F");
        }
        in.recon_target = x_known_original;
    }
    in.weights = confidence_weights(topo_position(g, mask), cfg.gamma_decay);
    return in;
}

namespace {

// Shared forward (and optionally backward) pass.
LossReport run_pass(const ModelParams& p, const TrainingInputs& in, const TrainConfig& cfg, const StepContext& ctx,
                    const FrozenEspc* frozen_in, Matrix& z_out, FrozenEspc& frozen_out, ParamTensors* grads) {
    const auto& known = in.mask->known_nodes();
    const auto k = static_cast<double>(known.size());

    EncoderTrace et;
    encode_traced(in.encoder_input, *in.a_hat, p, ctx.dropout_mask, et);
    const Matrix& z = et.z;

    const Matrix z_known = gather_rows(z, known);
    DecoderTrace dt;
    decode_traced(z_known, p, in.kind, dt);

    LossReport rep;
    rep.recon = recon_loss(in.recon_target, dt.output);

    if (frozen_in != nullptr) {
        frozen_out = *frozen_in;
    } else {
        frozen_out.correlation = correlation_matrix(z);
        frozen_out.center = z.colwise().mean();
    }
    const AugmentedEmbedding aug =
        augment_embedding(z, in.weights, frozen_out.correlation, cfg.epsilon, frozen_out.center);

    const bool want_grad = grads != nullptr;
    Matrix grad_e;
    if (want_grad) grad_e = Matrix::Zero(z.rows(), z.cols());

    const PairObjective nhs = nhs_loss(aug.e, *in.graph, cfg.loss, want_grad ? &grad_e : nullptr, cfg.loss.lambda1);
    rep.nhs = nhs.loss;
    rep.nhs_score = nhs.score;
    if (cfg.loss.lambda2 > 0.0) {
        auto rng = CounterRng(ctx.nlsc_seed, static_cast<std::uint64_t>(RngStream::NlscSample), ctx.nlsc_substream);
        const PairObjective nlsc =
            nlsc_loss(aug.e, *in.graph, cfg.loss, &rng, want_grad ? &grad_e : nullptr, cfg.loss.lambda2);
        rep.nlsc = nlsc.loss;
        rep.nlsc_score = nlsc.score;
    }
    rep.total = total_loss(rep.recon, rep.nhs, rep.nlsc, cfg.loss);

    if (want_grad) {
        // Decoder (known rows only).
        Matrix d_out = (2.0 / k) * (dt.output - in.recon_target);
        if (in.kind == FeatureKind::Binary) d_out.array() *= dt.output.array() * (1.0 - dt.output.array());
        grads->theta1.noalias() = dt.hidden.transpose() * d_out;
        Matrix d_dec_hidden;
        d_dec_hidden.noalias() = d_out * p.theta1.transpose();
        d_dec_hidden.array() *= (dt.pre_hidden.array() > 0.0).cast<double>();
        grads->theta0.noalias() = z_known.transpose() * d_dec_hidden;
        Matrix d_z_known;
        d_z_known.noalias() = d_dec_hidden * p.theta0.transpose();

        // Embedding regularizers through E = Z + ε B with W, C, Z̄ constant.
        Matrix d_z = augment_embedding_backward(grad_e, in.weights, frozen_out.correlation, cfg.epsilon);
        for (std::size_t r = 0; r < known.size(); ++r) d_z.row(known[r]) += d_z_known.row(static_cast<Eigen::Index>(r));

        // Encoder.
        Matrix d_pre_z = d_z.array() * z.array() * (1.0 - z.array());
        Matrix d_proj = p.arch == Architecture::Gcn2Mlp2 ? spmm(*in.a_hat, d_pre_z) : std::move(d_pre_z);
        grads->phi1.noalias() = et.hidden.transpose() * d_proj;
        Matrix d_hidden;
        d_hidden.noalias() = d_proj * p.phi1.transpose();
        if (ctx.dropout_mask != nullptr) d_hidden.array() *= ctx.dropout_mask->array();
        d_hidden.array() *= (et.pre_hidden.array() > 0.0).cast<double>();
        grads->phi0.noalias() = et.input->transpose() * d_hidden;

        const auto tensors = grads->tensors();
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            if (!tensors[t]->allFinite()) {
                throw NumericError(std::string("compute_gradients: non-finite gradient in ") + kTensorNames[t]);
            }
        }
    }
    z_out = z;
    return rep;
}

} // namespace

ForwardResult evaluate_objective(const ModelParams& p, const TrainingInputs& in, const TrainConfig& cfg,
                                 const StepContext& ctx, const FrozenEspc* frozen) {
    ForwardResult out;
    out.report = run_pass(p, in, cfg, ctx, frozen, out.z, out.frozen, nullptr);
    return out;
}

GradientResult compute_gradients(const ModelParams& p, const TrainingInputs& in, const TrainConfig& cfg,
                                 const StepContext& ctx) {
    GradientResult out;
    out.grads = ParamTensors::zeros_like(p);
    out.report = run_pass(p, in, cfg, ctx, nullptr, out.z, out.frozen, &out.grads);
    return out;
}

AdamState AdamState::for_params(const ModelParams& p) {
    AdamState s;
    s.m = ParamTensors::zeros_like(p);
    s.v = ParamTensors::zeros_like(p);
    return s;
}

void adam_step(ModelParams& p, const ParamTensors& grads, AdamState& state, double lr) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    const auto weights = weight_tensors(p);
    const auto g = grads.tensors();
    const auto m = state.m.tensors();
    const auto v = state.v.tensors();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (g[i]->rows() != weights[i]->rows() || g[i]->cols() != weights[i]->cols()) {
            throw InputError(std::string("adam_step: gradient shape mismatch for ") + kTensorNames[i]);
        }
        m[i]->array() = state.beta1 * m[i]->array() + (1.0 - state.beta1) * g[i]->array();
        v[i]->array() = state.beta2 * v[i]->array() + (1.0 - state.beta2) * g[i]->array().square();
        weights[i]->array() -=
            lr * (m[i]->array() / bias1) / ((v[i]->array() / bias2).sqrt() + state.eps);
    }
}

namespace {

double validation_recall(const ModelParams& p, const TrainingInputs& in) {
    Matrix z;
    if (p.arch == Architecture::Mlp1Mlp1) {
        // Row-local encoder: only the validation rows are needed.
        EncoderTrace t;
        encode_traced(gather_rows(in.encoder_input, in.val_nodes), *in.a_hat, p, nullptr, t);
        z = std::move(t.z);
    } else {
        EncoderTrace t;
        encode_traced(in.encoder_input, *in.a_hat, p, nullptr, t);
        z = gather_rows(t.z, in.val_nodes);
    }
    const Matrix x_hat = decode(z, p, in.kind);
    const auto m = ranking_metrics(x_hat, in.val_truth, {10});
    return m.evaluated_nodes == 0 ? std::numeric_limits<double>::quiet_NaN() : m.recall_at.at(10);
}

} // namespace

TrainResult train(const Graph& g, const NormalizedAdjacency& a_hat, const NodeMask& mask, const Matrix& x_tilde,
                  const Matrix& x_known_original, FeatureKind kind, const TrainConfig& cfg,
                  const std::vector<NodeId>& val_nodes, const Matrix& val_truth, const EpochCallback& on_epoch) {
    cfg.validate();
    TrainingInputs in = make_training_inputs(g, a_hat, mask, x_tilde, x_known_original, kind, cfg);
    if (!val_nodes.empty()) {
        if (static_cast<std::size_t>(val_truth.rows()) != val_nodes.size() || val_truth.cols() != x_tilde.cols()) {
            throw InputError("train: validation truth must have one row per validation node");
        }
        in.val_nodes = val_nodes;
        in.val_truth = val_truth;
    }

    const ModelDims dims{static_cast<std::size_t>(x_tilde.cols()), cfg.hidden, cfg.latent, cfg.hidden};
    TrainResult result;
    result.params = init_params(cfg.seed, dims, cfg.arch, cfg.dropout);
    AdamState adam = AdamState::for_params(result.params);
    result.history.reserve(cfg.epochs);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::optional<Matrix> dropout_mask;
        if (cfg.dropout > 0.0) {
            auto rng = make_rng(cfg.seed, RngStream::Dropout, epoch);
            dropout_mask = draw_dropout_mask(g.num_nodes(), cfg.hidden, cfg.dropout, rng);
        }
        const StepContext ctx{dropout_mask ? &*dropout_mask : nullptr, cfg.seed, epoch};
        GradientResult gr;
        try {
            gr = compute_gradients(result.params, in, cfg, ctx);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        adam_step(result.params, gr.grads, adam, cfg.lr);
        if (!result.params.all_finite()) throw NumericError("epoch " + std::to_string(epoch) + ": parameters became non-finite");

        EpochRecord rec{epoch, gr.report, std::numeric_limits<double>::quiet_NaN()};
        if (!in.val_nodes.empty() && cfg.val_every > 0 && (epoch % cfg.val_every == 0 || epoch == cfg.epochs)) {
            rec.val_recall10 = validation_recall(result.params, in);
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }

    EncoderTrace t;
    encode_traced(in.encoder_input, a_hat, result.params, nullptr, t);
    result.z = std::move(t.z);
    result.x_hat = decode(result.z, result.params, kind);
    return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write history: " + path.string());
    out << "epoch,recon,nhs,nlsc,total,val_recall@10\n";
    out << std::setprecision(17);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.loss.recon << ',' << r.loss.nhs << ',' << r.loss.nlsc << ',' << r.loss.total << ',';
        if (!std::isnan(r.val_recall10)) out << r.val_recall10;
        out << '\n';
    }
}

} // namespace attrecon
