// Command-line front end: prefill, train, eval, sweep-missing, ablate, gen-synth.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attrecon/pipeline.hpp"

namespace {

using namespace attrecon;

struct CommonOptions {
    std::string dataset_dir;
    std::string content;
    std::string cites;
    std::string profile = "citation";
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> known_frac;
    std::optional<double> missing_rate;
    std::optional<double> known_within_train;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    std::optional<double> tau;
    std::optional<double> epsilon;
    std::optional<double> gamma_decay;
    std::optional<double> alpha_global;
    std::optional<double> beta_reset;
    std::optional<std::size_t> iters;
    std::optional<std::string> sign_mode;
    std::optional<std::size_t> epochs;
    std::optional<double> lr;
    std::optional<double> dropout;
    std::optional<std::string> arch;
    std::optional<std::size_t> hidden;
    std::optional<std::size_t> latent;
    std::optional<std::string> prop_mode;
    std::optional<std::string> recon_target;
    std::optional<std::string> nlsc_sampling;
    std::optional<std::size_t> nlsc_samples;
    std::optional<std::size_t> val_every;
    std::optional<std::size_t> classifier_epochs;
    std::vector<std::size_t> ks;
    bool no_classify = false;
    bool no_cluster = false;
    bool no_homogeneity = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--dataset-dir", o.dataset_dir, "Native dataset directory (graph.edges, features.bin, labels.txt)");
    sub->add_option("--content", o.content, "Content file of a content/cites dataset");
    sub->add_option("--cites", o.cites, "Cites file of a content/cites dataset");
    sub->add_option("--profile", o.profile, "Default hyperparameter profile")
        ->check(CLI::IsMember({"citation", "large"}));
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--seed", o.seed, "Seed for the split, initialization, dropout and evaluation");
    auto* kf = sub->add_option("--known-frac", o.known_frac, "Fraction of nodes with known attributes")
                   ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--missing-rate", o.missing_rate, "Attribute missing rate (known fraction = 1 - rate)")
        ->check(CLI::Range(0.0, 1.0))
        ->excludes(kf);
    sub->add_option("--known-within-train", o.known_within_train, "Share of the train partition kept as known nodes")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--lambda1", o.lambda1, "NHS loss weight");
    sub->add_option("--lambda2", o.lambda2, "NLSC loss weight");
    sub->add_option("--tau", o.tau, "NLSC similarity gate");
    sub->add_option("--epsilon", o.epsilon, "Weight of the confidence term in the augmented embedding");
    sub->add_option("--gamma-decay", o.gamma_decay, "Distance attenuation factor of the confidence weights");
    sub->add_option("--alpha-global", o.alpha_global, "Weight of the known-mean term in pre-filling");
    sub->add_option("--beta-reset", o.beta_reset, "Weight of the evolving known rows in pre-filling");
    sub->add_option("--iters", o.iters, "Propagation iterations");
    sub->add_option("--sign-mode", o.sign_mode, "Orientation of the pair losses")
        ->check(CLI::IsMember({"intent-consistent", "as-written"}));
    sub->add_option("--epochs", o.epochs, "Training epochs");
    sub->add_option("--lr", o.lr, "Adam learning rate");
    sub->add_option("--dropout", o.dropout, "Encoder hidden-layer dropout rate");
    sub->add_option("--arch", o.arch, "Encoder/decoder architecture")->check(CLI::IsMember({"mlp1-mlp1", "gcn2-mlp2"}));
    sub->add_option("--hidden", o.hidden, "Hidden width");
    sub->add_option("--latent", o.latent, "Latent dimension");
    sub->add_option("--prop-mode", o.prop_mode, "Pre-filling rule")->check(CLI::IsMember({"fp", "taap"}));
    sub->add_option("--recon-target", o.recon_target, "Reconstruction target for known rows")
        ->check(CLI::IsMember({"refined", "original"}));
    sub->add_option("--nlsc-sampling", o.nlsc_sampling, "Non-edge enumeration for the NLSC loss")
        ->check(CLI::IsMember({"auto", "exact", "sampled"}));
    sub->add_option("--nlsc-samples", o.nlsc_samples, "Sampled non-edges per epoch");
    sub->add_option("--val-every", o.val_every, "Validation Recall@10 cadence in epochs (0 disables)");
    sub->add_option("--classifier-epochs", o.classifier_epochs, "Epochs of the evaluation classifier");
    sub->add_option("--ks", o.ks, "K values for Recall@K and nDCG@K")->delimiter(',');
    sub->add_flag("--no-classify", o.no_classify, "Skip node classification");
    sub->add_flag("--no-cluster", o.no_cluster, "Skip clustering");
    sub->add_flag("--no-homogeneity", o.no_homogeneity, "Skip KNN homogeneity");
}

RunConfig build_config(const CommonOptions& o) {
    RunConfig c;
    c.dataset_dir = o.dataset_dir;
    c.content = o.content;
    c.cites = o.cites;
    c.out_dir = o.out_dir;
    c.train = TrainConfig::for_profile(profile_from_string(o.profile));
    c.propagation.iterations = o.iters.value_or(c.propagation.iterations);
    c.propagation.alpha_global = o.alpha_global.value_or(c.propagation.alpha_global);
    c.propagation.beta_reset = o.beta_reset.value_or(c.propagation.beta_reset);
    if (o.prop_mode) c.propagation.mode = *o.prop_mode == "fp" ? PropagationMode::FP : PropagationMode::TAAP;

    if (o.known_frac) c.split = SplitFractions::for_missing_rate(1.0 - *o.known_frac);
    c.missing_rate = o.missing_rate;
    c.known_within_train = o.known_within_train.value_or(1.0);

    auto& t = c.train;
    t.seed = o.seed.value_or(t.seed);
    t.epochs = o.epochs.value_or(t.epochs);
    t.lr = o.lr.value_or(t.lr);
    t.dropout = o.dropout.value_or(t.dropout);
    if (o.arch) t.arch = architecture_from_string(*o.arch);
    t.hidden = o.hidden.value_or(t.hidden);
    t.latent = o.latent.value_or(t.latent);
    t.gamma_decay = o.gamma_decay.value_or(t.gamma_decay);
    t.epsilon = o.epsilon.value_or(t.epsilon);
    t.val_every = o.val_every.value_or(t.val_every);

    auto& l = t.loss;
    l.lambda1 = o.lambda1.value_or(l.lambda1);
    l.lambda2 = o.lambda2.value_or(l.lambda2);
    l.tau = o.tau.value_or(l.tau);
    if (o.sign_mode) l.sign_mode = sign_mode_from_string(*o.sign_mode);
    if (o.recon_target) l.recon_target = *o.recon_target == "original" ? ReconTarget::Original : ReconTarget::Refined;
    if (o.nlsc_sampling) {
        l.nlsc_sampling = *o.nlsc_sampling == "exact"     ? NlscSampling::Exact
                          : *o.nlsc_sampling == "sampled" ? NlscSampling::Sampled
                                                          : NlscSampling::Auto;
    }
    l.nlsc_sample_count = o.nlsc_samples.value_or(l.nlsc_sample_count);

    if (!o.ks.empty()) c.ks = o.ks;
    c.classification = !o.no_classify;
    c.clustering = !o.no_cluster;
    c.homogeneity = !o.no_homogeneity;
    c.classifier.epochs = o.classifier_epochs.value_or(c.classifier.epochs);
    c.validate();
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attribute reconstruction on attribute-missing graphs"};
    app.require_subcommand(1);

    CommonOptions common;
    auto* prefill = app.add_subcommand("prefill", "Propagation only; writes x_tilde.bin");
    auto* train = app.add_subcommand("train", "Pre-fill, train and evaluate");
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or a reconstruction file");
    auto* sweep = app.add_subcommand("sweep-missing", "Train and evaluate across missing rates");
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the six ablation variants");
    auto* synth = app.add_subcommand("gen-synth", "Write a stochastic-block-model dataset");
    for (auto* sub : {prefill, train, eval, sweep, ablate}) add_common(sub, common);

    bool skip_prefill = false;
    std::string x_tilde_path;
    train->add_flag("--skip-prefill", skip_prefill, "Read refined attributes from --x-tilde instead of propagating");
    train->add_option("--x-tilde", x_tilde_path, "x_tilde.bin written by prefill");

    EvalOptions eval_opts;
    eval->add_option("--checkpoint", eval_opts.checkpoint, "params.ckpt written by train");
    eval->add_option("--x-hat", eval_opts.x_hat, "x_hat.bin written by train");
    eval->add_option("--z", eval_opts.z, "z.bin written by train (enables clustering with --x-hat)");
    eval->add_option("--x-tilde", eval_opts.x_tilde, "x_tilde.bin to encode with --checkpoint");

    std::vector<double> rates = kDefaultMissingRates;
    sweep->add_option("--rates", rates, "Missing rates")->delimiter(',')->check(CLI::Range(0.0, 1.0));

    SbmConfig sbm;
    std::string synth_out = "synth";
    synth->add_option("--blocks", sbm.blocks, "Number of blocks");
    synth->add_option("--per-block", sbm.per_block, "Nodes per block");
    synth->add_option("--p-in", sbm.p_in, "Edge probability within a block");
    synth->add_option("--p-out", sbm.p_out, "Edge probability across blocks");
    synth->add_option("--features", sbm.feature_dim, "Feature dimension");
    synth->add_option("--p-feature-owned", sbm.p_feature_owned, "On-probability of features owned by the block");
    synth->add_option("--p-feature-noise", sbm.p_feature_noise, "On-probability of other features");
    synth->add_option("--seed", sbm.seed, "Generator seed");
    synth->add_option("--out-dir", synth_out, "Output dataset directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        nlohmann::json report;
        if (synth->parsed()) {
            report = cmd_gen_synth(sbm, synth_out);
        } else {
            const RunConfig cfg = build_config(common);
            if (prefill->parsed()) {
                report = cmd_prefill(cfg);
            } else if (train->parsed()) {
                if (skip_prefill && x_tilde_path.empty()) throw ConfigError("--skip-prefill requires --x-tilde");
                TrainOptions opts;
                if (skip_prefill) opts.x_tilde = x_tilde_path;
                report = cmd_train(cfg, opts);
            } else if (eval->parsed()) {
                report = cmd_eval(cfg, eval_opts);
            } else if (sweep->parsed()) {
                report = cmd_sweep_missing(cfg, rates);
            } else {
                report = cmd_ablate(cfg);
            }
        }
        std::cout << report.dump(2) << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
