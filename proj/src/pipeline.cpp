#include "attrecon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "attrecon/rng.hpp"

namespace attrecon {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string to_string(PropagationMode m) { return m == PropagationMode::FP ? "fp" : "taap"; }

std::string to_string(ReconTarget t) { return t == ReconTarget::Refined ? "refined" : "original"; }

std::string to_string(NlscSampling s) {
    switch (s) {
        case NlscSampling::Exact: return "exact";
        case NlscSampling::Sampled: return "sampled";
        case NlscSampling::Auto: break;
    }
    return "auto";
}

json dataset_json(const Dataset& ds) {
    return {{"name", ds.name},
            {"nodes", ds.graph.num_nodes()},
            {"edges", ds.graph.num_edges()},
            {"features", ds.features.cols()},
            {"kind", to_string(ds.kind)},
            {"classes", ds.num_classes()}};
}

json split_json(const SplitMask& s) {
    return {{"seed", s.seed},
            {"known", s.known.known_count()},
            {"masked_train", s.masked_train.size()},
            {"val", s.val.size()},
            {"test", s.test.size()}};
}

json loss_json(const LossReport& r) {
    return {{"recon", r.recon}, {"nhs", r.nhs},           {"nlsc", r.nlsc},
            {"total", r.total}, {"nhs_score", r.nhs_score}, {"nlsc_score", r.nlsc_score}};
}

void write_timing(const std::filesystem::path& dir, Clock::time_point start) {
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    write_report(dir / "timing.json", json{{"wall_clock_seconds", seconds}});
}

std::size_t distinct_count(const std::vector<std::uint32_t>& v) { return std::set<std::uint32_t>(v.begin(), v.end()).size(); }

std::vector<std::uint32_t> gather_labels(const std::vector<std::uint32_t>& labels, const std::vector<NodeId>& nodes) {
    std::vector<std::uint32_t> out;
    out.reserve(nodes.size());
    for (NodeId v : nodes) out.push_back(labels[v]);
    return out;
}

// Relabels to 0..c-1 in ascending order of the original ids, so metrics that
// size their tables by max(label)+1 do not see empty classes.
std::vector<std::uint32_t> compact_labels(const std::vector<std::uint32_t>& labels) {
    std::vector<std::uint32_t> sorted(labels);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::uint32_t> out;
    out.reserve(labels.size());
    for (auto l : labels) {
        out.push_back(static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), l) - sorted.begin()));
    }
    return out;
}

json curve_json(const HomogeneityCurve& c) {
    json j = json::object();
    for (const auto& [k, v] : c.at) j[std::to_string(k)] = v;
    return j;
}

} // namespace

// ---------------------------------------------------------------------------

SplitFractions RunConfig::effective_split() const {
    return missing_rate ? SplitFractions::for_missing_rate(*missing_rate) : split;
}

void RunConfig::validate() const {
    effective_split().validate();
    if (!(known_within_train > 0.0 && known_within_train <= 1.0)) throw ConfigError("known_within_train must lie in (0,1]");
    propagation.validate();
    train.validate();
    if (ks.empty()) throw ConfigError("at least one K is required");
    for (auto k : ks) {
        if (k == 0) throw ConfigError("K must be positive");
    }
}

json config_to_json(const RunConfig& cfg) {
    const auto eff = cfg.effective_split();
    const auto& t = cfg.train;
    const auto& l = t.loss;
    return {
        {"data", {{"dataset_dir", cfg.dataset_dir.string()}, {"content", cfg.content.string()}, {"cites", cfg.cites.string()}}},
        {"split",
         {{"known", eff.known},
          {"val", eff.val},
          {"test", eff.test},
          {"missing_rate", cfg.missing_rate ? json(*cfg.missing_rate) : json(nullptr)},
          {"known_within_train", cfg.known_within_train}}},
        {"propagation",
         {{"mode", to_string(cfg.propagation.mode)},
          {"iterations", cfg.propagation.iterations},
          {"alpha_global", cfg.propagation.alpha_global},
          {"beta_reset", cfg.propagation.beta_reset}}},
        {"train",
         {{"profile", to_string(t.profile)},
          {"arch", to_string(t.arch)},
          {"lr", t.lr},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"dropout", t.dropout},
          {"hidden", t.hidden},
          {"latent", t.latent},
          {"gamma_decay", t.gamma_decay},
          {"epsilon", t.epsilon},
          {"val_every", t.val_every}}},
        {"loss",
         {{"lambda1", l.lambda1},
          {"lambda2", l.lambda2},
          {"tau", l.tau},
          {"sign_mode", to_string(l.sign_mode)},
          {"recon_target", to_string(l.recon_target)},
          {"nlsc_sampling", to_string(l.nlsc_sampling)},
          {"nlsc_sample_count", l.nlsc_sample_count},
          {"nlsc_exact_max_nodes", l.nlsc_exact_max_nodes}}},
        {"eval",
         {{"ks", cfg.ks},
          {"classification", cfg.classification},
          {"clustering", cfg.clustering},
          {"homogeneity", cfg.homogeneity},
          {"classifier",
           {{"folds", cfg.classifier.folds},
            {"hidden", cfg.classifier.hidden},
            {"lr", cfg.classifier.lr},
            {"epochs", cfg.classifier.epochs}}}}},
    };
}

Dataset load_dataset(const RunConfig& cfg) {
    if (!cfg.dataset_dir.empty()) return load_binary_dataset(cfg.dataset_dir);
    if (!cfg.content.empty() && !cfg.cites.empty()) return load_content_format(cfg.content, cfg.cites);
    throw ConfigError("no dataset given: use --dataset-dir or --content with --cites");
}

PreparedData prepare_data(const Dataset& ds, const RunConfig& cfg) {
    PreparedData d;
    d.split = make_split_mask(ds.graph.num_nodes(), cfg.effective_split(), cfg.train.seed, cfg.known_within_train);
    if (d.split.known.known_count() == 0) throw InputError("the split leaves no known nodes");
    // Masked rows are never inspected here: they may legitimately hold anything.
    ds.validate_rows(d.split.known.known_nodes());
    // Only known rows are copied; every other row stays zero.
    d.x_known_original = gather_rows(ds.features, d.split.known.known_nodes());
    d.x_init = Matrix::Zero(ds.features.rows(), ds.features.cols());
    const auto& known = d.split.known.known_nodes();
    for (std::size_t r = 0; r < known.size(); ++r) d.x_init.row(known[r]) = d.x_known_original.row(static_cast<Eigen::Index>(r));
    d.a_hat = sym_normalize(ds.graph);
    return d;
}

RefinedAttributes run_prefill(const PreparedData& data, const RunConfig& cfg) {
    RefinedAttributes r = run_propagation(data.x_init, data.split.known, data.a_hat, cfg.propagation);
    quantize_to_float(r.x_tilde);
    return r;
}

std::pair<Matrix, Matrix> infer_outputs(const Dataset& ds, const PreparedData& data, const Matrix& x_tilde,
                                        const ModelParams& params) {
    Matrix z = encode(x_tilde, data.a_hat, params, false);
    Matrix x_hat = decode(z, params, ds.kind);
    quantize_to_float(z);
    quantize_to_float(x_hat);
    return {std::move(z), std::move(x_hat)};
}

TrainOutput run_training(const Dataset& ds, const PreparedData& data, const Matrix& x_tilde, const RunConfig& cfg) {
    cfg.validate();
    if (x_tilde.rows() != ds.features.rows() || x_tilde.cols() != ds.features.cols()) {
        throw InputError("refined attributes do not match the dataset shape");
    }
    std::vector<NodeId> val_nodes;
    Matrix val_truth;
    if (ds.kind == FeatureKind::Binary) {
        val_nodes = data.split.val;
        val_truth = gather_rows(ds.features, val_nodes);
    }
    TrainOutput out;
    out.result = train(ds.graph, data.a_hat, data.split.known, x_tilde, data.x_known_original, ds.kind, cfg.train,
                       val_nodes, val_truth);
    quantize_to_float(out.result.params);
    std::tie(out.result.z, out.result.x_hat) = infer_outputs(ds, data, x_tilde, out.result.params);
    out.metrics = evaluate_outputs(ds, data.split, out.result.x_hat, out.result.z, cfg);
    return out;
}

json evaluate_outputs(const Dataset& ds, const SplitMask& split, const Matrix& x_hat, const Matrix& z,
                      const RunConfig& cfg) {
    if (x_hat.rows() != ds.features.rows() || x_hat.cols() != ds.features.cols()) {
        throw InputError("reconstruction shape does not match the dataset");
    }
    json m = json::object();
    const auto& test = split.test;
    const Matrix x_hat_test = gather_rows(x_hat, test);
    const Matrix truth_test = gather_rows(ds.features, test);

    if (ds.kind == FeatureKind::Binary) {
        const auto r = ranking_metrics(x_hat_test, truth_test, cfg.ks);
        json rec = {{"evaluated_nodes", r.evaluated_nodes}};
        for (const auto& [k, v] : r.recall_at) rec["recall@" + std::to_string(k)] = v;
        for (const auto& [k, v] : r.ndcg_at) rec["ndcg@" + std::to_string(k)] = v;
        m["reconstruction"] = rec;
    } else {
        const auto rc = rmse_and_corr(x_hat_test, truth_test);
        m["reconstruction"] = {{"evaluated_nodes", test.size()}, {"rmse", rc.rmse}, {"corr", rc.corr}};
    }

    const auto test_labels = compact_labels(gather_labels(ds.labels, test));
    if (cfg.classification) {
        try {
            const auto c = classify_cv(x_hat_test, test_labels, cfg.train.seed, cfg.classifier);
            m["classification"] = {{"mean_accuracy", c.mean_accuracy}, {"fold_accuracy", c.fold_accuracy}};
        } catch (const InputError& e) {
            m["classification"] = {{"error", e.what()}};
        }
    }

    if (cfg.clustering && z.size() > 0) {
        const auto labels = compact_labels(ds.labels);
        const std::size_t k = distinct_count(labels);
        const auto km = kmeans(z, k, cfg.train.seed);
        const auto cm = clustering_metrics(km.assignment, labels);
        m["clustering"] = {{"k", k}, {"acc", cm.acc}, {"nmi", cm.nmi}, {"ari", cm.ari}, {"f1", cm.f1}};
    }

    if (cfg.homogeneity) {
        std::vector<std::size_t> ks;
        for (auto k : kDefaultHomogeneityKs) {
            if (k < test.size()) ks.push_back(k);
        }
        if (!ks.empty()) {
            auto shuffled = test_labels;
            auto rng = make_rng(cfg.train.seed, RngStream::Shuffle);
            shuffle(shuffled.begin(), shuffled.end(), rng);
            m["homogeneity"] = curve_json(knn_homogeneity(x_hat_test, test_labels, ks));
            m["homogeneity_shuffled_labels"] = curve_json(knn_homogeneity(x_hat_test, shuffled, ks));
        }
    }
    return m;
}

// ---------------------------------------------------------------------------

void write_report(const std::filesystem::path& path, const json& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write report: " + path.string());
    out << report.dump(2) << '\n';
    if (!out) throw FormatError("failed writing report: " + path.string());
}

json cmd_prefill(const RunConfig& cfg) {
    const auto start = Clock::now();
    cfg.validate();
    const Dataset ds = load_dataset(cfg);
    const PreparedData data = prepare_data(ds, cfg);
    const RefinedAttributes r = run_prefill(data, cfg);
    std::filesystem::create_directories(cfg.out_dir);
    write_amg1(cfg.out_dir / "x_tilde.bin", r.x_tilde, FeatureKind::Continuous);

    std::size_t nonzero_unknown = 0;
    for (NodeId v : data.split.known.unknown_nodes()) nonzero_unknown += r.x_tilde.row(v).any() ? 1 : 0;
    json report = {{"command", "prefill"},
                   {"config", config_to_json(cfg)},
                   {"dataset", dataset_json(ds)},
                   {"split", split_json(data.split)},
                   {"prefill", {{"unknown_rows", data.split.known.unknown_count()}, {"unknown_rows_nonzero", nonzero_unknown}}},
                   {"files", {{"x_tilde", "x_tilde.bin"}, {"timing", "timing.json"}}}};
    write_report(cfg.out_dir / "report.json", report);
    write_timing(cfg.out_dir, start);
    return report;
}

json cmd_train(const RunConfig& cfg, const TrainOptions& opts) {
    const auto start = Clock::now();
    cfg.validate();
    const Dataset ds = load_dataset(cfg);
    const PreparedData data = prepare_data(ds, cfg);
    Matrix x_tilde;
    if (opts.x_tilde) {
        x_tilde = read_amg1(*opts.x_tilde);
        if (x_tilde.rows() != ds.features.rows() || x_tilde.cols() != ds.features.cols()) {
            throw InputError("--x-tilde matrix is " + std::to_string(x_tilde.rows()) + "x" + std::to_string(x_tilde.cols()) +
                             ", dataset is " + std::to_string(ds.features.rows()) + "x" +
                             std::to_string(ds.features.cols()));
        }
        if (!x_tilde.allFinite()) throw NumericError("--x-tilde matrix has non-finite entries");
    } else {
        x_tilde = run_prefill(data, cfg).x_tilde;
    }

    const TrainOutput out = run_training(ds, data, x_tilde, cfg);
    std::filesystem::create_directories(cfg.out_dir);
    save_checkpoint(cfg.out_dir / "params.ckpt", out.result.params);
    write_history_csv(cfg.out_dir / "history.csv", out.result.history);
    write_amg1(cfg.out_dir / "z.bin", out.result.z, FeatureKind::Continuous);
    write_amg1(cfg.out_dir / "x_hat.bin", out.result.x_hat, FeatureKind::Continuous);

    json report = {{"command", "train"},
                   {"config", config_to_json(cfg)},
                   {"sign_mode", to_string(cfg.train.loss.sign_mode)},
                   {"dataset", dataset_json(ds)},
                   {"split", split_json(data.split)},
                   {"prefill_source", opts.x_tilde ? "file" : "computed"},
                   {"final_loss", out.result.history.empty() ? json(nullptr) : loss_json(out.result.history.back().loss)},
                   {"metrics", out.metrics},
                   {"files",
                    {{"checkpoint", "params.ckpt"},
                     {"history", "history.csv"},
                     {"z", "z.bin"},
                     {"x_hat", "x_hat.bin"},
                     {"timing", "timing.json"}}}};
    write_report(cfg.out_dir / "report.json", report);
    write_timing(cfg.out_dir, start);
    return report;
}

json cmd_eval(const RunConfig& cfg, const EvalOptions& opts) {
    const auto start = Clock::now();
    cfg.validate();
    const Dataset ds = load_dataset(cfg);
    const PreparedData data = prepare_data(ds, cfg);
    Matrix z;
    Matrix x_hat;
    std::string source;
    if (opts.checkpoint) {
        const ModelParams params = load_checkpoint(*opts.checkpoint);
        const Matrix x_tilde = opts.x_tilde ? read_amg1(*opts.x_tilde) : run_prefill(data, cfg).x_tilde;
        std::tie(z, x_hat) = infer_outputs(ds, data, x_tilde, params);
        source = "checkpoint";
    } else if (opts.x_hat) {
        x_hat = read_amg1(*opts.x_hat);
        if (opts.z) z = read_amg1(*opts.z);
        source = "x_hat";
    } else {
        throw ConfigError("eval needs --checkpoint or --x-hat");
    }
    if (z.size() > 0 && z.rows() != ds.features.rows()) throw InputError("embedding rows do not match the dataset");

    json report = {{"command", "eval"},
                   {"config", config_to_json(cfg)},
                   {"sign_mode", to_string(cfg.train.loss.sign_mode)},
                   {"dataset", dataset_json(ds)},
                   {"split", split_json(data.split)},
                   {"source", source},
                   {"metrics", evaluate_outputs(ds, data.split, x_hat, z, cfg)},
                   {"files", {{"timing", "timing.json"}}}};
    std::filesystem::create_directories(cfg.out_dir);
    write_report(cfg.out_dir / "report.json", report);
    write_timing(cfg.out_dir, start);
    return report;
}

json cmd_sweep_missing(const RunConfig& cfg, const std::vector<double>& rates) {
    const auto start = Clock::now();
    if (rates.empty()) throw ConfigError("sweep-missing needs at least one rate");
    json points = json::array();
    for (double rate : rates) {
        RunConfig point = cfg;
        point.missing_rate = rate;
        std::ostringstream name;
        name << "missing_" << rate;
        point.out_dir = cfg.out_dir / name.str();
        const json report = cmd_train(point);
        points.push_back({{"missing_rate", rate},
                          {"known_fraction", point.effective_split().known},
                          {"report", name.str() + "/report.json"},
                          {"metrics", report.at("metrics")}});
    }
    RunConfig echo = cfg;
    echo.missing_rate.reset();
    json report = {{"command", "sweep-missing"},
                   {"config", config_to_json(echo)},
                   {"sign_mode", to_string(cfg.train.loss.sign_mode)},
                   {"points", points},
                   {"files", {{"timing", "timing.json"}}}};
    std::filesystem::create_directories(cfg.out_dir);
    write_report(cfg.out_dir / "report.json", report);
    write_timing(cfg.out_dir, start);
    return report;
}

RunConfig ablation_config(const RunConfig& base, const std::string& variant) {
    RunConfig c = base;
    auto& loss = c.train.loss;
    if (variant == "baseline-gae") {
        c.propagation.mode = PropagationMode::FP;
        c.propagation.iterations = 0;
        loss.lambda1 = loss.lambda2 = 0.0;
    } else if (variant == "fp") {
        c.propagation.mode = PropagationMode::FP;
        loss.lambda1 = loss.lambda2 = 0.0;
    } else if (variant == "taap") {
        c.propagation.mode = PropagationMode::TAAP;
        loss.lambda1 = loss.lambda2 = 0.0;
    } else if (variant == "taap-espc-nhs") {
        c.propagation.mode = PropagationMode::TAAP;
        loss.lambda2 = 0.0;
    } else if (variant == "taap-espc-nlsc") {
        c.propagation.mode = PropagationMode::TAAP;
        loss.lambda1 = 0.0;
    } else if (variant == "full") {
        c.propagation.mode = PropagationMode::TAAP;
    } else {
        throw ConfigError("unknown ablation variant '" + variant + "'");
    }
    c.out_dir = base.out_dir / variant;
    return c;
}

json cmd_ablate(const RunConfig& cfg) {
    const auto start = Clock::now();
    json variants = json::array();
    for (const auto& name : kAblationVariants) {
        const json report = cmd_train(ablation_config(cfg, name));
        variants.push_back({{"variant", name}, {"report", name + "/report.json"}, {"metrics", report.at("metrics")}});
    }
    json report = {{"command", "ablate"},
                   {"config", config_to_json(cfg)},
                   {"sign_mode", to_string(cfg.train.loss.sign_mode)},
                   {"variants", variants},
                   {"files", {{"timing", "timing.json"}}}};
    std::filesystem::create_directories(cfg.out_dir);
    write_report(cfg.out_dir / "report.json", report);
    write_timing(cfg.out_dir, start);
    return report;
}

json cmd_gen_synth(const SbmConfig& sbm, const std::filesystem::path& out_dir) {
    const Dataset ds = gen_sbm(sbm);
    write_binary_dataset(out_dir, ds);
    json report = {{"command", "gen-synth"},
                   {"sbm",
                    {{"blocks", sbm.blocks},
                     {"per_block", sbm.per_block},
                     {"p_in", sbm.p_in},
                     {"p_out", sbm.p_out},
                     {"feature_dim", sbm.feature_dim},
                     {"p_feature_owned", sbm.p_feature_owned},
                     {"p_feature_noise", sbm.p_feature_noise},
                     {"seed", sbm.seed}}},
                   {"dataset", dataset_json(ds)},
                   {"edge_homophily", edge_homophily(ds.graph, ds.labels)}};
    write_report(out_dir / "report.json", report);
    return report;
}

} // namespace attrecon
