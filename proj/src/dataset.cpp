#include "attrecon/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>

#include "attrecon/binary_io.hpp"
#include "attrecon/rng.hpp"

namespace attrecon {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'G', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 1;

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

bool parse_double(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

template <class T>
bool parse_uint(const std::string& s, T& out) {
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::ifstream open_input(const std::filesystem::path& p, bool binary = false) {
    std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
    if (!in) throw FormatError("cannot open " + p.string());
    return in;
}

std::size_t floor_share(double fraction, std::size_t n) {
    // The small slack keeps e.g. (1 - 0.8) * 10 from flooring to 1.
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

} // namespace

std::size_t Dataset::num_classes() const {
    return labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

namespace {

void check_shape(const Dataset& ds) {
    const std::size_t n = ds.graph.num_nodes();
    if (static_cast<std::size_t>(ds.features.rows()) != n) {
        throw InputError("dataset: " + std::to_string(ds.features.rows()) + " feature rows for " + std::to_string(n) + " nodes");
    }
    if (ds.labels.size() != n) {
        throw InputError("dataset: " + std::to_string(ds.labels.size()) + " labels for " + std::to_string(n) + " nodes");
    }
}

void check_binary_value(double v, Eigen::Index row) {
    if (v != 0.0 && v != 1.0) {
        throw InputError("dataset: binary features must be 0 or 1, found " + std::to_string(v) + " at row " +
                         std::to_string(row));
    }
}

} // namespace

void Dataset::validate() const {
    check_shape(*this);
    if (kind == FeatureKind::Binary) {
        for (Eigen::Index i = 0; i < features.size(); ++i) check_binary_value(features.data()[i], i / features.cols());
    }
}

void Dataset::validate_rows(const std::vector<NodeId>& rows) const {
    check_shape(*this);
    for (NodeId r : rows) {
        if (r >= graph.num_nodes()) throw InputError("dataset: row " + std::to_string(r) + " out of range");
        const auto row = features.row(r);
        if (!row.allFinite()) throw InputError("dataset: non-finite feature value in row " + std::to_string(r));
        if (kind == FeatureKind::Binary) {
            for (Eigen::Index j = 0; j < row.size(); ++j) check_binary_value(row(j), r);
        }
    }
}

Dataset load_content_format(const std::filesystem::path& content_path, const std::filesystem::path& cites_path,
                            ContentLoadStats* stats) {
    auto content = open_input(content_path);
    std::unordered_map<std::string, NodeId> ids;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> label_strings;
    std::size_t f = 0;
    std::string line;
    for (std::size_t line_no = 1; std::getline(content, line); ++line_no) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() < 3) throw ParseError("content line needs an id, at least one feature and a label", line_no);
        if (f == 0) f = tok.size() - 2;
        if (tok.size() - 2 != f) {
            throw ParseError("content line has " + std::to_string(tok.size() - 2) + " features, expected " + std::to_string(f),
                             line_no);
        }
        if (!ids.emplace(tok.front(), static_cast<NodeId>(rows.size())).second) {
            throw ParseError("duplicate node id '" + tok.front() + "'", line_no);
        }
        std::vector<double> row(f);
        for (std::size_t j = 0; j < f; ++j) {
            if (!parse_double(tok[j + 1], row[j]) || !std::isfinite(row[j])) {
                throw ParseError("feature value '" + tok[j + 1] + "' is not a finite number", line_no);
            }
        }
        rows.push_back(std::move(row));
        label_strings.push_back(tok.back());
    }
    if (rows.empty()) throw FormatError("content file has no nodes: " + content_path.string());

    Dataset ds;
    ds.name = content_path.stem().string();
    const std::size_t n = rows.size();
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
    bool binary = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            const double v = rows[i][j];
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            binary = binary && (v == 0.0 || v == 1.0);
        }
    }
    ds.kind = binary ? FeatureKind::Binary : FeatureKind::Continuous;

    std::map<std::string, std::uint32_t> label_ids;
    for (const auto& s : label_strings) label_ids.emplace(s, 0);
    std::uint32_t next = 0;
    for (auto& [name, id] : label_ids) {
        id = next++;
        ds.label_names.push_back(name);
    }
    ds.labels.reserve(n);
    for (const auto& s : label_strings) ds.labels.push_back(label_ids.at(s));

    auto cites = open_input(cites_path);
    ContentLoadStats local;
    std::vector<Edge> edges;
    for (std::size_t line_no = 1; std::getline(cites, line); ++line_no) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != 2) throw ParseError("cites line must hold exactly two ids", line_no);
        ++local.cite_lines;
        const auto a = ids.find(tok[0]);
        const auto b = ids.find(tok[1]);
        if (a == ids.end() || b == ids.end()) {
            ++local.skipped_cites;
            continue;
        }
        edges.emplace_back(a->second, b->second);
    }
    ds.graph = build_graph(edges, n);
    if (stats != nullptr) *stats = local;
    ds.validate();
    return ds;
}

void write_amg1(const std::filesystem::path& path, const Matrix& m, FeatureKind kind) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    binary_io::write_u32(out, static_cast<std::uint32_t>(m.rows()));
    binary_io::write_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.put(static_cast<char>(kind));
    for (Eigen::Index i = 0; i < m.size(); ++i) binary_io::write_f32(out, static_cast<float>(m.data()[i]));
    if (!out) throw FormatError("failed writing " + path.string());
}

Matrix read_amg1(const std::filesystem::path& path, FeatureKind* kind) {
    auto in = open_input(path, true);
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() < kHeaderBytes) {
        throw FormatError(path.string() + ": header needs " + std::to_string(kHeaderBytes) + " bytes, file has " +
                          std::to_string(bytes.size()));
    }
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw FormatError(path.string() + ": bad magic (expected AMG1)");
    const std::uint32_t n = binary_io::decode_u32(&bytes[4]);
    const std::uint32_t f = binary_io::decode_u32(&bytes[8]);
    const unsigned char k = bytes[12];
    if (k > 1) throw FormatError(path.string() + ": unknown feature kind byte " + std::to_string(k));
    const std::size_t expected = kHeaderBytes + static_cast<std::size_t>(n) * f * 4;
    if (bytes.size() != expected) {
        throw FormatError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(bytes.size()));
    }
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = binary_io::decode_f32(&bytes[kHeaderBytes + 4 * static_cast<std::size_t>(i)]);
    if (kind != nullptr) *kind = static_cast<FeatureKind>(k);
    return m;
}

void quantize_to_float(Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(m.data()[i]);
}

Dataset load_binary_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    ds.features = read_amg1(dir / "features.bin", &ds.kind);
    const std::size_t n = static_cast<std::size_t>(ds.features.rows());
    if (n == 0) throw FormatError("features.bin declares zero nodes");

    auto edges_in = open_input(dir / "graph.edges");
    std::vector<Edge> edges;
    std::string line;
    for (std::size_t line_no = 1; std::getline(edges_in, line); ++line_no) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        NodeId u = 0;
        NodeId v = 0;
        if (tok.size() != 2 || !parse_uint(tok[0], u) || !parse_uint(tok[1], v)) {
            throw ParseError("graph.edges line must be 'u<TAB>v' with non-negative integers", line_no);
        }
        if (u >= n || v >= n) throw ParseError("edge endpoint out of range for " + std::to_string(n) + " nodes", line_no);
        edges.emplace_back(u, v);
    }
    ds.graph = build_graph(edges, n);

    auto labels_in = open_input(dir / "labels.txt");
    for (std::size_t line_no = 1; std::getline(labels_in, line); ++line_no) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        std::uint32_t label = 0;
        if (tok.size() != 1 || !parse_uint(tok[0], label)) throw ParseError("labels.txt line must hold one integer", line_no);
        ds.labels.push_back(label);
    }
    ds.validate();
    return ds;
}

void write_binary_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    ds.validate();
    std::filesystem::create_directories(dir);
    write_amg1(dir / "features.bin", ds.features, ds.kind);
    {
        std::ofstream out(dir / "graph.edges", std::ios::trunc);
        if (!out) throw FormatError("cannot write " + (dir / "graph.edges").string());
        for (const auto& [u, v] : ds.graph.edge_list()) out << u << '\t' << v << '\n';
    }
    std::ofstream out(dir / "labels.txt", std::ios::trunc);
    if (!out) throw FormatError("cannot write " + (dir / "labels.txt").string());
    for (auto l : ds.labels) out << l << '\n';
}

// ---------------------------------------------------------------------------

SplitFractions SplitFractions::for_missing_rate(double missing_rate) {
    if (!(missing_rate > 0.0 && missing_rate < 1.0)) throw ConfigError("missing rate must lie in (0,1)");
    const SplitFractions base;
    const double rest = base.val + base.test;
    return {1.0 - missing_rate, missing_rate * base.val / rest, missing_rate * base.test / rest};
}

void SplitFractions::validate() const {
    if (known < 0.0 || val < 0.0 || test < 0.0) throw ConfigError("split fractions must be non-negative");
    if (std::abs(known + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

SplitMask make_split_mask(std::size_t n_nodes, const SplitFractions& fractions, std::uint64_t seed,
                          double known_within_train) {
    fractions.validate();
    if (n_nodes == 0) throw InputError("make_split_mask: no nodes");
    if (!(known_within_train > 0.0 && known_within_train <= 1.0)) throw ConfigError("known_within_train must lie in (0,1]");

    std::vector<NodeId> order(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) order[i] = static_cast<NodeId>(i);
    auto rng = make_rng(seed, RngStream::Split);
    shuffle(order.begin(), order.end(), rng);

    const std::size_t n_train = std::min(floor_share(fractions.known, n_nodes), n_nodes);
    const std::size_t n_val = std::min(floor_share(fractions.val, n_nodes), n_nodes - n_train);
    const std::size_t n_known = floor_share(known_within_train, n_train);

    SplitMask s;
    s.seed = seed;
    s.fractions = fractions;
    const auto begin = order.begin();
    std::vector<NodeId> known(begin, begin + static_cast<std::ptrdiff_t>(n_known));
    s.masked_train.assign(begin + static_cast<std::ptrdiff_t>(n_known), begin + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(begin + static_cast<std::ptrdiff_t>(n_train), begin + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(begin + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    std::sort(s.masked_train.begin(), s.masked_train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    s.known = NodeMask::from_known(known, n_nodes);
    return s;
}

// ---------------------------------------------------------------------------

void SbmConfig::validate() const {
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (blocks == 0 || per_block == 0 || feature_dim == 0) throw ConfigError("sbm: counts must be positive");
    if (!prob(p_in) || !prob(p_out) || !prob(p_feature_owned) || !prob(p_feature_noise)) {
        throw ConfigError("sbm: probabilities must lie in [0,1]");
    }
}

Dataset gen_sbm(const SbmConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.blocks * cfg.per_block;
    Dataset ds;
    ds.name = "sbm";
    ds.kind = FeatureKind::Binary;
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<std::uint32_t>(i / cfg.per_block);

    auto edge_rng = make_rng(cfg.seed, RngStream::Synthetic, 0);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = ds.labels[i] == ds.labels[j] ? cfg.p_in : cfg.p_out;
            if (edge_rng.bernoulli(p)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    }
    ds.graph = build_graph(edges, n);

    auto feature_rng = make_rng(cfg.seed, RngStream::Synthetic, 1);
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.feature_dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
            const bool owned = j % cfg.blocks == ds.labels[i];
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                feature_rng.bernoulli(owned ? cfg.p_feature_owned : cfg.p_feature_noise) ? 1.0 : 0.0;
        }
    }
    for (std::size_t b = 0; b < cfg.blocks; ++b) ds.label_names.push_back("block" + std::to_string(b));
    return ds;
}

} // namespace attrecon

namespace attrecon {

double edge_homophily(const Graph& g, const std::vector<std::uint32_t>& labels) {
    if (labels.size() != g.num_nodes()) throw InputError("edge_homophily: one label per node required");
    const auto edges = g.edge_list();
    if (edges.empty()) return 0.0;
    std::size_t same = 0;
    for (const auto& [u, v] : edges) same += labels[u] == labels[v] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(edges.size());
}

} // namespace attrecon
