#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attrecon/common.hpp"
#include "attrecon/graph.hpp"
#include "attrecon/model.hpp"

namespace attrecon {

struct Dataset {
    std::string name;
    Graph graph;
    Matrix features;  // N x F
    FeatureKind kind = FeatureKind::Binary;
    std::vector<std::uint32_t> labels;  // one class id per node
    std::vector<std::string> label_names;  // optional: class id -> original label string

    std::size_t num_classes() const;

    /// Throws InputError when row counts disagree or binary features are not {0,1}.
    void validate() const;
    /// Row counts as validate(), but feature values are checked only on `rows`
    /// (which must also be finite): the rows a computation is allowed to read.
    void validate_rows(const std::vector<NodeId>& rows) const;
};

struct ContentLoadStats {
    std::size_t cite_lines = 0;
    std::size_t skipped_cites = 0;  // lines referencing an id absent from the content file
};

/// Classic citation-network text format. Content lines are
/// "<id> <f_1> ... <f_F> <label>" (whitespace separated); cites lines are
/// "<id> <id>". Node ids are remapped to 0..N-1 in first-appearance order;
/// class ids follow the sorted label strings. Throws ParseError with the line
/// number on a malformed line.
Dataset load_content_format(const std::filesystem::path& content_path, const std::filesystem::path& cites_path,
                            ContentLoadStats* stats = nullptr);

/// Native format: graph.edges ("u\tv" per line, 0-indexed), features.bin
/// ("AMG1", u32 N, u32 F, u8 kind, N*F little-endian float32 row-major) and
/// labels.txt (one integer per line).
Dataset load_binary_dataset(const std::filesystem::path& dir);
void write_binary_dataset(const std::filesystem::path& dir, const Dataset& ds);

/// Raw features.bin reader/writer, also used for exported matrices (X̃, X̂, Z).
/// The writer rounds values to float32; no value validation is applied.
void write_amg1(const std::filesystem::path& path, const Matrix& m, FeatureKind kind);
Matrix read_amg1(const std::filesystem::path& path, FeatureKind* kind = nullptr);

/// Rounds every entry to the nearest float32, matching what write_amg1 stores.
void quantize_to_float(Matrix& m);

// ---------------------------------------------------------------------------
// Splits

struct SplitFractions {
    double known = 0.4;
    double val = 0.1;
    double test = 0.5;

    /// known = 1 - missing_rate; val and test share the rest in the default 1:5 ratio.
    static SplitFractions for_missing_rate(double missing_rate);

    void validate() const;
};

struct SplitMask {
    NodeMask known;
    std::vector<NodeId> val;           // sorted
    std::vector<NodeId> test;          // sorted
    std::vector<NodeId> masked_train;  // train-partition nodes left attribute-missing (known_within_train < 1)
    std::uint64_t seed = 0;
    SplitFractions fractions;
};

/// Seeded uniform shuffle, then contiguous slices: the first floor(known*N)
/// nodes are the train partition, the next floor(val*N) validation, the rest
/// test. known_within_train (default 1) keeps only floor(that share) of the
/// train partition as known nodes; the remainder is attribute-masked too.
SplitMask make_split_mask(std::size_t n_nodes, const SplitFractions& fractions, std::uint64_t seed,
                          double known_within_train = 1.0);

// ---------------------------------------------------------------------------
// Synthetic data

struct SbmConfig {
    std::size_t blocks = 2;
    std::size_t per_block = 10;
    double p_in = 0.5;
    double p_out = 0.05;
    std::size_t feature_dim = 16;
    double p_feature_owned = 0.5;  // chance a feature owned by the node's block is on
    double p_feature_noise = 0.05;  // chance any other feature is on
    std::uint64_t seed = 72;

    void validate() const;
};

/// Stochastic block model. Feature j is owned by block j % blocks; labels are
/// block ids; nodes are numbered block by block.
Dataset gen_sbm(const SbmConfig& cfg);

/// Fraction of undirected edges joining equal labels (0 for an edgeless graph).
double edge_homophily(const Graph& g, const std::vector<std::uint32_t>& labels);

} // namespace attrecon
