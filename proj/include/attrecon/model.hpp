#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "attrecon/common.hpp"
#include "attrecon/graph.hpp"
#include "attrecon/rng.hpp"

namespace attrecon {

enum class Architecture {
    Gcn2Mlp2,  // Z = σ(Â · ReLU(Â X φ0) · φ1)
    Mlp1Mlp1,  // Z = σ(ReLU(X φ0) · φ1)
};

enum class FeatureKind : std::uint8_t { Binary = 0, Continuous = 1 };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);
std::string to_string(FeatureKind k);

struct ModelDims {
    std::size_t features = 0;       // F
    std::size_t hidden = 256;       // H
    std::size_t latent = 256;       // D
    std::size_t decoder_hidden = 256;  // H'
};

struct ModelParams {
    Matrix phi0;    // F x H
    Matrix phi1;    // H x D
    Matrix theta0;  // D x H'
    Matrix theta1;  // H' x F
    double dropout_rate = 0.0;
    Architecture arch = Architecture::Mlp1Mlp1;

    ModelDims dims() const;
    bool all_finite() const;
};

/// Glorot-uniform weights drawn from a counter-based stream keyed by seed.
ModelParams init_params(std::uint64_t seed, const ModelDims& dims, Architecture arch, double dropout_rate);

/// Per-entry multiplier on the encoder hidden activation: 0 or 1/(1-p).
Matrix draw_dropout_mask(std::size_t rows, std::size_t cols, double rate, CounterRng& rng);

struct EncoderTrace {
    const Matrix* input = nullptr;  // Â X̃ for gcn2, X̃ otherwise; not owned
    Matrix pre_hidden;  // input · φ0
    Matrix hidden;      // ReLU(pre_hidden) after dropout
    Matrix z;
};

struct DecoderTrace {
    Matrix pre_hidden;  // Z θ0
    Matrix hidden;      // ReLU(pre_hidden)
    Matrix output;      // X̂
};

/// The encoder input for a given architecture: Â X̃ (gcn2) or X̃ (mlp1). Constant over training.
Matrix encoder_input(const Matrix& x_tilde, const NormalizedAdjacency& a_hat, Architecture arch);

/// Encoder from a precomputed encoder_input(). dropout_mask may be null (eval mode).
void encode_traced(const Matrix& input, const NormalizedAdjacency& a_hat, const ModelParams& p,
                   const Matrix* dropout_mask, EncoderTrace& trace);

/// Z. In train_mode, dropout on the hidden activation uses rng; otherwise deterministic.
Matrix encode(const Matrix& x_tilde, const NormalizedAdjacency& a_hat, const ModelParams& p, bool train_mode,
              CounterRng* rng = nullptr);

void decode_traced(const Matrix& z, const ModelParams& p, FeatureKind kind, DecoderTrace& trace);

/// X̂ = σ(ReLU(Z θ0) θ1) for binary features; identity output head for continuous.
Matrix decode(const Matrix& z, const ModelParams& p, FeatureKind kind);

/// Checkpoint file: one line of JSON (shapes, arch, dropout, payload size) then
/// the four weight matrices as little-endian float32, row-major, in the order
/// phi0, phi1, theta0, theta1.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& p);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Rounds every weight to the nearest float32, as the checkpoint stores it.
void quantize_to_float(ModelParams& p);

} // namespace attrecon
