#pragma once

#include <cstdint>
#include <vector>

#include "mggan/data.hpp"
#include "mggan/nets.hpp"

namespace mggan {

enum class ReconstructionLoss { L2, L1 };

struct AutoencoderConfig {
    Index x_dim = 2;
    Index m_dim = 4;
    Index hidden = 128;
    Activation activation = Activation::LeakyRelu;
    double corruption_std = 0.1;
    ReconstructionLoss loss = ReconstructionLoss::L2;
    int steps = 10000;
    Index batch = 128;
    AdamOptions adam{1e-3f, 0.9f, 0.999f, 1e-8f};
    // Early stop once the mean loss over the last window improves on the
    // previous window by less than this fraction.
    int plateau_window = 1000;
    double plateau_tolerance = 0.01;

    MlpConfig encoder_config() const;
    MlpConfig decoder_config() const;
    void validate() const;
};

struct Autoencoder {
    MlpConfig encoder_config;
    MlpConfig decoder_config;
    NetworkParams<float> encoder;
    NetworkParams<float> decoder;
    double corruption_std = 0.0;

    Index m_dim() const { return encoder_config.output_width(); }
    MatrixF encode(const MatrixF& x) const { return evaluate(encoder_config, encoder, x); }
    MatrixF reconstruct(const MatrixF& x) const { return evaluate(decoder_config, decoder, encode(x)); }
};

struct PretrainResult {
    Autoencoder autoencoder;
    std::vector<double> loss_history;
};

/// Denoising autoencoder: minimizes the reconstruction loss between clean x and
/// decoder(encoder(x + N(0, sigma_c^2))). Throws TrainingFailure (history
/// attached) when the loss stays above 10x its initial value for 100 steps.
PretrainResult pretrain_dae(const Sampler& data, const AutoencoderConfig& config, Rng& rng);

/// m_dim -> hidden -> hidden -> 1 logit, leaky ReLU(0.2): the same shape as D_x.
MlpConfig manifold_discriminator_config(Index m_dim, Index hidden = 128);

/// Frozen encoder E plus the trainable manifold discriminator D_m.
/// The encoder is reachable only through const accessors and is never bound
/// to a tape as a variable.
class GuidanceNetwork {
public:
    GuidanceNetwork(MlpConfig encoder_config, NetworkParams<float> encoder, MlpConfig discriminator_config,
                    NetworkParams<float> discriminator);

    const MlpConfig& encoder_config() const { return encoder_config_; }
    const NetworkParams<float>& encoder() const { return encoder_; }
    std::uint64_t encoder_hash() const { return encoder_hash_; }
    Index x_dim() const { return encoder_config_.input_width; }
    Index m_dim() const { return encoder_config_.output_width(); }

    /// Throws TrainingFailure if the encoder no longer matches its freeze-time hash.
    void verify_integrity(std::int64_t step = -1) const;

    const MlpConfig& discriminator_config() const { return discriminator_config_; }
    const NetworkParams<float>& discriminator() const { return discriminator_; }
    NetworkParams<float>& discriminator() { return discriminator_; }

private:
    MlpConfig encoder_config_;
    NetworkParams<float> encoder_;
    std::uint64_t encoder_hash_;
    MlpConfig discriminator_config_;
    NetworkParams<float> discriminator_;
};

/// Keeps the encoder, drops the decoder, and draws a fresh D_m from `rng`.
GuidanceNetwork freeze(const Autoencoder& ae, Rng& rng, Index dm_hidden = 128);

/// E(batch) on the tape: gradients reach `batch` but never the encoder.
Var<float> encode(Tape<float>& tape, const GuidanceNetwork& gn, const Var<float>& batch);
MatrixF encode(const GuidanceNetwork& gn, const MatrixF& batch);

} // namespace mggan
