#include "mggan/guidance.hpp"

#include <cmath>
#include <numeric>

namespace mggan {

MlpConfig AutoencoderConfig::encoder_config() const
{
    MlpConfig c;
    c.input_width = x_dim;
    c.layers = {{hidden, activation, false}, {m_dim, Activation::Identity, false}};
    return c;
}

MlpConfig AutoencoderConfig::decoder_config() const
{
    MlpConfig c;
    c.input_width = m_dim;
    c.layers = {{hidden, activation, false}, {x_dim, Activation::Identity, false}};
    return c;
}

void AutoencoderConfig::validate() const
{
    if (x_dim < 1 || m_dim < 1 || hidden < 1) throw ArgumentError("AutoencoderConfig: dimensions must be positive");
    if (!(corruption_std >= 0.0)) throw ArgumentError("AutoencoderConfig: corruption std must be non-negative");
    if (steps < 1) throw ArgumentError("AutoencoderConfig: steps must be at least 1");
    if (batch < 1) throw ArgumentError("AutoencoderConfig: batch must be at least 1");
    if (plateau_window < 1) throw ArgumentError("AutoencoderConfig: plateau window must be positive");
}

PretrainResult pretrain_dae(const Sampler& data, const AutoencoderConfig& config, Rng& rng)
{
    config.validate();
    Rng init_rng = rng.split(1);
    Rng data_rng = rng.split(2);
    Rng noise_rng = rng.split(3);

    PretrainResult result;
    Autoencoder& ae = result.autoencoder;
    ae.encoder_config = config.encoder_config();
    ae.decoder_config = config.decoder_config();
    ae.encoder = init_network(ae.encoder_config, init_rng);
    ae.decoder = init_network(ae.decoder_config, init_rng);
    ae.corruption_std = config.corruption_std;

    auto enc_opt = make_adam_state(ae.encoder, config.adam);
    auto dec_opt = make_adam_state(ae.decoder, config.adam);
    auto& history = result.loss_history;
    int diverged_for = 0;
    const auto window = static_cast<std::size_t>(config.plateau_window);

    for (int step = 0; step < config.steps; ++step) {
        const MatrixF clean = data(config.batch, data_rng);
        if (clean.cols() != config.x_dim)
            throw DimensionError("pretrain_dae: sampler returned " + shape_string(clean) + " for x_dim " +
                                 std::to_string(config.x_dim));
        MatrixF noisy = clean;
        if (config.corruption_std > 0.0)
            for (Index i = 0; i < noisy.size(); ++i)
                noisy.data()[i] += static_cast<float>(config.corruption_std * noise_rng.normal());

        double loss_value = 0.0;
        try {
            Tape<float> tape;
            const auto enc = bind(tape, ae.encoder);
            const auto dec = bind(tape, ae.decoder);
            const Var<float> x = tape.constant(noisy);
            const Var<float> target = tape.constant(clean);
            const Var<float> recon = forward(tape, ae.decoder_config, ae.decoder, dec,
                                             forward(tape, ae.encoder_config, ae.encoder, enc, x, Mode::Train),
                                             Mode::Train);
            const Var<float> loss =
                config.loss == ReconstructionLoss::L2 ? mse(recon, target) : mean(abs(sub(recon, target)));
            tape.backward(loss);
            loss_value = loss.value()(0, 0);
            adam_step(ae.encoder, gradients(tape, enc), enc_opt);
            adam_step(ae.decoder, gradients(tape, dec), dec_opt);
        } catch (const NumericError& e) {
            throw TrainingFailure(std::string("pretrain_dae diverged: ") + e.what(), step, history);
        }
        history.push_back(loss_value);

        if (loss_value > 10.0 * history.front()) {
            if (++diverged_for >= 100)
                throw TrainingFailure("pretrain_dae diverged: loss above 10x initial for 100 steps", step, history);
        } else {
            diverged_for = 0;
        }

        if (history.size() >= 2 * window && history.size() % window == 0) {
            const auto end = history.end();
            const double recent = std::accumulate(end - static_cast<std::ptrdiff_t>(window), end, 0.0);
            const double before = std::accumulate(end - static_cast<std::ptrdiff_t>(2 * window),
                                                  end - static_cast<std::ptrdiff_t>(window), 0.0);
            if (before - recent < config.plateau_tolerance * before) break;
        }
    }
    return result;
}

MlpConfig manifold_discriminator_config(Index m_dim, Index hidden)
{
    MlpConfig c;
    c.input_width = m_dim;
    c.layers = {{hidden, Activation::LeakyRelu, false},
                {hidden, Activation::LeakyRelu, false},
                {1, Activation::Identity, false}};
    return c;
}

GuidanceNetwork::GuidanceNetwork(MlpConfig encoder_config, NetworkParams<float> encoder,
                                 MlpConfig discriminator_config, NetworkParams<float> discriminator)
    : encoder_config_(std::move(encoder_config)),
      encoder_(std::move(encoder)),
      encoder_hash_(hash(encoder_)),
      discriminator_config_(std::move(discriminator_config)),
      discriminator_(std::move(discriminator))
{
    encoder_config_.validate();
    discriminator_config_.validate();
    if (discriminator_config_.input_width != m_dim())
        throw DimensionError("GuidanceNetwork: D_m input width " + std::to_string(discriminator_config_.input_width) +
                             " differs from encoder output width " + std::to_string(m_dim()));
}

void GuidanceNetwork::verify_integrity(std::int64_t step) const
{
    if (hash(encoder_) != encoder_hash_) throw TrainingFailure("frozen encoder was modified", step);
}

GuidanceNetwork freeze(const Autoencoder& ae, Rng& rng, Index dm_hidden)
{
    const MlpConfig dm_config = manifold_discriminator_config(ae.m_dim(), dm_hidden);
    return GuidanceNetwork(ae.encoder_config, ae.encoder, dm_config, init_network(dm_config, rng));
}

Var<float> encode(Tape<float>& tape, const GuidanceNetwork& gn, const Var<float>& batch)
{
    if (batch.cols() != gn.x_dim())
        throw DimensionError("encode: batch " + shape_string(batch.value()) + " does not match encoder input width " +
                             std::to_string(gn.x_dim()));
    const auto bound = bind(tape, gn.encoder(), false);
    return forward(tape, gn.encoder_config(), gn.encoder(), bound, batch, Mode::Eval);
}

MatrixF encode(const GuidanceNetwork& gn, const MatrixF& batch)
{
    Tape<float> tape;
    return encode(tape, gn, tape.constant(batch)).value();
}

} // namespace mggan
