#include "mggan/training.hpp"

#include <cmath>

namespace mggan {

void TrainConfig::validate() const
{
    if (z_dim < 1 || m_dim < 1 || hidden < 1) throw ArgumentError("TrainConfig: dimensions must be positive");
    if (batch < 2) throw ArgumentError("TrainConfig: batch must be at least 2");
    if (total_steps < 0) throw ArgumentError("TrainConfig: total steps must be non-negative");
    if (d_steps < 1) throw ArgumentError("TrainConfig: d_steps must be at least 1");
    if (eval_interval < 1) throw ArgumentError("TrainConfig: eval interval must be positive");
    if (total_steps > 0 && eval_interval > total_steps)
        throw ArgumentError("TrainConfig: eval interval exceeds total steps");
    if (eval_samples < 1) throw ArgumentError("TrainConfig: eval samples must be positive");
    if (!(output_scale > 0.0f)) throw ArgumentError("TrainConfig: output scale must be positive");
    if (!(adam.lr > 0.0f)) throw ArgumentError("TrainConfig: learning rate must be positive");
}

MlpConfig generator_config(const TrainConfig& config, Index x_dim)
{
    MlpConfig c;
    c.input_width = config.z_dim;
    c.layers = {{config.hidden, config.g_activation, config.g_batch_norm},
                {config.hidden, config.g_activation, config.g_batch_norm},
                {x_dim, Activation::Tanh, false}};
    c.output_scale = config.output_scale;
    return c;
}

MlpConfig discriminator_config(Index input_width, Index hidden)
{
    MlpConfig c;
    c.input_width = input_width;
    c.layers = {{hidden, Activation::LeakyRelu, false},
                {hidden, Activation::LeakyRelu, false},
                {1, Activation::Identity, false}};
    return c;
}

TrainState make_train_state(const TrainConfig& config, Index x_dim, std::optional<GuidanceNetwork> guidance)
{
    config.validate();
    if (config.guidance != guidance.has_value())
        throw ArgumentError(config.guidance ? "make_train_state: guidance enabled but no guidance network given"
                                            : "make_train_state: guidance disabled but a guidance network was given");
    if (guidance && guidance->x_dim() != x_dim)
        throw DimensionError("make_train_state: encoder input width " + std::to_string(guidance->x_dim()) +
                             " differs from data width " + std::to_string(x_dim));

    const Rng root(config.seed);
    Rng g_init = root.split(streams::generator_init);
    Rng d_init = root.split(streams::discriminator_init);
    TrainState s{.config = config,
                 .g_config = generator_config(config, x_dim),
                 .dx_config = discriminator_config(x_dim, config.hidden),
                 .g = {},
                 .dx = {},
                 .guidance = std::move(guidance),
                 .g_opt = {},
                 .dx_opt = {},
                 .dm_opt = {},
                 .step = 0,
                 .log = {},
                 .data_rng = root.split(streams::data),
                 .prior_rng = root.split(streams::prior),
                 .eval_rng = root.split(streams::eval)};
    s.g = init_network(s.g_config, g_init);
    s.dx = init_network(s.dx_config, d_init);
    s.g_opt = make_adam_state(s.g, config.adam);
    s.dx_opt = make_adam_state(s.dx, config.adam);
    if (s.guidance) s.dm_opt = make_adam_state(s.guidance->discriminator(), config.adam);
    return s;
}

namespace {

// Loss of a discriminator output against label `target` (1 real, 0 fake).
Var<float> adversarial_loss(const Var<float>& out, float target, LossKind kind)
{
    if (kind == LossKind::NonSaturating) return bce_with_logits(out, target);
    // LSGAN coding a = 0, b = c = 1 on raw outputs.
    return scale(mean(square(add_scalar(out, -target))), 0.5f);
}

double checked(const Var<float>& loss, const char* name, std::int64_t step)
{
    const double v = loss.value()(0, 0);
    if (!std::isfinite(v)) throw TrainingFailure(std::string(name) + " is not finite", step);
    return v;
}

} // namespace

DiscriminatorLosses discriminator_step(TrainState& state, const MatrixF& real, const MatrixF& z)
{
    const LossKind kind = state.config.loss;
    if (state.guidance) state.guidance->verify_integrity(state.step);
    DiscriminatorLosses out;
    try {
        Tape<float> tape;
        const auto g_bound = bind(tape, state.g, false);
        const NetworkParams<float>& g_const = state.g;
        const Var<float> fake = forward(tape, state.g_config, g_const, g_bound, tape.constant(z), Mode::Train);
        const Var<float> x = tape.constant(real);

        const auto dx_bound = bind(tape, state.dx);
        const Var<float> d_x_loss =
            add(adversarial_loss(forward(tape, state.dx_config, state.dx, dx_bound, x, Mode::Train), 1.0f, kind),
                adversarial_loss(forward(tape, state.dx_config, state.dx, dx_bound, fake, Mode::Train), 0.0f, kind));
        out.d_x = checked(d_x_loss, "d_x_loss", state.step);
        Var<float> total = d_x_loss;

        std::optional<Bound<float>> dm_bound;
        if (state.guidance) {
            GuidanceNetwork& gn = *state.guidance;
            dm_bound = bind(tape, gn.discriminator());
            const auto& cfg = gn.discriminator_config();
            const Var<float> m_real = encode(tape, gn, x);
            const Var<float> m_fake = encode(tape, gn, fake);
            const Var<float> d_m_loss = add(
                adversarial_loss(forward(tape, cfg, gn.discriminator(), *dm_bound, m_real, Mode::Train), 1.0f, kind),
                adversarial_loss(forward(tape, cfg, gn.discriminator(), *dm_bound, m_fake, Mode::Train), 0.0f, kind));
            out.d_m = checked(d_m_loss, "d_m_loss", state.step);
            // Disjoint parameter sets: the sum backpropagates each loss to its own discriminator only.
            total = add(total, d_m_loss);
        }

        tape.backward(total);
        adam_step(state.dx, gradients(tape, dx_bound), state.dx_opt);
        if (state.guidance) adam_step(state.guidance->discriminator(), gradients(tape, *dm_bound), *state.dm_opt);
    } catch (const NumericError& e) {
        throw TrainingFailure(std::string("discriminator step failed: ") + e.what(), state.step);
    }
    return out;
}

GeneratorLosses generator_step(TrainState& state, const MatrixF& z)
{
    const LossKind kind = state.config.loss;
    if (state.guidance) state.guidance->verify_integrity(state.step);
    GeneratorLosses out;
    try {
        Tape<float> tape;
        const auto g_bound = bind(tape, state.g);
        const Var<float> fake = forward(tape, state.g_config, state.g, g_bound, tape.constant(z), Mode::Train);

        const NetworkParams<float>& dx_const = state.dx;
        const auto dx_bound = bind(tape, dx_const, false);
        const Var<float> g_x_loss =
            adversarial_loss(forward(tape, state.dx_config, dx_const, dx_bound, fake, Mode::Train), 1.0f, kind);
        out.g_x = checked(g_x_loss, "g_x_loss", state.step);
        Var<float> total = g_x_loss;

        if (state.guidance) {
            const GuidanceNetwork& gn = *state.guidance;
            const auto dm_bound = bind(tape, gn.discriminator(), false);
            const Var<float> m_fake = encode(tape, gn, fake);
            const Var<float> g_m_loss = adversarial_loss(
                forward(tape, gn.discriminator_config(), gn.discriminator(), dm_bound, m_fake, Mode::Train), 1.0f,
                kind);
            out.g_m = checked(g_m_loss, "g_m_loss", state.step);
            total = add(total, g_m_loss);
        }

        tape.backward(total);
        adam_step(state.g, gradients(tape, g_bound), state.g_opt);
    } catch (const NumericError& e) {
        throw TrainingFailure(std::string("generator step failed: ") + e.what(), state.step);
    }
    return out;
}

MatrixF generate(const TrainState& state, Index n, Rng& rng)
{
    return evaluate(state.g_config, state.g, sample_prior(state.config.prior_spec(), n, rng));
}

void train(TrainState& state, const Sampler& data, const std::optional<MixtureSpec>& eval_spec,
           const RowCallback& on_row)
{
    const TrainConfig& cfg = state.config;
    const PriorSpec prior = cfg.prior_spec();
    DiscriminatorLosses d_losses;
    GeneratorLosses g_losses;
    try {
        while (state.step < cfg.total_steps) {
            for (int k = 0; k < cfg.d_steps; ++k) {
                const MatrixF real = data(cfg.batch, state.data_rng);
                const MatrixF z = sample_prior(prior, cfg.batch, state.prior_rng);
                d_losses = discriminator_step(state, real, z);
            }
            g_losses = generator_step(state, sample_prior(prior, cfg.batch, state.prior_rng));
            ++state.step;

            if (state.step % cfg.eval_interval == 0 || state.step == cfg.total_steps) {
                if (state.guidance) state.guidance->verify_integrity(state.step);
                MetricRow row{.step = state.step,
                              .d_x_loss = d_losses.d_x,
                              .d_m_loss = d_losses.d_m,
                              .g_x_loss = g_losses.g_x,
                              .g_m_loss = g_losses.g_m,
                              .report = {}};
                if (eval_spec) row.report = mode_coverage(generate(state, cfg.eval_samples, state.eval_rng), *eval_spec);
                state.log.push_back(row);
                if (on_row) on_row(state, state.log.back());
            }
        }
    } catch (const TrainingFailure& e) {
        throw TrainRunFailure(e, state.log);
    }
}

TrainState train(const TrainConfig& config, const Sampler& data, Index x_dim, std::optional<GuidanceNetwork> guidance,
                 const std::optional<MixtureSpec>& eval_spec, const RowCallback& on_row)
{
    TrainState state = make_train_state(config, x_dim, std::move(guidance));
    train(state, data, eval_spec, on_row);
    return state;
}

// -- Inverse mapper ---------------------------------------------------------

MlpConfig inverse_mapper_config(Index m_dim, Index z_dim, Index hidden)
{
    MlpConfig c;
    c.input_width = m_dim;
    c.layers = {{hidden, Activation::Relu, true}, {hidden, Activation::Relu, true}, {z_dim, Activation::Identity, false}};
    return c;
}

InverseMapper train_inverse_mapper(const MlpConfig& g_config, const NetworkParams<float>& g,
                                   const GuidanceNetwork& gn, const PriorSpec& prior,
                                   const InverseMapperConfig& config, Rng& rng)
{
    if (config.steps < 1 || config.batch < 2) throw ArgumentError("train_inverse_mapper: need steps >= 1, batch >= 2");
    if (g_config.input_width != prior.z_dim || g_config.output_width() != gn.x_dim())
        throw DimensionError("train_inverse_mapper: generator " + std::to_string(g_config.input_width) + " -> " +
                             std::to_string(g_config.output_width()) + " does not fit prior/encoder");
    Rng init_rng = rng.split(1);
    Rng z_rng = rng.split(2);
    InverseMapper r;
    r.config = inverse_mapper_config(gn.m_dim(), prior.z_dim, config.hidden);
    r.params = init_network(r.config, init_rng);
    auto opt = make_adam_state(r.params, config.adam);
    int diverged_for = 0;

    for (int step = 0; step < config.steps; ++step) {
        const MatrixF z = sample_prior(prior, config.batch, z_rng);
        const MatrixF codes = encode(gn, evaluate(g_config, g, z));
        double loss_value = 0.0;
        try {
            Tape<float> tape;
            const auto bound = bind(tape, r.params);
            const Var<float> z_hat = forward(tape, r.config, r.params, bound, tape.constant(codes), Mode::Train);
            const Var<float> loss = mse(z_hat, tape.constant(z));
            tape.backward(loss);
            loss_value = loss.value()(0, 0);
            adam_step(r.params, gradients(tape, bound), opt);
        } catch (const NumericError& e) {
            throw TrainingFailure(std::string("inverse mapper diverged: ") + e.what(), step, r.loss_history);
        }
        r.loss_history.push_back(loss_value);
        if (loss_value > 10.0 * r.loss_history.front()) {
            if (++diverged_for >= 100)
                throw TrainingFailure("inverse mapper diverged: loss above 10x initial for 100 steps", step,
                                      r.loss_history);
        } else {
            diverged_for = 0;
        }
    }
    return r;
}

MatrixF reconstruct(const MatrixF& x, const MlpConfig& g_config, const NetworkParams<float>& g,
                    const GuidanceNetwork& gn, const InverseMapper& r)
{
    if (g_config.output_width() != x.cols())
        throw DimensionError("reconstruct: generator output width " + std::to_string(g_config.output_width()) +
                             " differs from data " + shape_string(x));
    if (r.config.output_width() != g_config.input_width)
        throw DimensionError("reconstruct: inverse mapper output width does not match generator input");
    return evaluate(g_config, g, evaluate(r.config, r.params, encode(gn, x)));
}

MatrixF latent_interpolate(const MatrixF& x_a, const MatrixF& x_b, int k, const MlpConfig& g_config,
                           const NetworkParams<float>& g, const GuidanceNetwork& gn, const InverseMapper& r)
{
    if (k < 1) throw ArgumentError("latent_interpolate: k must be at least 1");
    if (x_a.rows() != 1 || x_b.rows() != 1 || x_a.cols() != x_b.cols())
        throw DimensionError("latent_interpolate: endpoints must be single rows of equal width, got " +
                             shape_string(x_a) + " and " + shape_string(x_b));
    MatrixF ends(2, x_a.cols());
    ends.row(0) = x_a.row(0);
    ends.row(1) = x_b.row(0);
    const MatrixF z = evaluate(r.config, r.params, encode(gn, ends));
    MatrixF path(k + 2, z.cols());
    for (int i = 0; i < k + 2; ++i) {
        const float t = static_cast<float>(i) / static_cast<float>(k + 1);
        path.row(i) = (1.0f - t) * z.row(0) + t * z.row(1);
    }
    return evaluate(g_config, g, path);
}

} // namespace mggan
