#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mggan/data.hpp"
#include "mggan/guidance.hpp"
#include "mggan/metrics.hpp"
#include "mggan/nets.hpp"

namespace mggan {

enum class LossKind { NonSaturating, LeastSquares };

struct TrainConfig {
    LossKind loss = LossKind::NonSaturating;
    bool guidance = true;
    Index z_dim = 64;
    Index m_dim = 4;
    Index hidden = 128;
    PriorKind prior = PriorKind::Normal;
    float output_scale = 3.0f;
    bool g_batch_norm = false;
    Activation g_activation = Activation::Relu;
    Index batch = 128;
    std::int64_t total_steps = 25000;
    int d_steps = 1;
    AdamOptions adam{2e-4f, 0.5f, 0.999f, 1e-8f};
    std::int64_t eval_interval = 1000;
    Index eval_samples = 2560;
    std::uint64_t seed = 0;

    PriorSpec prior_spec() const { return {z_dim, prior}; }
    void validate() const;
};

/// z_dim -> hidden -> hidden -> x_dim, tanh scaled by output_scale.
MlpConfig generator_config(const TrainConfig& config, Index x_dim);
/// in -> hidden -> hidden -> 1 logit, leaky ReLU(0.2).
MlpConfig discriminator_config(Index input_width, Index hidden = 128);

struct DiscriminatorLosses {
    double d_x = 0;
    std::optional<double> d_m;
};

struct GeneratorLosses {
    double g_x = 0;
    std::optional<double> g_m;
    double total() const { return g_x + g_m.value_or(0.0); }
};

struct MetricRow {
    std::int64_t step = 0;
    double d_x_loss = 0;
    std::optional<double> d_m_loss;
    double g_x_loss = 0;
    std::optional<double> g_m_loss;
    // Present only when the data is a known mixture.
    std::optional<ModeReport> report;
};

/// Child-stream ids of the run seed. Every consumer owns one stream so that
/// evaluation never perturbs training draws.
namespace streams {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t prior = 2;
inline constexpr std::uint64_t eval = 3;
inline constexpr std::uint64_t pretrain = 4;
inline constexpr std::uint64_t manifold_discriminator = 5;
inline constexpr std::uint64_t inverse_mapper = 6;
inline constexpr std::uint64_t generator_init = 10;
inline constexpr std::uint64_t discriminator_init = 11;
} // namespace streams

struct TrainState {
    TrainConfig config;
    MlpConfig g_config;
    MlpConfig dx_config;
    NetworkParams<float> g;
    NetworkParams<float> dx;
    // Absent when guidance is disabled; then no manifold term enters any loss.
    std::optional<GuidanceNetwork> guidance;
    AdamState<float> g_opt;
    AdamState<float> dx_opt;
    std::optional<AdamState<float>> dm_opt;
    std::int64_t step = 0;
    std::vector<MetricRow> log;
    Rng data_rng;
    Rng prior_rng;
    Rng eval_rng;
};

/// Fresh G and D_x from the seed's init streams. `guidance` must be set iff
/// config.guidance is.
TrainState make_train_state(const TrainConfig& config, Index x_dim, std::optional<GuidanceNetwork> guidance);

/// One update of D_x (and D_m) with G(z) held constant. The two
/// discriminators get separate optimizers and independent losses.
DiscriminatorLosses discriminator_step(TrainState& state, const MatrixF& real, const MatrixF& z);

/// One update of G against the sum of the D_x and D_m terms, each with weight 1.
/// Discriminators are bound as constants.
GeneratorLosses generator_step(TrainState& state, const MatrixF& z);

/// TrainingFailure that also carries the metric log recorded so far.
class TrainRunFailure : public TrainingFailure {
public:
    TrainRunFailure(const TrainingFailure& cause, std::vector<MetricRow> partial)
        : TrainingFailure(cause.what(), cause.step(), cause.history()), partial_log_(std::move(partial)) {}
    const std::vector<MetricRow>& partial_log() const { return partial_log_; }

private:
    std::vector<MetricRow> partial_log_;
};

using RowCallback = std::function<void(const TrainState&, const MetricRow&)>;

/// Runs config.total_steps iterations (d_steps discriminator updates, then one
/// generator update). Every eval_interval steps, and at the last step, a row is
/// logged; with `eval_spec` it carries a ModeReport on eval_samples fresh draws.
void train(TrainState& state, const Sampler& data, const std::optional<MixtureSpec>& eval_spec,
           const RowCallback& on_row = {});

TrainState train(const TrainConfig& config, const Sampler& data, Index x_dim, std::optional<GuidanceNetwork> guidance,
                 const std::optional<MixtureSpec>& eval_spec, const RowCallback& on_row = {});

/// Samples from G in eval mode.
MatrixF generate(const TrainState& state, Index n, Rng& rng);

// -- Inverse mapper, reconstruction and interpolation -----------------------

struct InverseMapperConfig {
    int steps = 2000;
    Index batch = 128;
    Index hidden = 1024;
    AdamOptions adam{1e-3f, 0.9f, 0.999f, 1e-8f};
};

struct InverseMapper {
    MlpConfig config;
    NetworkParams<float> params;
    std::vector<double> loss_history;
};

/// m_dim -> hidden (BN, ReLU) -> hidden (BN, ReLU) -> z_dim.
MlpConfig inverse_mapper_config(Index m_dim, Index z_dim, Index hidden = 1024);

/// Fits R minimizing E_z |R(E(G(z))) - z|^2 on fresh prior draws. G and E are read only.
InverseMapper train_inverse_mapper(const MlpConfig& g_config, const NetworkParams<float>& g,
                                   const GuidanceNetwork& gn, const PriorSpec& prior,
                                   const InverseMapperConfig& config, Rng& rng);

/// G(R(E(x))), eval mode throughout.
MatrixF reconstruct(const MatrixF& x, const MlpConfig& g_config, const NetworkParams<float>& g,
                    const GuidanceNetwork& gn, const InverseMapper& r);

/// Rows: reconstruction of x_a, k interior points G((1-t) z_a + t z_b) at
/// t = i / (k + 1), reconstruction of x_b.
MatrixF latent_interpolate(const MatrixF& x_a, const MatrixF& x_b, int k, const MlpConfig& g_config,
                           const NetworkParams<float>& g, const GuidanceNetwork& gn, const InverseMapper& r);

} // namespace mggan
