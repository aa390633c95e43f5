#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mggan/optim.hpp"
#include "mggan/rng.hpp"
#include "mggan/tensor.hpp"

namespace mggan {

enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid };
enum class Mode { Train, Eval };

struct LayerConfig {
    Index width = 0;
    Activation activation = Activation::Identity;
    bool batch_norm = false;
};

/// Fully connected stack: input_width -> layers[0].width -> ... -> layers.back().width.
/// Batch norm, when enabled on a layer, sits between its affine map and activation.
struct MlpConfig {
    Index input_width = 0;
    std::vector<LayerConfig> layers;
    float leaky_slope = 0.2f;
    // Applied after the output activation (the generator uses tanh * scale).
    float output_scale = 1.0f;
    float bn_momentum = 0.9f;
    float bn_eps = 1e-5f;

    Index output_width() const { return layers.empty() ? 0 : layers.back().width; }
    bool has_batch_norm() const;
    void validate() const;
};

/// Ordered name -> tensor map. Insertion order is the iteration order.
/// Batch-norm running statistics live here too as non-trainable buffers.
template <typename Scalar>
class NetworkParams {
public:
    struct Entry {
        std::string name;
        Matrix<Scalar> value;
        bool trainable = true;
    };

    void add(std::string name, Matrix<Scalar> value, bool trainable = true)
    {
        if (find(name) != nullptr) throw ArgumentError("duplicate parameter name: " + name);
        entries_.push_back(Entry{std::move(name), std::move(value), trainable});
    }

    const Entry* find(std::string_view name) const
    {
        for (const auto& e : entries_)
            if (e.name == name) return &e;
        return nullptr;
    }
    Entry* find(std::string_view name)
    {
        for (auto& e : entries_)
            if (e.name == name) return &e;
        return nullptr;
    }

    const Matrix<Scalar>& at(std::string_view name) const
    {
        const Entry* e = find(name);
        if (e == nullptr) throw ArgumentError("no parameter named " + std::string(name));
        return e->value;
    }
    Matrix<Scalar>& at(std::string_view name)
    {
        Entry* e = find(name);
        if (e == nullptr) throw ArgumentError("no parameter named " + std::string(name));
        return e->value;
    }

    std::size_t size() const { return entries_.size(); }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }
    Entry& operator[](std::size_t i) { return entries_[i]; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

    std::vector<Matrix<Scalar>*> trainable()
    {
        std::vector<Matrix<Scalar>*> out;
        for (auto& e : entries_)
            if (e.trainable) out.push_back(&e.value);
        return out;
    }
    std::vector<const Matrix<Scalar>*> trainable() const
    {
        std::vector<const Matrix<Scalar>*> out;
        for (const auto& e : entries_)
            if (e.trainable) out.push_back(&e.value);
        return out;
    }

    template <typename Other>
    NetworkParams<Other> cast() const
    {
        NetworkParams<Other> out;
        for (const auto& e : entries_) out.add(e.name, e.value.template cast<Other>(), e.trainable);
        return out;
    }

private:
    std::vector<Entry> entries_;
};

/// Weights ~ Normal(0, 0.02^2), biases 0, gamma 1, beta 0, running mean 0, running var 1.
NetworkParams<float> init_network(const MlpConfig& config, Rng& rng);

/// Tape handles for the trainable entries of a NetworkParams, aligned by index.
/// Buffers get invalid handles.
template <typename Scalar>
struct Bound {
    std::vector<Var<Scalar>> vars;
};

/// Place parameters on the tape. `trainable = false` binds them as constants,
/// so backward never produces gradients for them.
template <typename Scalar>
Bound<Scalar> bind(Tape<Scalar>& tape, const NetworkParams<Scalar>& params, bool trainable = true)
{
    Bound<Scalar> b;
    b.vars.reserve(params.size());
    for (const auto& e : params) {
        if (!e.trainable)
            b.vars.emplace_back();
        else if (trainable)
            b.vars.push_back(tape.variable(e.value));
        else
            b.vars.push_back(tape.constant(e.value));
    }
    return b;
}

/// Gradients for the trainable entries in order; zeros where the loss did not reach.
template <typename Scalar>
std::vector<Matrix<Scalar>> gradients(const Tape<Scalar>& tape, const Bound<Scalar>& bound)
{
    std::vector<Matrix<Scalar>> out;
    for (const auto& v : bound.vars)
        if (v.valid()) out.push_back(tape.grad(v));
    return out;
}

namespace detail {

template <typename Scalar>
Var<Scalar> activate(const Var<Scalar>& h, Activation a, Scalar slope)
{
    switch (a) {
    case Activation::Identity: return h;
    case Activation::Relu: return relu(h);
    case Activation::LeakyRelu: return leaky_relu(h, slope);
    case Activation::Tanh: return tanh(h);
    case Activation::Sigmoid: return sigmoid(h);
    }
    return h;
}

template <typename Scalar>
std::size_t index_of(const NetworkParams<Scalar>& params, const std::string& name)
{
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return i;
    throw ArgumentError("network is missing parameter " + name);
}

template <typename Scalar>
Var<Scalar> forward_impl(Tape<Scalar>& tape, const MlpConfig& config, NetworkParams<Scalar>* mutable_params,
                         const NetworkParams<Scalar>& params, const Bound<Scalar>& bound, const Var<Scalar>& x,
                         Mode mode)
{
    if (bound.vars.size() != params.size()) throw ArgumentError("forward: binding does not match parameters");
    if (x.cols() != config.input_width)
        throw DimensionError("forward: batch " + shape_string(x.value()) + " does not match input width " +
                             std::to_string(config.input_width));
    if (mode == Mode::Train && config.has_batch_norm() && x.rows() < 2)
        throw ArgumentError("forward: batch norm in train mode needs at least 2 rows, got " +
                            std::to_string(x.rows()));

    const auto slope = static_cast<Scalar>(config.leaky_slope);
    Var<Scalar> h = x;
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        const LayerConfig& layer = config.layers[l];
        h = add(matmul(h, bound.vars[index_of(params, prefix + ".weight")]),
                bound.vars[index_of(params, prefix + ".bias")]);
        if (layer.batch_norm) {
            const auto& gamma = bound.vars[index_of(params, prefix + ".bn.gamma")];
            const auto& beta = bound.vars[index_of(params, prefix + ".bn.beta")];
            const auto eps = static_cast<Scalar>(config.bn_eps);
            if (mode == Mode::Train) {
                Var<Scalar> mu = col_mean(h);
                Var<Scalar> centered = sub(h, mu);
                Var<Scalar> var = col_mean(square(centered));
                h = add(mul(mul(centered, rsqrt(var, eps)), gamma), beta);
                if (mutable_params != nullptr) {
                    const auto n = static_cast<Scalar>(x.rows());
                    const auto m = static_cast<Scalar>(config.bn_momentum);
                    auto& running_mean = mutable_params->at(prefix + ".bn.running_mean");
                    auto& running_var = mutable_params->at(prefix + ".bn.running_var");
                    running_mean = m * running_mean + (Scalar(1) - m) * mu.value();
                    running_var = m * running_var + (Scalar(1) - m) * (var.value() * (n / (n - Scalar(1))));
                }
            } else {
                Var<Scalar> running_mean = tape.constant(params.at(prefix + ".bn.running_mean"));
                Var<Scalar> inv_std = tape.constant(
                    params.at(prefix + ".bn.running_var").unaryExpr([eps](Scalar v) {
                        return Scalar(1) / std::sqrt(v + eps);
                    }));
                h = add(mul(mul(sub(h, running_mean), inv_std), gamma), beta);
            }
        }
        h = activate(h, layer.activation, slope);
    }
    if (config.output_scale != 1.0f) h = scale(h, static_cast<Scalar>(config.output_scale));
    return h;
}

} // namespace detail

/// Forward pass. Train mode normalizes with batch statistics and updates the
/// running statistics stored in `params`.
template <typename Scalar>
Var<Scalar> forward(Tape<Scalar>& tape, const MlpConfig& config, NetworkParams<Scalar>& params,
                    const Bound<Scalar>& bound, const Var<Scalar>& x, Mode mode)
{
    return detail::forward_impl(tape, config, &params, params, bound, x, mode);
}

/// Forward pass that never mutates `params`. Train mode still uses batch
/// statistics but leaves the running statistics alone.
template <typename Scalar>
Var<Scalar> forward(Tape<Scalar>& tape, const MlpConfig& config, const NetworkParams<Scalar>& params,
                    const Bound<Scalar>& bound, const Var<Scalar>& x, Mode mode = Mode::Eval)
{
    return detail::forward_impl(tape, config, static_cast<NetworkParams<Scalar>*>(nullptr), params, bound, x, mode);
}

/// Eval-mode forward without gradients.
template <typename Scalar>
Matrix<Scalar> evaluate(const MlpConfig& config, const NetworkParams<Scalar>& params, const Matrix<Scalar>& x)
{
    Tape<Scalar> tape;
    const Bound<Scalar> bound = bind(tape, params, false);
    return forward(tape, config, params, bound, tape.constant(x), Mode::Eval).value();
}

/// Adam over the trainable entries of `params`.
template <typename Scalar>
AdamState<Scalar> make_adam_state(const NetworkParams<Scalar>& params, AdamOptions options)
{
    const auto ptrs = params.trainable();
    return make_adam_state<Scalar>(std::span<const Matrix<Scalar>* const>(ptrs), options);
}

template <typename Scalar>
void adam_step(NetworkParams<Scalar>& params, const std::vector<Matrix<Scalar>>& grads, AdamState<Scalar>& state)
{
    const auto ptrs = params.trainable();
    adam_step<Scalar>(std::span<Matrix<Scalar>* const>(ptrs), std::span<const Matrix<Scalar>>(grads), state);
}

/// FNV-1a over names, shapes and raw bytes of every entry (buffers included).
std::uint64_t hash(const NetworkParams<float>& params);

// -- Checkpoints ------------------------------------------------------------
//
// Layout (little-endian): "MGCK", u32 version = 1, u32 tensor count; then per
// tensor: u16 name length, UTF-8 name, u32 rank, u64 per dim, f32 values.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    MatrixF value;
};

/// Exact byte size of a checkpoint holding `tensors`.
std::uint64_t checkpoint_size(const std::vector<NamedTensor>& tensors);

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

/// Saves each network under "<prefix>.<param name>".
void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, const NetworkParams<float>*>& nets);

/// Loads into networks whose layout is already known. Every tensor in the file
/// must belong to one of `nets`, and every entry of `nets` must be present.
void load_checkpoint(const std::filesystem::path& path, const std::map<std::string, NetworkParams<float>*>& nets);

} // namespace mggan
