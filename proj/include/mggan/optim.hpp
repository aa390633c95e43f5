#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mggan/tensor.hpp"

namespace mggan {

struct AdamOptions {
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

template <typename Scalar>
struct AdamState {
    AdamOptions options;
    std::vector<Matrix<Scalar>> first_moment;
    std::vector<Matrix<Scalar>> second_moment;
    std::int64_t step = 0;
};

/// Zero moments shaped like `params`.
template <typename Scalar>
AdamState<Scalar> make_adam_state(std::span<const Matrix<Scalar>* const> params, AdamOptions options)
{
    AdamState<Scalar> state;
    state.options = options;
    for (const auto* p : params) {
        state.first_moment.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
        state.second_moment.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
    }
    return state;
}

/// Bias-corrected Adam update in place; increments state.step.
template <typename Scalar>
void adam_step(std::span<Matrix<Scalar>* const> params, std::span<const Matrix<Scalar>> grads, AdamState<Scalar>& state)
{
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                             std::to_string(grads.size()) + " grads, " + std::to_string(state.first_moment.size()) +
                             " moment buffers");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = *params[i];
        if (p.rows() != grads[i].rows() || p.cols() != grads[i].cols() || p.rows() != state.first_moment[i].rows() ||
            p.cols() != state.first_moment[i].cols())
            throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " + shape_string(p) +
                                 " but gradient " + shape_string(grads[i]) + " and moments " +
                                 shape_string(state.first_moment[i]));
    }

    const AdamOptions& o = state.options;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const auto b1 = static_cast<Scalar>(o.beta1);
    const auto b2 = static_cast<Scalar>(o.beta2);
    const auto correction1 = static_cast<Scalar>(1.0 - std::pow(static_cast<double>(o.beta1), t));
    const auto correction2 = static_cast<Scalar>(1.0 - std::pow(static_cast<double>(o.beta2), t));
    const auto lr = static_cast<Scalar>(o.lr);
    const auto eps = static_cast<Scalar>(o.eps);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto m = state.first_moment[i].array();
        auto v = state.second_moment[i].array();
        const auto g = grads[i].array();
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.square();
        params[i]->array() -= lr * (m / correction1) / ((v / correction2).sqrt() + eps);
    }
}

} // namespace mggan
