#pragma once

// Randomized analytic-vs-finite-difference comparisons for ops and networks.
// Analytic gradients come from the float tape; the oracle replays the forward
// pass in double and projects the output onto a fixed random direction.

#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "mggan/nets.hpp"

namespace mggan::testkit {

struct GradCheckResult {
    std::string name;
    int trials = 0;
    long comparisons = 0;
    double max_rel_error = 0.0;

    void record(double err)
    {
        ++comparisons;
        max_rel_error = std::max(max_rel_error, err);
    }
};

inline constexpr double kStep = 1e-5;

/// `op` is a generic callable taking std::vector<Var<S>> and returning Var<S>,
/// instantiated for S = float (analytic) and S = double (oracle).
template <typename Op>
GradCheckResult check_op(const std::string& name, Op op, const std::function<std::vector<MatrixF>(Rng&)>& make_inputs,
                         int trials, Rng& rng)
{
    GradCheckResult result{name};
    for (int trial = 0; trial < trials; ++trial) {
        const std::vector<MatrixF> inputs = make_inputs(rng);

        Tape<float> tape;
        std::vector<Var<float>> vars;
        for (const auto& in : inputs) vars.push_back(tape.variable(in));
        const Var<float> out = op(vars);
        const MatrixF direction = uniform_matrix(out.rows(), out.cols(), -1.0, 1.0, rng);
        tape.backward(sum(mul(out, tape.constant(direction))));

        const MatrixD dir_d = direction.cast<double>();
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            const ScalarFn f = [&](const MatrixD& xk) {
                Tape<double> t;
                std::vector<Var<double>> dv;
                for (std::size_t j = 0; j < inputs.size(); ++j)
                    dv.push_back(t.constant(j == k ? xk : MatrixD(inputs[j].cast<double>())));
                return (op(dv).value().array() * dir_d.array()).sum();
            };
            const MatrixF analytic = tape.grad(vars[k]);
            const auto numeric = central_difference(f, inputs[k].cast<double>(), kStep);
            for (Index i = 0; i < analytic.size(); ++i)
                result.record(relative_error(analytic.data()[i], numeric[static_cast<std::size_t>(i)]));
        }
        ++result.trials;
    }
    return result;
}

/// Gradient of a projected network output w.r.t. the input batch and every
/// trainable tensor (`coords_per_tensor` random entries each). Batch norm in
/// train mode uses batch statistics; running statistics are not touched.
inline GradCheckResult check_network(const std::string& name, const MlpConfig& config, Index batch, Mode mode,
                                     int trials, Index coords_per_tensor, Rng& rng)
{
    GradCheckResult result{name};
    for (int trial = 0; trial < trials; ++trial) {
        Rng init = rng.split(static_cast<std::uint64_t>(trial));
        NetworkParams<float> params = init_network(config, init);
        // Larger weights than the 0.02 init so every layer contributes curvature.
        for (auto& e : params)
            if (e.trainable && e.name.ends_with(".weight"))
                e.value = uniform_matrix(e.value.rows(), e.value.cols(), -1.0, 1.0, rng) /
                          std::sqrt(static_cast<float>(e.value.rows()));
            else if (e.trainable)
                e.value = uniform_matrix(e.value.rows(), e.value.cols(), -0.5, 0.5, rng) + e.value;
        const MatrixF x = uniform_matrix(batch, config.input_width, -2.0, 2.0, rng);

        Tape<float> tape;
        const auto bound = bind(tape, params);
        const Var<float> xv = tape.variable(x);
        const NetworkParams<float>& cparams = params;
        const Var<float> out = forward(tape, config, cparams, bound, xv, mode);
        const MatrixF direction = uniform_matrix(out.rows(), out.cols(), -1.0, 1.0, rng);
        tape.backward(sum(mul(out, tape.constant(direction))));
        const MatrixD dir_d = direction.cast<double>();

        NetworkParams<double> work = params.cast<double>();
        MatrixD input = x.cast<double>();
        auto replay = [&] {
            Tape<double> t;
            const auto b = bind(t, work, false);
            return (forward(t, config, work, b, t.constant(input), mode).value().array() * dir_d.array()).sum();
        };
        // Central difference of replay() in the entry `slot`. A ReLU kink inside
        // [-h, h] spoils the quotient, so a mismatch is re-measured with a much
        // smaller step (still well above double rounding).
        auto compare = [&](double& slot, double analytic) {
            const double saved = slot;
            auto quotient = [&](double h) {
                slot = saved + h;
                const double up = replay();
                slot = saved - h;
                const double down = replay();
                slot = saved;
                return (up - down) / (2.0 * h);
            };
            double err = relative_error(analytic, quotient(kStep));
            if (err >= 1e-3) err = std::min(err, relative_error(analytic, quotient(1e-7)));
            result.record(err);
        };

        const MatrixF grad_x = tape.grad(xv);
        for (Index i : sample_coords(x.size(), coords_per_tensor, rng)) compare(input.data()[i], grad_x.data()[i]);
        for (std::size_t e = 0; e < params.size(); ++e) {
            if (!params[e].trainable) continue;
            const MatrixF analytic = tape.grad(bound.vars[e]);
            for (Index i : sample_coords(analytic.size(), coords_per_tensor, rng))
                compare(work[e].value.data()[i], analytic.data()[i]);
        }
        ++result.trials;
    }
    return result;
}

/// Every differentiable op, `trials` random draws each, inputs in [-2, 2]
/// (strictly positive for log and rsqrt, away from kinks for relu/abs).
std::vector<GradCheckResult> op_gradient_suite(int trials, Rng& rng);

} // namespace mggan::testkit
