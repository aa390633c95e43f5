#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>

#include "mggan/errors.hpp"

namespace mggan {

// Every tensor in this library is a row-major matrix: batches are rows,
// features are columns, and scalars are 1x1.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using Index = Eigen::Index;

inline std::string shape_string(Index rows, Index cols)
{
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m)
{
    return shape_string(m.rows(), m.cols());
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* op)
{
    // A finite sum proves every entry finite; otherwise confirm element-wise,
    // since the sum of finite values can itself overflow.
    if (std::isfinite(m.sum())) return;
    if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite value in output");
}

template <typename Scalar>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
template <typename Scalar>
class Var {
public:
    Var() = default;

    bool valid() const { return tape_ != nullptr; }
    Tape<Scalar>& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    const Matrix<Scalar>& value() const { return tape_->value(id_); }
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    bool requires_grad() const { return tape_->requires_grad(id_); }

private:
    friend class Tape<Scalar>;
    Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape<Scalar>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Record of one forward computation. Nodes are appended in execution order,
/// so the record is always a topological order of the graph. One tape per
/// training step; discard it after backward().
template <typename Scalar>
class Tape {
public:
    using Mat = Matrix<Scalar>;
    using BackwardFn = std::function<void(const Mat& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that receives a gradient.
    Var<Scalar> variable(Mat value) { return push(std::move(value), true, {}); }

    /// Leaf that never receives a gradient.
    Var<Scalar> constant(Mat value) { return push(std::move(value), false, {}); }

    /// Append an op output. `inputs` decides whether the node needs a gradient;
    /// the backward rule is dropped when none of them does.
    Var<Scalar> record(Mat value, std::initializer_list<std::size_t> inputs, BackwardFn backward)
    {
        bool needs = false;
        for (std::size_t id : inputs) needs = needs || nodes_[id].requires_grad;
        return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
    }

    const Mat& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    template <typename Derived>
    void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g)
    {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        if (n.has_grad) {
            n.grad += g;
        } else {
            n.grad = g;
            n.has_grad = true;
        }
    }

    /// Gradient of the last backward() loss w.r.t. `v`; zeros when unreachable.
    Mat grad(const Var<Scalar>& v) const
    {
        const Node& n = nodes_.at(v.id());
        if (n.has_grad) return n.grad;
        return Mat::Zero(n.value.rows(), n.value.cols());
    }

    bool has_grad(const Var<Scalar>& v) const { return nodes_.at(v.id()).has_grad; }

    void backward(const Var<Scalar>& loss)
    {
        if (&loss.tape() != this) throw ArgumentError("backward: loss lives on a different tape");
        if (loss.rows() != 1 || loss.cols() != 1)
            throw ArgumentError("backward: loss must be scalar, got " + shape_string(loss.value()));
        if (backward_done_) throw ArgumentError("backward: tape already consumed");
        backward_done_ = true;
        accumulate(loss.id(), Mat::Ones(1, 1));
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.has_grad && n.backward) n.backward(n.grad);
        }
    }

private:
    struct Node {
        Mat value;
        Mat grad;
        bool has_grad = false;
        bool requires_grad = false;
        BackwardFn backward;
    };

    Var<Scalar> push(Mat value, bool requires_grad, BackwardFn backward)
    {
        nodes_.push_back(Node{std::move(value), Mat(), false, requires_grad, std::move(backward)});
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    // deque keeps node references stable while new nodes are appended.
    std::deque<Node> nodes_;
    bool backward_done_ = false;
};

namespace detail {

template <typename Scalar>
Tape<Scalar>& common_tape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op)
{
    if (!a.valid() || !b.valid() || &a.tape() != &b.tape())
        throw ArgumentError(std::string(op) + ": operands must live on the same tape");
    return a.tape();
}

enum class Broadcast { None, RowB };

template <typename Scalar>
Broadcast binary_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op)
{
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::None;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::RowB;
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.value()) + " and " +
                         shape_string(b.value()) + " are not compatible");
}

} // namespace detail

// -- Linear algebra ---------------------------------------------------------

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b)
{
    Tape<Scalar>& t = detail::common_tape(a, b, "matmul");
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.value()) + " and " +
                             shape_string(b.value()));
    Matrix<Scalar> out = a.value() * b.value();
    require_finite(out, "matmul");
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [&t, ia, ib](const Matrix<Scalar>& g) {
        if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
        if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
    });
}

// -- Binary elementwise (equal shapes, or b a 1xm row broadcast over a) -----

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b)
{
    Tape<Scalar>& t = detail::common_tape(a, b, "add");
    const auto bc = detail::binary_shape(a, b, "add");
    Matrix<Scalar> out = a.value();
    if (bc == detail::Broadcast::None)
        out += b.value();
    else
        out.rowwise() += b.value().row(0);
    require_finite(out, "add");
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [&t, ia, ib, bc](const Matrix<Scalar>& g) {
        t.accumulate(ia, g);
        if (bc == detail::Broadcast::None)
            t.accumulate(ib, g);
        else
            t.accumulate(ib, g.colwise().sum());
    });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b)
{
    Tape<Scalar>& t = detail::common_tape(a, b, "sub");
    const auto bc = detail::binary_shape(a, b, "sub");
    Matrix<Scalar> out = a.value();
    if (bc == detail::Broadcast::None)
        out -= b.value();
    else
        out.rowwise() -= b.value().row(0);
    require_finite(out, "sub");
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [&t, ia, ib, bc](const Matrix<Scalar>& g) {
        t.accumulate(ia, g);
        if (bc == detail::Broadcast::None)
            t.accumulate(ib, -g);
        else
            t.accumulate(ib, -g.colwise().sum());
    });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b)
{
    Tape<Scalar>& t = detail::common_tape(a, b, "mul");
    const auto bc = detail::binary_shape(a, b, "mul");
    Matrix<Scalar> out;
    if (bc == detail::Broadcast::None)
        out = a.value().cwiseProduct(b.value());
    else
        out = a.value().array().rowwise() * b.value().row(0).array();
    require_finite(out, "mul");
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [&t, ia, ib, bc](const Matrix<Scalar>& g) {
        const auto& av = t.value(ia);
        const auto& bv = t.value(ib);
        if (bc == detail::Broadcast::None) {
            if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(bv));
            if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(av));
        } else {
            if (t.requires_grad(ia)) {
                Matrix<Scalar> ga = g.array().rowwise() * bv.row(0).array();
                t.accumulate(ia, ga);
            }
            if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(av).colwise().sum());
        }
    });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, const Var<Scalar>& b) { return mul(a, b); }

// -- Unary elementwise ------------------------------------------------------

namespace detail {

// `f` maps the input array to the output array; `df` maps (input, output)
// arrays to dy/dx. Both return Eigen array expressions so they vectorize.
template <typename Scalar, typename Forward, typename Derivative>
Var<Scalar> elementwise(const Var<Scalar>& a, const char* op, Forward f, Derivative df)
{
    Tape<Scalar>& t = a.tape();
    Matrix<Scalar> out = f(a.value().array()).matrix();
    require_finite(out, op);
    const std::size_t ia = a.id();
    const std::size_t io = t.size();
    return t.record(std::move(out), {ia}, [&t, ia, io, df](const Matrix<Scalar>& g) {
        t.accumulate(ia, (g.array() * df(t.value(ia).array(), t.value(io).array())).matrix());
    });
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x)
{
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

} // namespace detail

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a)
{
    return detail::elementwise(
        a, "relu", [](const auto& x) { return x.max(Scalar(0)); },
        [](const auto& x, const auto&) { return (x > Scalar(0)).template cast<Scalar>(); });
}

template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& a, Scalar alpha)
{
    return detail::elementwise(
        a, "leaky_relu", [alpha](const auto& x) { return (x > Scalar(0)).select(x, alpha * x); },
        [alpha](const auto& x, const auto&) { return (x > Scalar(0)).select(x.Constant(x.rows(), x.cols(), Scalar(1)), alpha); });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a)
{
    return detail::elementwise(
        a, "tanh", [](const auto& x) { return x.tanh(); },
        [](const auto&, const auto& y) { return Scalar(1) - y.square(); });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a)
{
    return detail::elementwise(
        a, "sigmoid", [](const auto& x) { return x.unaryExpr([](Scalar v) { return detail::stable_sigmoid(v); }); },
        [](const auto&, const auto& y) { return y * (Scalar(1) - y); });
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& a)
{
    return detail::elementwise(
        a, "exp", [](const auto& x) { return x.exp(); }, [](const auto&, const auto& y) { return y; });
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& a)
{
    if ((a.value().array() <= Scalar(0)).any()) throw DomainError("log: input must be strictly positive");
    return detail::elementwise(
        a, "log", [](const auto& x) { return x.log(); }, [](const auto& x, const auto&) { return x.inverse(); });
}

template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& a)
{
    return detail::elementwise(
        a, "square", [](const auto& x) { return x.square(); }, [](const auto& x, const auto&) { return Scalar(2) * x; });
}

// Subgradient 0 at the kink.
template <typename Scalar>
Var<Scalar> abs(const Var<Scalar>& a)
{
    return detail::elementwise(
        a, "abs", [](const auto& x) { return x.abs(); }, [](const auto& x, const auto&) { return x.sign(); });
}

/// 1 / sqrt(x + eps), requires x + eps > 0.
template <typename Scalar>
Var<Scalar> rsqrt(const Var<Scalar>& a, Scalar eps)
{
    if ((a.value().array() + eps <= Scalar(0)).any()) throw DomainError("rsqrt: input + eps must be positive");
    return detail::elementwise(
        a, "rsqrt", [eps](const auto& x) { return (x + eps).rsqrt(); },
        [](const auto&, const auto& y) { return Scalar(-0.5) * y.cube(); });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor)
{
    return detail::elementwise(
        a, "scale", [factor](const auto& x) { return factor * x; },
        [factor](const auto& x, const auto&) { return x.Constant(x.rows(), x.cols(), factor); });
}

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& a, Scalar c)
{
    return detail::elementwise(
        a, "add_scalar", [c](const auto& x) { return x + c; },
        [](const auto& x, const auto&) { return x.Constant(x.rows(), x.cols(), Scalar(1)); });
}

// -- Reductions -------------------------------------------------------------

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a)
{
    Tape<Scalar>& t = a.tape();
    Matrix<Scalar> out(1, 1);
    out(0, 0) = a.value().sum();
    require_finite(out, "sum");
    const std::size_t ia = a.id();
    return t.record(std::move(out), {ia}, [&t, ia](const Matrix<Scalar>& g) {
        const auto& av = t.value(ia);
        t.accumulate(ia, Matrix<Scalar>::Constant(av.rows(), av.cols(), g(0, 0)));
    });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a)
{
    const Index n = a.value().size();
    if (n == 0) throw ArgumentError("mean: empty tensor");
    return scale(sum(a), Scalar(1) / static_cast<Scalar>(n));
}

/// Per-column mean over rows: [n x m] -> [1 x m].
template <typename Scalar>
Var<Scalar> col_mean(const Var<Scalar>& a)
{
    Tape<Scalar>& t = a.tape();
    const Index n = a.rows();
    if (n == 0) throw ArgumentError("col_mean: empty batch");
    Matrix<Scalar> out = a.value().colwise().mean();
    require_finite(out, "col_mean");
    const std::size_t ia = a.id();
    return t.record(std::move(out), {ia}, [&t, ia, n](const Matrix<Scalar>& g) {
        Matrix<Scalar> ga = (g / static_cast<Scalar>(n)).replicate(n, 1);
        t.accumulate(ia, ga);
    });
}

// -- Losses -----------------------------------------------------------------

/// Mean binary cross-entropy of sigmoid(logits) against a constant label,
/// in softplus form: max(l, 0) - l*y + log1p(exp(-|l|)). Never evaluates log(0).
template <typename Scalar>
Var<Scalar> bce_with_logits(const Var<Scalar>& logits, Scalar target)
{
    Tape<Scalar>& t = logits.tape();
    const Index n = logits.value().size();
    if (n == 0) throw ArgumentError("bce_with_logits: empty batch");
    if (target != Scalar(0) && target != Scalar(1)) throw ArgumentError("bce_with_logits: target must be 0 or 1");
    const auto& l = logits.value();
    require_finite(l, "bce_with_logits(input)");
    Scalar acc = 0;
    for (Index i = 0; i < n; ++i) {
        const Scalar x = l.data()[i];
        acc += std::max(x, Scalar(0)) - x * target + std::log1p(std::exp(-std::abs(x)));
    }
    Matrix<Scalar> out(1, 1);
    out(0, 0) = acc / static_cast<Scalar>(n);
    require_finite(out, "bce_with_logits");
    const std::size_t il = logits.id();
    return t.record(std::move(out), {il}, [&t, il, n, target](const Matrix<Scalar>& g) {
        const Scalar s = g(0, 0) / static_cast<Scalar>(n);
        Matrix<Scalar> gl =
            t.value(il).unaryExpr([target, s](Scalar x) { return s * (detail::stable_sigmoid(x) - target); });
        t.accumulate(il, gl);
    });
}

/// mean((a - b)^2), b broadcastable as in sub().
template <typename Scalar>
Var<Scalar> mse(const Var<Scalar>& a, const Var<Scalar>& b)
{
    return mean(square(sub(a, b)));
}

} // namespace mggan
