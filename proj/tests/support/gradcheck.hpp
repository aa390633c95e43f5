#pragma once

// Central finite-difference oracle. The loss is re-evaluated in double from
// forward values only, so it shares nothing with the backward rules under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mggan/rng.hpp"
#include "mggan/tensor.hpp"

namespace mggan::testkit {

/// Loss as a function of one input tensor, evaluated in 64-bit.
using ScalarFn = std::function<double(const MatrixD&)>;

/// d loss / d x[i] for the listed flat indices (all when empty), step h.
inline std::vector<double> central_difference(const ScalarFn& f, const MatrixD& x, double h,
                                              const std::vector<Index>& coords = {})
{
    std::vector<Index> idx = coords;
    if (idx.empty())
        for (Index i = 0; i < x.size(); ++i) idx.push_back(i);
    std::vector<double> out;
    out.reserve(idx.size());
    MatrixD probe = x;
    for (Index i : idx) {
        const double saved = probe.data()[i];
        probe.data()[i] = saved + h;
        const double up = f(probe);
        probe.data()[i] = saved - h;
        const double down = f(probe);
        probe.data()[i] = saved;
        out.push_back((up - down) / (2.0 * h));
    }
    return out;
}

/// |a - b| / max(|a|, |b|, floor). The floor turns the measure into an
/// absolute one for components that are essentially zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-2)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Up to `count` distinct flat indices of a tensor with `size` entries.
inline std::vector<Index> sample_coords(Index size, Index count, Rng& rng)
{
    std::vector<Index> all(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) all[static_cast<std::size_t>(i)] = i;
    if (size <= count) return all;
    for (Index i = 0; i < count; ++i)
        std::swap(all[static_cast<std::size_t>(i)],
                  all[static_cast<std::size_t>(i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(size - i))))]);
    all.resize(static_cast<std::size_t>(count));
    return all;
}

inline MatrixF uniform_matrix(Index rows, Index cols, double lo, double hi, Rng& rng)
{
    MatrixF m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(lo, hi));
    return m;
}

} // namespace mggan::testkit
