#include "mggan/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace mggan {

Index ModeReport::assigned() const
{
    return std::accumulate(counts.begin(), counts.end(), Index{0});
}

std::vector<int> nearest_mode(const MatrixF& samples, const MixtureSpec& spec)
{
    if (samples.cols() != 2) throw DimensionError("nearest_mode: samples must be n x 2, got " + shape_string(samples));
    std::vector<int> out(static_cast<std::size_t>(samples.rows()));
    for (Index i = 0; i < samples.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t k = 0; k < spec.centers.size(); ++k) {
            const double dx = samples(i, 0) - spec.centers[k][0];
            const double dy = samples(i, 1) - spec.centers[k][1];
            const double d = dx * dx + dy * dy;
            if (d < best) {
                best = d;
                arg = static_cast<int>(k);
            }
        }
        out[static_cast<std::size_t>(i)] = arg;
    }
    return out;
}

ModeReport mode_coverage(const MatrixF& samples, const MixtureSpec& spec, std::optional<double> threshold)
{
    if (samples.rows() < 1) throw ArgumentError("mode_coverage: at least one sample is required");
    const double t = threshold.value_or(3.0 * spec.stddev);
    const double t2 = t * t;
    ModeReport r;
    r.sample_count = samples.rows();
    r.counts.assign(spec.modes(), 0);
    const auto nearest = nearest_mode(samples, spec);
    for (Index i = 0; i < samples.rows(); ++i) {
        const auto& c = spec.centers[static_cast<std::size_t>(nearest[static_cast<std::size_t>(i)])];
        const double dx = samples(i, 0) - c[0];
        const double dy = samples(i, 1) - c[1];
        if (dx * dx + dy * dy <= t2) ++r.counts[static_cast<std::size_t>(nearest[static_cast<std::size_t>(i)])];
    }
    const double floor = std::max(1.0, 0.01 * static_cast<double>(r.sample_count));
    Index captured_total = 0;
    for (std::size_t k = 0; k < r.counts.size(); ++k) {
        if (static_cast<double>(r.counts[k]) >= floor) {
            r.captured.push_back(static_cast<int>(k));
            captured_total += r.counts[k];
        }
    }
    r.high_quality_ratio = static_cast<double>(r.assigned()) / static_cast<double>(r.sample_count);
    for (int k : r.captured) {
        const double p = static_cast<double>(r.counts[static_cast<std::size_t>(k)]) / static_cast<double>(captured_total);
        r.balance_entropy -= p * std::log(p);
    }
    return r;
}

// -- MS-SSIM ----------------------------------------------------------------

Index MsSsimParams::min_side() const
{
    return static_cast<Index>(window_size) << (scales() - 1);
}

void MsSsimParams::validate() const
{
    if (weights.empty()) throw ArgumentError("MsSsimParams: at least one scale is required");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-3) throw ArgumentError("MsSsimParams: scale weights must sum to 1");
    if (window_size < 1 || window_size % 2 == 0) throw ArgumentError("MsSsimParams: window size must be odd");
    if (!(window_sigma > 0.0)) throw ArgumentError("MsSsimParams: window sigma must be positive");
    if (!(data_range > 0.0)) throw ArgumentError("MsSsimParams: data range must be positive");
}

MsSsimParams MsSsimParams::with_scales(int scales)
{
    MsSsimParams p;
    if (scales < 1 || scales > p.scales()) throw ArgumentError("MsSsimParams: scales must be in [1, 5]");
    p.weights.resize(static_cast<std::size_t>(scales));
    const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    for (double& w : p.weights) w /= total;
    return p;
}

namespace {

using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> gaussian_window(int size, double sigma)
{
    std::vector<double> w(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - c;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= total;
    return w;
}

// Separable "valid" filtering with the normalized Gaussian window.
Image filter_valid(const Image& img, const std::vector<double>& w)
{
    const Index k = static_cast<Index>(w.size());
    const Index out_rows = img.rows() - k + 1, out_cols = img.cols() - k + 1;
    Image horiz = Image::Zero(img.rows(), out_cols);
    for (Index j = 0; j < k; ++j) horiz += w[static_cast<std::size_t>(j)] * img.middleCols(j, out_cols);
    Image out = Image::Zero(out_rows, out_cols);
    for (Index j = 0; j < k; ++j) out += w[static_cast<std::size_t>(j)] * horiz.middleRows(j, out_rows);
    return out;
}

Image downsample(const Image& img)
{
    const Index rows = img.rows() / 2, cols = img.cols() / 2;
    Image out(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            out(r, c) = 0.25 * (img(2 * r, 2 * c) + img(2 * r + 1, 2 * c) + img(2 * r, 2 * c + 1) +
                                img(2 * r + 1, 2 * c + 1));
    return out;
}

struct ScaleTerms {
    double luminance;
    double contrast_structure;
};

ScaleTerms ssim_terms(const Image& x, const Image& y, const std::vector<double>& w, double c1, double c2)
{
    const Image mx = filter_valid(x, w);
    const Image my = filter_valid(y, w);
    const Image sxx = (filter_valid(x.cwiseProduct(x), w) - mx.cwiseProduct(mx)).cwiseMax(0.0);
    const Image syy = (filter_valid(y.cwiseProduct(y), w) - my.cwiseProduct(my)).cwiseMax(0.0);
    const Image sxy = filter_valid(x.cwiseProduct(y), w) - mx.cwiseProduct(my);
    const auto lum = ((2.0 * mx.array() * my.array() + c1) / (mx.array().square() + my.array().square() + c1));
    const auto cs = ((2.0 * sxy.array() + c2) / (sxx.array() + syy.array() + c2));
    return {lum.mean(), cs.mean()};
}

} // namespace

double ms_ssim(const MatrixF& a, const MatrixF& b, const MsSsimParams& params)
{
    params.validate();
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ArgumentError("ms_ssim: image shapes differ: " + shape_string(a) + " vs " + shape_string(b));
    const Index need = params.min_side();
    if (a.rows() < need || a.cols() < need)
        throw ArgumentError("ms_ssim: image " + shape_string(a) + " is too small; minimum side is " +
                            std::to_string(need) + " for " + std::to_string(params.scales()) + " scales");

    Image x = (a.cast<double>().array() + 1.0) / 2.0;
    Image y = (b.cast<double>().array() + 1.0) / 2.0;
    const auto w = gaussian_window(params.window_size, params.window_sigma);
    double result = 1.0;
    for (int s = 0; s < params.scales(); ++s) {
        const ScaleTerms t = ssim_terms(x, y, w, params.c1(), params.c2());
        const double weight = params.weights[static_cast<std::size_t>(s)];
        result *= std::pow(std::max(t.contrast_structure, 0.0), weight);
        if (s + 1 == params.scales()) {
            result *= std::pow(std::max(t.luminance, 0.0), weight);
        } else {
            x = downsample(x);
            y = downsample(y);
        }
    }
    return result;
}

double pairwise_ms_ssim(const std::vector<MatrixF>& images, const MsSsimParams& params, Rng& rng)
{
    const std::size_t n = images.size();
    if (n < 2) throw ArgumentError("pairwise_ms_ssim: at least two images are required");
    double total = 0.0;
    std::size_t pairs = 0;
    if (n <= 100) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                total += ms_ssim(images[i], images[j], params);
                ++pairs;
            }
    } else {
        for (; pairs < 10000; ++pairs) {
            const auto i = rng.below(n);
            auto j = rng.below(n - 1);
            if (j >= i) ++j;
            total += ms_ssim(images[i], images[j], params);
        }
    }
    return total / static_cast<double>(pairs);
}

} // namespace mggan
