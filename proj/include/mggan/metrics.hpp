#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mggan/data.hpp"
#include "mggan/rng.hpp"
#include "mggan/tensor.hpp"

namespace mggan {

struct ModeReport {
    std::vector<Index> counts;     // per mode, samples within threshold of that nearest center
    std::vector<int> captured;     // indices of modes whose count reaches the capture floor
    double high_quality_ratio = 0; // assigned / sample_count
    double balance_entropy = 0;    // over captured-mode counts, in [0, ln k]
    Index sample_count = 0;

    int modes_captured() const { return static_cast<int>(captured.size()); }
    Index assigned() const;
};

/// Each sample goes to its nearest center if within `threshold` (default 3 sigma).
/// A mode is captured when its count is at least max(1, 0.01 n).
ModeReport mode_coverage(const MatrixF& samples, const MixtureSpec& spec, std::optional<double> threshold = {});

/// Index of the nearest center for each row.
std::vector<int> nearest_mode(const MatrixF& samples, const MixtureSpec& spec);

struct MsSsimParams {
    std::vector<double> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    int window_size = 11;
    double window_sigma = 1.5;
    double data_range = 1.0; // L, after mapping [-1, 1] inputs to [0, 1]
    double k1 = 0.01;
    double k2 = 0.03;

    int scales() const { return static_cast<int>(weights.size()); }
    double c1() const { return (k1 * data_range) * (k1 * data_range); }
    double c2() const { return (k2 * data_range) * (k2 * data_range); }
    /// Smallest image side that survives every downsample with a full window.
    Index min_side() const;
    void validate() const;

    /// Reference weights truncated to the first `scales` entries and renormalized.
    static MsSsimParams with_scales(int scales);
};

/// Multi-scale SSIM of two equally shaped images with pixels in [-1, 1].
/// Contrast-structure terms at every scale and luminance at the coarsest,
/// each clamped at 0 before weighting, so the result lies in [0, 1].
double ms_ssim(const MatrixF& a, const MatrixF& b, const MsSsimParams& params = {});

/// Mean MS-SSIM over all unordered pairs when n <= 100, otherwise over
/// 10,000 random pairs drawn from `rng`. Lower means more diverse.
double pairwise_ms_ssim(const std::vector<MatrixF>& images, const MsSsimParams& params, Rng& rng);

} // namespace mggan
