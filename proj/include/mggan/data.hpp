#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "mggan/rng.hpp"
#include "mggan/tensor.hpp"

namespace mggan {

/// 2D isotropic Gaussian mixture with a shared standard deviation.
struct MixtureSpec {
    std::vector<std::array<double, 2>> centers;
    double stddev = 0.0;
    std::vector<double> weights;

    std::size_t modes() const { return centers.size(); }
    /// Largest distance of any center from the origin.
    double radius() const;
    void validate() const;
};

/// k modes evenly spaced on a circle of radius r, center i at angle 2*pi*i/k.
MixtureSpec ring_mixture(int modes, double radius, double stddev);

MatrixF sample_mixture(const MixtureSpec& spec, Index n, Rng& rng);

enum class PriorKind { Normal, Uniform };

struct PriorSpec {
    Index z_dim = 64;
    PriorKind kind = PriorKind::Normal;
};

MatrixF sample_prior(const PriorSpec& spec, Index n, Rng& rng);

/// Grayscale images flattened row-major, one image per row, pixels in [-1, 1].
struct ImageDataset {
    Index count = 0;
    Index height = 0;
    Index width = 0;
    MatrixF pixels;

    MatrixF image(Index i) const;
};

/// IDX3 unsigned-byte file (magic 0x00000803, big-endian n, h, w) mapped by p / 127.5 - 1.
ImageDataset load_idx_grayscale(const std::filesystem::path& path);

/// Writes an IDX3 file; used to build fixtures.
void write_idx_grayscale(const std::filesystem::path& path, Index count, Index height, Index width,
                         const std::vector<unsigned char>& pixels);

using Sampler = std::function<MatrixF(Index n, Rng& rng)>;

Sampler mixture_sampler(MixtureSpec spec);
/// Draws images uniformly with replacement.
Sampler dataset_sampler(ImageDataset data);

} // namespace mggan
