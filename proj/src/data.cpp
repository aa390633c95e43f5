#include "mggan/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace mggan {

double MixtureSpec::radius() const
{
    double r = 0.0;
    for (const auto& c : centers) r = std::max(r, std::hypot(c[0], c[1]));
    return r;
}

void MixtureSpec::validate() const
{
    if (centers.empty()) throw ArgumentError("MixtureSpec: at least one mode is required");
    if (!(stddev > 0.0)) throw ArgumentError("MixtureSpec: stddev must be positive");
    if (weights.size() != centers.size()) throw ArgumentError("MixtureSpec: one weight per center is required");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ArgumentError("MixtureSpec: weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ArgumentError("MixtureSpec: weights must sum to 1");
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            if (centers[i] == centers[j]) throw ArgumentError("MixtureSpec: centers must be pairwise distinct");
}

MixtureSpec ring_mixture(int modes, double radius, double stddev)
{
    if (modes < 1) throw ArgumentError("ring_mixture: mode count must be at least 1");
    if (!(radius > 0.0)) throw ArgumentError("ring_mixture: radius must be positive");
    if (!(stddev > 0.0)) throw ArgumentError("ring_mixture: stddev must be positive");
    MixtureSpec spec;
    spec.stddev = stddev;
    for (int i = 0; i < modes; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / modes;
        spec.centers.push_back({radius * std::cos(angle), radius * std::sin(angle)});
        spec.weights.push_back(1.0 / modes);
    }
    return spec;
}

MatrixF sample_mixture(const MixtureSpec& spec, Index n, Rng& rng)
{
    if (n < 1) throw ArgumentError("sample_mixture: n must be at least 1");
    spec.validate();
    MatrixF out(n, 2);
    for (Index i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t k = 0;
        while (k + 1 < spec.weights.size() && u >= spec.weights[k]) u -= spec.weights[k++];
        out(i, 0) = static_cast<float>(spec.centers[k][0] + spec.stddev * rng.normal());
        out(i, 1) = static_cast<float>(spec.centers[k][1] + spec.stddev * rng.normal());
    }
    return out;
}

MatrixF sample_prior(const PriorSpec& spec, Index n, Rng& rng)
{
    if (spec.z_dim < 1) throw ArgumentError("sample_prior: z_dim must be at least 1");
    if (n < 1) throw ArgumentError("sample_prior: n must be at least 1");
    MatrixF z(n, spec.z_dim);
    for (Index i = 0; i < z.size(); ++i)
        z.data()[i] = static_cast<float>(spec.kind == PriorKind::Normal ? rng.normal() : rng.uniform(-1.0, 1.0));
    return z;
}

MatrixF ImageDataset::image(Index i) const
{
    if (i < 0 || i >= count) throw ArgumentError("ImageDataset: index out of range");
    return Eigen::Map<const MatrixF>(pixels.row(i).data(), height, width);
}

namespace {

std::uint32_t read_be32(std::istream& is, const std::filesystem::path& path)
{
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IdxTruncatedError("IDX file " + path.string() + " is truncated");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& os, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

ImageDataset load_idx_grayscale(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IdxError("cannot open IDX file " + path.string());
    const std::uint32_t magic = read_be32(is, path);
    if (magic != 0x00000803u) throw IdxMagicError("IDX file " + path.string() + " has bad magic (expected 0x00000803)");
    ImageDataset ds;
    ds.count = read_be32(is, path);
    ds.height = read_be32(is, path);
    ds.width = read_be32(is, path);
    if (ds.height == 0 || ds.width == 0) throw IdxError("IDX file " + path.string() + " has a zero image dimension");
    const Index pixels_per_image = ds.height * ds.width;
    std::vector<unsigned char> raw(static_cast<std::size_t>(ds.count * pixels_per_image));
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw IdxTruncatedError("IDX file " + path.string() + " payload is truncated");
    ds.pixels.resize(ds.count, pixels_per_image);
    for (std::size_t i = 0; i < raw.size(); ++i)
        ds.pixels.data()[i] = static_cast<float>(static_cast<double>(raw[i]) / 127.5 - 1.0);
    return ds;
}

void write_idx_grayscale(const std::filesystem::path& path, Index count, Index height, Index width,
                         const std::vector<unsigned char>& pixels)
{
    if (pixels.size() != static_cast<std::size_t>(count * height * width))
        throw ArgumentError("write_idx_grayscale: pixel count does not match dimensions");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IdxError("cannot open " + path.string() + " for writing");
    write_be32(os, 0x00000803u);
    write_be32(os, static_cast<std::uint32_t>(count));
    write_be32(os, static_cast<std::uint32_t>(height));
    write_be32(os, static_cast<std::uint32_t>(width));
    os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

Sampler mixture_sampler(MixtureSpec spec)
{
    spec.validate();
    return [spec = std::move(spec)](Index n, Rng& rng) { return sample_mixture(spec, n, rng); };
}

Sampler dataset_sampler(ImageDataset data)
{
    if (data.count < 1) throw ArgumentError("dataset_sampler: dataset is empty");
    return [data = std::move(data)](Index n, Rng& rng) {
        MatrixF out(n, data.pixels.cols());
        for (Index i = 0; i < n; ++i) out.row(i) = data.pixels.row(static_cast<Index>(rng.below(data.count)));
        return out;
    };
}

} // namespace mggan
