#include "mggan/plot.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mggan/io.hpp"

namespace mggan {

std::optional<std::array<int, 2>> plot_pixel(double x, double y, double extent)
{
    const double u = (x + extent) / (2.0 * extent) * kPlotSize;
    const double v = (extent - y) / (2.0 * extent) * kPlotSize;
    if (!(u >= 0.0 && u < kPlotSize && v >= 0.0 && v < kPlotSize)) return std::nullopt;
    return std::array<int, 2>{static_cast<int>(u), static_cast<int>(v)};
}

Raster render_scatter(const MatrixF& samples, const MixtureSpec& spec)
{
    if (samples.size() > 0 && samples.cols() != 2)
        throw DimensionError("render_scatter: samples must be n x 2, got " + shape_string(samples));
    const double extent = spec.radius() + 1.0;
    Raster img(kPlotSize, kPlotSize, kBackground);

    if (const auto origin = plot_pixel(0.0, 0.0, extent)) {
        for (int i = 0; i < kPlotSize; ++i) {
            img.at(i, (*origin)[1]) = kAxisColor;
            img.at((*origin)[0], i) = kAxisColor;
        }
    }
    // Centers as 11-pixel crosses.
    for (const auto& c : spec.centers) {
        const auto p = plot_pixel(c[0], c[1], extent);
        if (!p) continue;
        for (int d = -5; d <= 5; ++d) {
            if (img.contains((*p)[0] + d, (*p)[1])) img.at((*p)[0] + d, (*p)[1]) = kCenterColor;
            if (img.contains((*p)[0], (*p)[1] + d)) img.at((*p)[0], (*p)[1] + d) = kCenterColor;
        }
    }
    for (Index i = 0; i < samples.rows(); ++i)
        if (const auto p = plot_pixel(samples(i, 0), samples(i, 1), extent)) img.at((*p)[0], (*p)[1]) = kSampleColor;
    return img;
}

Raster side_by_side(const std::vector<Raster>& panels)
{
    if (panels.empty()) throw ArgumentError("side_by_side: no panels");
    int width = -1, height = 0;
    for (const auto& p : panels) {
        width += p.width + 1;
        height = std::max(height, p.height);
    }
    Raster out(width, height, kBackground);
    int x0 = 0;
    for (std::size_t k = 0; k < panels.size(); ++k) {
        const auto& p = panels[k];
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) out.at(x0 + x, y) = p.at(x, y);
        x0 += p.width;
        if (k + 1 < panels.size()) {
            for (int y = 0; y < height; ++y) out.at(x0, y) = Rgb{128, 128, 128};
            ++x0;
        }
    }
    return out;
}

void write_ppm(const std::filesystem::path& path, const Raster& raster)
{
    std::string data = "P6\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    data.reserve(data.size() + raster.pixels.size() * 3);
    for (const auto& p : raster.pixels) {
        data.push_back(static_cast<char>(p.r));
        data.push_back(static_cast<char>(p.g));
        data.push_back(static_cast<char>(p.b));
    }
    write_file_atomic(path, data);
}

Raster read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open image " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw Error("not an 8-bit P6 image: " + path.string());
    in.get();
    Raster r(w, h, kBackground);
    for (auto& p : r.pixels) {
        char rgb[3];
        if (!in.read(rgb, 3)) throw Error("truncated image: " + path.string());
        p = Rgb{static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]), static_cast<std::uint8_t>(rgb[2])};
    }
    return r;
}

} // namespace mggan
