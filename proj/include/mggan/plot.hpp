#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mggan/data.hpp"

namespace mggan {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB raster, row 0 at the top.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Raster(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

inline constexpr int kPlotSize = 512;
inline constexpr Rgb kBackground{255, 255, 255};
inline constexpr Rgb kAxisColor{225, 225, 225};
inline constexpr Rgb kCenterColor{220, 30, 30};
inline constexpr Rgb kSampleColor{20, 60, 200};

/// Pixel holding data point (x, y) on a kPlotSize square covering
/// [-extent, extent]^2, or nothing when the point falls outside.
std::optional<std::array<int, 2>> plot_pixel(double x, double y, double extent);

/// Scatter of `samples` (n x 2) with the mixture centers marked. Axes span
/// [-(r + 1), r + 1] where r is the mixture radius, so frames of one
/// experiment share a coordinate system. Samples are drawn last.
Raster render_scatter(const MatrixF& samples, const MixtureSpec& spec);

/// Places rasters left to right with a 1-pixel gray separator.
Raster side_by_side(const std::vector<Raster>& panels);

/// Binary PPM (P6). Written atomically.
void write_ppm(const std::filesystem::path& path, const Raster& raster);
Raster read_ppm(const std::filesystem::path& path);

} // namespace mggan
