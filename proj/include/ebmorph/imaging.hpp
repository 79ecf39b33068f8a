#pragma once

// Polar hexbin images of phased light curves.
//
// A curve is wrapped around the origin: phase becomes the azimuth, measured
// clockwise from +y, and the min-max scaled flux becomes a radius in
// [0.2, 1]. The points are then counted on a pointy-top hexagonal lattice
// covering [-1, 1]^2 and the counts are painted into a square raster.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ebmorph/curve.hpp"

namespace ebmorph {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct PolarPoints {
  std::vector<Point2> xy;
};

inline constexpr double kMinPolarRadius = 0.2;
inline constexpr double kMaxPolarRadius = 1.0;

PolarPoints to_polar(const PhasedCurve& curve);

// Two interleaved rectangular lattices of hexagon centres. Lattice A sits at
// (-1 + j*dx, -1 + k*dy) and lattice B at the same positions shifted by
// (dx/2, dy/2), with dx = 2/G and dy = sqrt(3)*dx, so every centre has six
// neighbours at distance dx (regular hexagons, pointy side up).
class HexLattice {
 public:
  explicit HexLattice(std::size_t gridsize);

  std::size_t gridsize() const { return gridsize_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  std::size_t columns() const { return nx_; }
  std::size_t rows() const { return ny_; }
  // Total number of centres across both lattices.
  std::size_t size() const { return 2 * nx_ * ny_; }

  // Bin index layout: lattice * (nx*ny) + row * nx + column.
  std::size_t index(int lattice, std::size_t row, std::size_t column) const {
    return static_cast<std::size_t>(lattice) * nx_ * ny_ + row * nx_ + column;
  }
  Point2 center(std::size_t bin) const;

  // Nearest centre, found by rounding within each lattice and keeping the
  // closer of the two candidates (ties go to lattice A).
  std::size_t nearest(double x, double y) const;

  bool operator==(const HexLattice& o) const { return gridsize_ == o.gridsize_; }

 private:
  std::size_t gridsize_;
  double dx_;
  double dy_;
  std::size_t nx_;
  std::size_t ny_;
};

struct HexGrid {
  HexLattice lattice{24};
  std::vector<std::uint32_t> counts;

  std::uint64_t total() const;
  std::uint32_t max_count() const;
};

inline constexpr std::size_t kDefaultGridsize = 24;
inline constexpr std::size_t kImageSize = 224;

HexGrid hexbin_counts(const PolarPoints& points, std::size_t gridsize);

struct ImageRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  // Row-major, row 0 at the top; intensities in [0, 1].
  std::vector<float> pixels;

  float at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  bool operator==(const ImageRaster&) const = default;
};

// Domain coordinates of a pixel centre (y up, row 0 at the top).
Point2 pixel_center(std::size_t row, std::size_t col, std::size_t size);

// Pixel -> bin assignment for a lattice and image size. Serial reference and
// an OpenMP version that must agree exactly.
std::vector<std::uint32_t> assign_pixels_serial(const HexLattice& lattice, std::size_t size);
std::vector<std::uint32_t> assign_pixels(const HexLattice& lattice, std::size_t size);

ImageRaster rasterize_serial(const HexGrid& grid, std::size_t size = kImageSize);
ImageRaster rasterize(const HexGrid& grid, std::size_t size = kImageSize);

struct ImagingConfig {
  std::size_t gridsize = kDefaultGridsize;
  std::size_t size = kImageSize;
};

ImageRaster curve_to_image(const PhasedCurve& curve, std::size_t gridsize = kDefaultGridsize);
ImageRaster curve_to_image(const PhasedCurve& curve, const ImagingConfig& cfg);

// 8-bit values round(255 * v), the exact content of the PGM files.
std::vector<std::uint8_t> quantize(const ImageRaster& image);
ImageRaster dequantize(std::span<const std::uint8_t> bytes, std::size_t width, std::size_t height);
// round-trip through 8 bits, so in-memory images match what was written to disk
ImageRaster quantized(const ImageRaster& image);

// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const ImageRaster& image);
ImageRaster read_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> read_pgm_bytes(const std::filesystem::path& path, std::size_t& width,
                                         std::size_t& height);

}  // namespace ebmorph
