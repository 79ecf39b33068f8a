#include "ebmorph/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "ebmorph/error.hpp"

namespace ebmorph {

PolarPoints to_polar(const PhasedCurve& curve) {
  if (curve.empty()) throw Error(ErrorKind::EmptyCurve, "to_polar");
  auto [lo, hi] = std::minmax_element(curve.fluxes.begin(), curve.fluxes.end());
  const double fmin = *lo;
  const double range = *hi - *lo;
  PolarPoints out;
  out.xy.reserve(curve.n_points());
  for (std::size_t i = 0; i < curve.n_points(); ++i) {
    double r = kMaxPolarRadius;
    if (range > 0.0) {
      r = kMinPolarRadius + (kMaxPolarRadius - kMinPolarRadius) * (curve.fluxes[i] - fmin) / range;
    }
    const double phi = 2.0 * std::numbers::pi * curve.phases[i];
    out.xy.push_back({r * std::sin(phi), r * std::cos(phi)});
  }
  return out;
}

HexLattice::HexLattice(std::size_t gridsize) : gridsize_(gridsize) {
  if (gridsize < 4) throw Error(ErrorKind::InvalidArgument, "gridsize must be >= 4");
  dx_ = 2.0 / static_cast<double>(gridsize);
  dy_ = std::sqrt(3.0) * dx_;
  nx_ = gridsize + 1;
  ny_ = static_cast<std::size_t>(std::floor(2.0 / dy_)) + 2;
}

Point2 HexLattice::center(std::size_t bin) const {
  const std::size_t per = nx_ * ny_;
  const bool b = bin >= per;
  const std::size_t local = b ? bin - per : bin;
  const double j = static_cast<double>(local % nx_);
  const double k = static_cast<double>(local / nx_);
  const double off = b ? 0.5 : 0.0;
  return {-1.0 + (j + off) * dx_, -1.0 + (k + off) * dy_};
}

std::size_t HexLattice::nearest(double x, double y) const {
  const double u = (x + 1.0) / dx_;
  const double v = (y + 1.0) / dy_;
  auto clamp_to = [](double t, std::size_t n) {
    if (!(t > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(t), n - 1);
  };
  // round half up within lattice A, floor for the half-offset lattice B
  const std::size_t ja = clamp_to(std::floor(u + 0.5), nx_);
  const std::size_t ka = clamp_to(std::floor(v + 0.5), ny_);
  const std::size_t jb = clamp_to(std::floor(u), nx_);
  const std::size_t kb = clamp_to(std::floor(v), ny_);
  const std::size_t a = index(0, ka, ja);
  const std::size_t b = index(1, kb, jb);
  const Point2 ca = center(a);
  const Point2 cb = center(b);
  const double da = (x - ca.x) * (x - ca.x) + (y - ca.y) * (y - ca.y);
  const double db = (x - cb.x) * (x - cb.x) + (y - cb.y) * (y - cb.y);
  return db < da ? b : a;
}

std::uint64_t HexGrid::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

std::uint32_t HexGrid::max_count() const {
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

HexGrid hexbin_counts(const PolarPoints& points, std::size_t gridsize) {
  HexGrid grid{HexLattice(gridsize), {}};
  grid.counts.assign(grid.lattice.size(), 0);
  for (const auto& p : points.xy) ++grid.counts[grid.lattice.nearest(p.x, p.y)];
  return grid;
}

Point2 pixel_center(std::size_t row, std::size_t col, std::size_t size) {
  const double step = 2.0 / static_cast<double>(size);
  return {-1.0 + (static_cast<double>(col) + 0.5) * step,
          1.0 - (static_cast<double>(row) + 0.5) * step};
}

namespace {

void check_size(std::size_t size) {
  if (size < 32) throw Error(ErrorKind::InvalidArgument, "image size must be >= 32");
}

ImageRaster paint(const HexGrid& grid, std::size_t size, const std::vector<std::uint32_t>& bins) {
  ImageRaster img{size, size, std::vector<float>(size * size, 0.0f)};
  const std::uint32_t mx = grid.max_count();
  if (mx == 0) return img;
  const float inv = 1.0f / static_cast<float>(mx);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const std::uint32_t c = grid.counts[bins[i]];
    img.pixels[i] = c == mx ? 1.0f : static_cast<float>(c) * inv;
  }
  return img;
}

}  // namespace

std::vector<std::uint32_t> assign_pixels_serial(const HexLattice& lattice, std::size_t size) {
  check_size(size);
  std::vector<std::uint32_t> bins(size * size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const Point2 p = pixel_center(r, c, size);
      bins[r * size + c] = static_cast<std::uint32_t>(lattice.nearest(p.x, p.y));
    }
  }
  return bins;
}

std::vector<std::uint32_t> assign_pixels(const HexLattice& lattice, std::size_t size) {
  check_size(size);
  std::vector<std::uint32_t> bins(size * size);
  const auto n = static_cast<std::ptrdiff_t>(size);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto row = static_cast<std::size_t>(r);
    for (std::size_t c = 0; c < size; ++c) {
      const Point2 p = pixel_center(row, c, size);
      bins[row * size + c] = static_cast<std::uint32_t>(lattice.nearest(p.x, p.y));
    }
  }
  return bins;
}

ImageRaster rasterize_serial(const HexGrid& grid, std::size_t size) {
  return paint(grid, size, assign_pixels_serial(grid.lattice, size));
}

ImageRaster rasterize(const HexGrid& grid, std::size_t size) {
  return paint(grid, size, assign_pixels(grid.lattice, size));
}

ImageRaster curve_to_image(const PhasedCurve& curve, std::size_t gridsize) {
  return curve_to_image(curve, ImagingConfig{gridsize, kImageSize});
}

ImageRaster curve_to_image(const PhasedCurve& curve, const ImagingConfig& cfg) {
  return rasterize(hexbin_counts(to_polar(curve), cfg.gridsize), cfg.size);
}

std::vector<std::uint8_t> quantize(const ImageRaster& image) {
  std::vector<std::uint8_t> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f);
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * static_cast<double>(v)));
  }
  return out;
}

ImageRaster dequantize(std::span<const std::uint8_t> bytes, std::size_t width,
                       std::size_t height) {
  if (bytes.size() != width * height) {
    throw Error(ErrorKind::ShapeMismatch, "byte count does not match image shape");
  }
  ImageRaster img{width, height, std::vector<float>(bytes.size())};
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
  }
  return img;
}

ImageRaster quantized(const ImageRaster& image) {
  return dequantize(quantize(image), image.width, image.height);
}

void write_pgm(const std::filesystem::path& path, const ImageRaster& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  auto bytes = quantize(image);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::vector<std::uint8_t> read_pgm_bytes(const std::filesystem::path& path, std::size_t& width,
                                         std::size_t& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorKind::IoError : ErrorKind::FileNotFound,
                path.string());
  }
  std::string magic;
  std::size_t maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || maxval != 255) {
    throw Error(ErrorKind::FormatError, path.string() + ": not an 8-bit binary PGM");
  }
  in.get();  // single whitespace before the raster
  std::vector<std::uint8_t> bytes(width * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorKind::FormatError, path.string() + ": truncated raster");
  }
  return bytes;
}

ImageRaster read_pgm(const std::filesystem::path& path) {
  std::size_t w = 0, h = 0;
  auto bytes = read_pgm_bytes(path, w, h);
  return dequantize(bytes, w, h);
}

}  // namespace ebmorph
