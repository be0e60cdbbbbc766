#pragma once
// Grayscale PNG renders: conductivity maps (black = low, white = high) and
// scattering-transform moduli with white where |t| exceeds the clip level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "eitbc/dbar.hpp"
#include "eitbc/error.hpp"
#include "eitbc/io.hpp"

namespace eitbc {

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels; // row-major, row 0 at the top

  std::string png() const { return io::encode_png_gray(width, height, pixels); }
  void save(const std::filesystem::path &p) const { io::detail::write_file(p, png()); }
};

struct ValueRange {
  double lo = 0.0, hi = 1.0;
};

inline ValueRange value_range(const std::vector<double> &v, const std::vector<std::uint8_t> *mask = nullptr) {
  ValueRange r{INFINITY, -INFINITY};
  for (std::size_t q = 0; q < v.size(); ++q)
    if (!mask || (*mask)[q]) {
      r.lo = std::min(r.lo, v[q]);
      r.hi = std::max(r.hi, v[q]);
    }
  if (!(r.lo <= r.hi))
    throw InvalidArgument("value_range: no samples");
  return r;
}

//! n x n cell values (storage j n + i, j increasing upwards) to an image of
//! n*scale pixels a side.  Values are mapped linearly from `range` to
//! 0..255 (mid-gray when the range is degenerate); cells with mask 0 are
//! white.
inline Image render_cells(int n, const std::vector<double> &v, ValueRange range, int scale = 1,
                          const std::vector<std::uint8_t> *mask = nullptr) {
  if (n <= 0 || v.size() != std::size_t(n) * n || scale < 1)
    throw InvalidArgument("render_cells: bad grid size");
  if (mask && mask->size() != v.size())
    throw InvalidArgument("render_cells: mask size mismatch");
  for (double x : v)
    if (!std::isfinite(x))
      throw InvalidArgument("render_cells: non-finite value");
  Image img{n * scale, n * scale, {}};
  img.pixels.resize(std::size_t(img.width) * img.height);
  const double span = range.hi - range.lo;
  for (int py = 0; py < img.height; ++py)
    for (int px = 0; px < img.width; ++px) {
      const int i = px / scale, j = n - 1 - py / scale;
      const std::size_t q = std::size_t(j) * n + i;
      std::uint8_t g = 255;
      if (!mask || (*mask)[q]) {
        const double u = span > 0.0 ? std::clamp((v[q] - range.lo) / span, 0.0, 1.0) : 0.5;
        g = std::uint8_t(std::lround(255.0 * u));
      }
      img.pixels[std::size_t(py) * img.width + px] = g;
    }
  return img;
}

//! Reconstructed conductivity, white outside the disc.
inline Image render_reconstruction(const ReconstructionGrid &R, std::optional<ValueRange> range = {}, int scale = 1) {
  const ValueRange vr = range ? *range : value_range(R.gamma_rec, &R.inside);
  return render_cells(R.n, R.gamma_rec, vr, scale, &R.inside);
}

//! Ground truth sampled on the reconstruction raster.
inline Image render_truth(const ReconstructionGrid &R, std::optional<ValueRange> range = {}, int scale = 1) {
  if (R.truth.empty())
    throw InvalidArgument("render_truth: grid carries no ground truth");
  const ValueRange vr = range ? *range : value_range(R.truth, &R.inside);
  return render_cells(R.n, R.truth, vr, scale, &R.inside);
}

//! |t| on the k-grid scaled from 0 (black) to the clip level (gray 230);
//! cells in the clip mask are white.
inline Image render_scattering(const ScatteringGrid &G, int scale = 1) {
  const int n = G.m;
  Image img{n * scale, n * scale, {}};
  img.pixels.resize(std::size_t(img.width) * img.height);
  for (int py = 0; py < img.height; ++py)
    for (int px = 0; px < img.width; ++px) {
      const int i = px / scale, j = n - 1 - py / scale;
      const std::size_t q = G.index(i, j);
      const double a = std::abs(G.t[q]);
      std::uint8_t g = 255;
      if (!G.clip_mask[q]) {
        if (!std::isfinite(a))
          throw InvalidArgument("render_scattering: non-finite t outside the clip mask");
        g = std::uint8_t(std::lround(230.0 * std::clamp(a / G.clip, 0.0, 1.0)));
      }
      img.pixels[std::size_t(py) * img.width + px] = g;
    }
  return img;
}

} // namespace eitbc
