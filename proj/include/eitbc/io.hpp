#pragma once
// File formats.
//
// Matrices, grids and meshes are stored as a JSON header plus a flat
// little-endian binary file named by the header's "data_file" (relative to
// the header).  Complex values are interleaved (re, im) float64 pairs.  Mode
// ordering is n = -N..N (n = 0 omitted for ND matrices), row-major.
// Small matrices may carry their data inline as "data": [re, im, ...].

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <png.h>

#include "json.hpp"

#include "eitbc/boundary_basis.hpp"
#include "eitbc/dbar.hpp"
#include "eitbc/error.hpp"
#include "eitbc/mesh.hpp"

namespace eitbc::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Raw little-endian helpers

namespace detail {

template <class T> void put_le(std::string &out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b.begin(), b.end());
  out.append(b.data(), b.size());
}

template <class T> T get_le(const char *p) {
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

inline std::string read_file(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  if (!f)
    throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path &p, const std::string &data) {
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error("cannot write " + p.string());
  f.write(data.data(), std::streamsize(data.size()));
  if (!f)
    throw Error("write failed for " + p.string());
}

inline fs::path data_path_for(const fs::path &header) {
  fs::path d = header;
  d.replace_extension(".bin");
  return d;
}

inline void put_complex(std::string &out, cplx v) {
  put_le(out, v.real());
  put_le(out, v.imag());
}

class Reader {
public:
  explicit Reader(std::string data) : d_(std::move(data)) {}
  template <class T> T get() {
    if (pos_ + sizeof(T) > d_.size())
      throw Error("binary file truncated");
    T v = get_le<T>(d_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }
  cplx get_complex() {
    const double re = get<double>();
    const double im = get<double>();
    return {re, im};
  }
  bool done() const { return pos_ == d_.size(); }

private:
  std::string d_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline std::string dump_json(const json &j) { return j.dump(2) + "\n"; }

inline void write_json(const fs::path &p, const json &j) { detail::write_file(p, dump_json(j)); }

inline json read_json(const fs::path &p) {
  try {
    return json::parse(detail::read_file(p));
  } catch (const json::exception &e) {
    throw Error("malformed JSON in " + p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Matrices

inline std::string mode_order(const BoundaryOperatorMatrix &A) { return A.mean_zero() ? "n=-N..N,n!=0" : "n=-N..N"; }

inline void save_matrix(const fs::path &header, const BoundaryOperatorMatrix &A, bool inline_data = false) {
  json j = {{"kind", to_string(A.kind)}, {"N", A.half_order},          {"in_radius", A.in_radius},
            {"out_radius", A.out_radius}, {"order", mode_order(A)},     {"layout", "row-major"},
            {"rows", A.size()},          {"cols", A.size()}};
  std::string bin;
  for (int r = 0; r < A.size(); ++r)
    for (int c = 0; c < A.size(); ++c)
      detail::put_complex(bin, A.entries(r, c));
  if (inline_data) {
    std::vector<double> flat;
    for (int r = 0; r < A.size(); ++r)
      for (int c = 0; c < A.size(); ++c) {
        flat.push_back(A.entries(r, c).real());
        flat.push_back(A.entries(r, c).imag());
      }
    j["data"] = flat;
  } else {
    const fs::path dp = detail::data_path_for(header);
    j["data_file"] = dp.filename().string();
    detail::write_file(dp, bin);
  }
  write_json(header, j);
}

inline BoundaryOperatorMatrix load_matrix(const fs::path &header) {
  const json j = read_json(header);
  BoundaryOperatorMatrix A(operator_kind_from_string(j.at("kind").get<std::string>()), j.at("in_radius").get<double>(),
                           j.at("out_radius").get<double>(), j.at("N").get<int>());
  if (j.value("layout", "row-major") != "row-major")
    throw Error("load_matrix: unsupported layout");
  const int s = A.size();
  if (j.contains("data")) {
    const auto flat = j.at("data").get<std::vector<double>>();
    if (flat.size() != std::size_t(2 * s * s))
      throw Error("load_matrix: inline data has the wrong length");
    for (int r = 0; r < s; ++r)
      for (int c = 0; c < s; ++c)
        A.entries(r, c) = {flat[2 * (r * s + c)], flat[2 * (r * s + c) + 1]};
    return A;
  }
  detail::Reader rd(detail::read_file(header.parent_path() / j.at("data_file").get<std::string>()));
  for (int r = 0; r < s; ++r)
    for (int c = 0; c < s; ++c)
      A.entries(r, c) = rd.get_complex();
  if (!rd.done())
    throw Error("load_matrix: trailing bytes in data file");
  return A;
}

// ---------------------------------------------------------------------------
// Fourier vectors (small; JSON only)

inline json to_json(const FourierVector &v) {
  std::vector<std::array<double, 2>> c;
  for (int i = 0; i < v.size(); ++i)
    c.push_back({v.coeffs(i).real(), v.coeffs(i).imag()});
  return {{"radius", v.radius}, {"N", v.half_order}, {"mean_zero", v.mean_zero},
          {"order", v.mean_zero ? "n=-N..N,n!=0" : "n=-N..N"}, {"coeffs", c}};
}

inline FourierVector fourier_from_json(const json &j) {
  FourierVector v(j.at("radius").get<double>(), j.at("N").get<int>(), j.value("mean_zero", false));
  const auto c = j.at("coeffs").get<std::vector<std::array<double, 2>>>();
  if (int(c.size()) != v.size())
    throw Error("FourierVector: coefficient count does not match N");
  for (int i = 0; i < v.size(); ++i)
    v.coeffs(i) = {c[i][0], c[i][1]};
  return v;
}

// ---------------------------------------------------------------------------
// Scattering and reconstruction grids

inline void save_scattering_grid(const fs::path &header, const ScatteringGrid &G) {
  std::string bin;
  for (cplx v : G.t)
    detail::put_complex(bin, v);
  bin.append(reinterpret_cast<const char *>(G.clip_mask.data()), G.clip_mask.size());
  bin.append(reinterpret_cast<const char *>(G.failed.data()), G.failed.size());
  const fs::path dp = detail::data_path_for(header);
  detail::write_file(dp, bin);
  write_json(header, {{"type", "scattering_grid"},
                      {"R", G.R},
                      {"h", G.h},
                      {"m", G.m},
                      {"clip", G.clip},
                      {"k_of_cell", "((i - m/2 + 1/2) + i (j - m/2 + 1/2)) h, storage j*m + i"},
                      {"sections", {"t: complex128[m*m]", "clip_mask: uint8[m*m]", "failed: uint8[m*m]"}},
                      {"data_file", dp.filename().string()}});
}

inline ScatteringGrid load_scattering_grid(const fs::path &header) {
  const json j = read_json(header);
  if (j.value("type", "") != "scattering_grid")
    throw Error("load_scattering_grid: not a scattering grid file");
  ScatteringGrid G = make_empty_grid(j.at("R").get<double>(), j.at("m").get<int>());
  G.h = j.at("h").get<double>();
  G.clip = j.value("clip", 15.0);
  detail::Reader rd(detail::read_file(header.parent_path() / j.at("data_file").get<std::string>()));
  for (auto &v : G.t)
    v = rd.get_complex();
  for (auto &b : G.clip_mask)
    b = rd.get<std::uint8_t>();
  for (auto &b : G.failed)
    b = rd.get<std::uint8_t>();
  if (!rd.done())
    throw Error("load_scattering_grid: trailing bytes in data file");
  return G;
}

inline void save_reconstruction(const fs::path &header, const ReconstructionGrid &R) {
  std::string bin;
  bin.append(reinterpret_cast<const char *>(R.inside.data()), R.inside.size());
  for (cplx v : R.mu0)
    detail::put_complex(bin, v);
  for (double v : R.gamma_rec)
    detail::put_le(bin, v);
  for (double v : R.truth)
    detail::put_le(bin, v);
  const fs::path dp = detail::data_path_for(header);
  detail::write_file(dp, bin);
  json j = {{"type", "reconstruction_grid"},
            {"n", R.n},
            {"radius", R.radius},
            {"x_of_cell", "-radius + (i + 1/2) 2 radius / n, storage j*n + i"},
            {"has_truth", !R.truth.empty()},
            {"imag_residual_l2", R.imag_residual_l2},
            {"total_iterations", R.total_iterations},
            {"nonconverged_points", R.nonconverged},
            {"sections", {"inside: uint8[n*n]", "mu0: complex128[n*n]", "gamma_rec: float64[n*n]",
                          "truth: float64[n*n] (when has_truth)"}},
            {"data_file", dp.filename().string()}};
  if (R.l2_error_pct)
    j["l2_error_pct"] = *R.l2_error_pct;
  write_json(header, j);
}

inline ReconstructionGrid load_reconstruction(const fs::path &header) {
  const json j = read_json(header);
  if (j.value("type", "") != "reconstruction_grid")
    throw Error("load_reconstruction: not a reconstruction grid file");
  ReconstructionGrid R = make_raster(j.at("n").get<int>(), j.at("radius").get<double>());
  R.imag_residual_l2 = j.value("imag_residual_l2", 0.0);
  R.total_iterations = j.value("total_iterations", 0);
  R.nonconverged = j.value("nonconverged_points", 0);
  if (j.contains("l2_error_pct"))
    R.l2_error_pct = j.at("l2_error_pct").get<double>();
  detail::Reader rd(detail::read_file(header.parent_path() / j.at("data_file").get<std::string>()));
  for (auto &b : R.inside)
    b = rd.get<std::uint8_t>();
  for (auto &v : R.mu0)
    v = rd.get_complex();
  for (auto &v : R.gamma_rec)
    v = rd.get<double>();
  if (j.value("has_truth", false)) {
    R.truth.resize(R.gamma_rec.size());
    for (auto &v : R.truth)
      v = rd.get<double>();
  }
  if (!rd.done())
    throw Error("load_reconstruction: trailing bytes in data file");
  return R;
}

// ---------------------------------------------------------------------------
// Mesh dump

inline void save_mesh(const fs::path &header, const Mesh &m) {
  std::string bin;
  for (const auto &v : m.vertices) {
    detail::put_le(bin, v.x);
    detail::put_le(bin, v.y);
  }
  for (const auto &t : m.triangles)
    for (int i : t)
      detail::put_le(bin, static_cast<std::uint32_t>(i));
  json loops = json::array();
  for (const auto &l : m.boundary_loops)
    loops.push_back({{"radius", l.radius}, {"vertices", l.vertices}});
  const fs::path dp = detail::data_path_for(header);
  detail::write_file(dp, bin);
  write_json(header, {{"type", "mesh"},
                      {"num_vertices", m.num_vertices()},
                      {"num_triangles", m.num_triangles()},
                      {"refinement_level", m.refinement_level},
                      {"boundary_loops", loops},
                      {"sections", {"vertices: float64[num_vertices][2]", "triangles: uint32[num_triangles][3]"}},
                      {"data_file", dp.filename().string()}});
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ += (i ? "," : "") + header[i];
    out_ += "\n";
  }
  //! Appends a row; numbers are formatted with printf-style `fmt`.
  CsvWriter &row(const std::vector<std::string> &cells) {
    if (cells.size() != cols_)
      throw InvalidArgument("CsvWriter: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ += (i ? "," : "") + cells[i];
    out_ += "\n";
    return *this;
  }
  const std::string &str() const { return out_; }
  void save(const fs::path &p) const { detail::write_file(p, out_); }

private:
  std::size_t cols_;
  std::string out_;
};

inline std::string fmt(double v, const char *f = "%.6f") {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

// ---------------------------------------------------------------------------
// Hashing

inline std::string sha256_hex(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

inline std::string sha256_file(const fs::path &p) { return sha256_hex(detail::read_file(p)); }

// ---------------------------------------------------------------------------
// PNG (8-bit grayscale)

//! Encodes a row-major grayscale image (row 0 at the top).
inline std::string encode_png_gray(int width, int height, const std::vector<std::uint8_t> &pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != std::size_t(width) * height)
    throw InvalidArgument("encode_png_gray: bad image size");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(width);
  img.height = png_uint_32(height);
  img.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), width, nullptr))
    throw Error(std::string("encode_png_gray: ") + img.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), width, nullptr))
    throw Error(std::string("encode_png_gray: ") + img.message);
  out.resize(size);
  return out;
}

} // namespace eitbc::io
