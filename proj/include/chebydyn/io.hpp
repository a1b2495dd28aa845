#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "cml.hpp"
#include "density.hpp"
#include "errors.hpp"

namespace chebydyn {

inline constexpr const char* kFormatVersion = "chebydyn-output/1";

// Writes to a sibling temporary file, then renames over path. A failure leaves
// no partial output behind.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

// Shortest round-trip decimal for a double.
inline std::string format_real(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "bin_center,density\n";
  for (std::size_t i = 0; i < h.bins(); ++i) out << format_real(h.bin_center(i)) << ',' << format_real(h.density(i)) << '\n';
  return out.str();
}

inline std::string two_site_csv(const TwoSiteHistogram& h) {
  std::ostringstream out;
  out << "x1_center,x2_center,density\n";
  for (int i = 0; i < h.bins; ++i)
    for (int k = 0; k < h.bins; ++k)
      out << format_real(-1.0 + (i + 0.5) * h.bin_width()) << ',' << format_real(-1.0 + (k + 0.5) * h.bin_width())
          << ',' << format_real(h.density(i, k)) << '\n';
  return out.str();
}

inline std::string surface_csv(const CorrelationSurface& s) {
  std::ostringstream out;
  out << "c,a,snnc,tnnc,snnc_stderr,tnnc_stderr,ergodicity_flag\n";
  for (std::size_t i_c = 0; i_c < s.c_grid.size(); ++i_c) {
    for (std::size_t i_a = 0; i_a < s.a_grid.size(); ++i_a) {
      const SurfaceCell& cell = s.at(i_c, i_a);
      out << format_real(s.c_grid[i_c]) << ',' << format_real(s.a_grid[i_a]) << ',' << format_real(cell.value.snnc)
          << ',' << format_real(cell.value.tnnc) << ',' << format_real(cell.value.snnc_stderr) << ','
          << format_real(cell.value.tnnc_stderr) << ','
          << (cell.ergodicity_flag ? (*cell.ergodicity_flag ? "1" : "0") : "na") << '\n';
    }
  }
  return out.str();
}

inline std::string zeros_csv(const std::vector<ZeroCrossing>& zeros) {
  std::ostringstream out;
  out << "a,target,c_star,half_width,noise_limited\n";
  for (const auto& z : zeros)
    out << format_real(z.a) << ',' << to_string(z.target) << ',' << format_real(z.c_star) << ','
        << format_real(z.half_width) << ',' << (z.noise_limited ? 1 : 0) << '\n';
  return out.str();
}

inline void put_le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_le32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

// Header: K, J as little-endian int32; then K*J IEEE float32, row-major, little-endian.
inline std::string pattern_binary(const SpaceTimeField& field) {
  std::string out;
  out.reserve(8 + field.values.size() * 4);
  put_le32(out, static_cast<std::uint32_t>(field.rows));
  put_le32(out, static_cast<std::uint32_t>(field.cols));
  for (double v : field.values) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_le32(out, bits);
  }
  return out;
}

inline SpaceTimeField read_pattern_binary(const std::string& bytes) {
  if (bytes.size() < 8) throw std::runtime_error("pattern file too short");
  SpaceTimeField field;
  field.rows = static_cast<int>(get_le32(bytes, 0));
  field.cols = static_cast<int>(get_le32(bytes, 4));
  std::size_t n = static_cast<std::size_t>(field.rows) * field.cols;
  if (bytes.size() != 8 + 4 * n) throw std::runtime_error("pattern file size does not match header");
  field.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = get_le32(bytes, 8 + 4 * i);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    field.values[i] = f;
  }
  return field;
}

inline std::string pattern_csv(const SpaceTimeField& field) {
  std::ostringstream out;
  for (int n = 0; n < field.rows; ++n) {
    for (int i = 0; i < field.cols; ++i) {
      if (i) out << ',';
      out << format_real(static_cast<float>(field.at(n, i)));
    }
    out << '\n';
  }
  return out.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace chebydyn
