#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "mom/error.hpp"
#include "mom/features.hpp"

namespace mom {

// Binary layout: "MOM1", u32 n, u32 d (little-endian), then n*d float32 LE, row-major.

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io_error, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw error(errc::io_error, "short write to " + path.string());
}

}  // namespace detail

inline std::string encode_features(const FeatureSet& features) {
  std::string buf = "MOM1";
  buf.reserve(12 + 4 * features.data.size());
  detail::put_u32(buf, static_cast<std::uint32_t>(features.n));
  detail::put_u32(buf, static_cast<std::uint32_t>(features.d));
  for (float v : features.data) detail::put_f32(buf, v);
  return buf;
}

/// Parses a feature blob. `source` names the origin in error messages.
inline FeatureSet decode_features(const std::string& bytes, const std::string& source = "<memory>") {
  if (bytes.size() < 4 || bytes.compare(0, 4, "MOM1") != 0)
    throw error(errc::bad_magic, source + ": expected magic MOM1 at byte 0");
  if (bytes.size() < 12)
    throw error(errc::truncated_file, source + ": header ends at byte " + std::to_string(bytes.size()));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t n = detail::get_u32(p + 4);
  const std::uint32_t d = detail::get_u32(p + 8);
  if (n == 0 || d == 0) throw error(errc::bad_spec, source + ": header declares n=" + std::to_string(n) + " d=" + std::to_string(d));
  const std::uint64_t expected = 12 + 4ull * n * d;
  if (bytes.size() < expected)
    throw error(errc::truncated_file, source + ": payload ends at byte " + std::to_string(bytes.size()) +
                                          ", header requires " + std::to_string(expected));
  if (bytes.size() > expected)
    throw error(errc::dim_mismatch, source + ": trailing bytes after offset " + std::to_string(expected));
  FeatureSet out(n, d);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = detail::get_f32(p + 12 + 4 * i);
  return out;
}

inline void save_features(const FeatureSet& features, const std::filesystem::path& path) {
  features.check();
  detail::write_file(path, encode_features(features));
}

inline FeatureSet load_features(const std::filesystem::path& path) {
  return decode_features(detail::read_file(path), path.string());
}

/// Labels sidecar: one decimal integer per line, exactly n lines.
inline void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::string text;
  for (int l : labels) text += std::to_string(l) + "\n";
  detail::write_file(path, text);
}

inline std::vector<int> load_labels(const std::filesystem::path& path, std::size_t expected_n) {
  std::istringstream in(detail::read_file(path));
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      labels.push_back(std::stoi(line, &used));
      if (used != line.size() && line.find_first_not_of(" \t\r", used) != std::string::npos)
        throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw error(errc::parse_error, path.string() + ": line " + std::to_string(line_no) + " is not an integer");
    }
  }
  if (labels.size() != expected_n)
    throw error(errc::dim_mismatch, path.string() + ": " + std::to_string(labels.size()) +
                                        " labels for " + std::to_string(expected_n) + " items");
  return labels;
}

}  // namespace mom
