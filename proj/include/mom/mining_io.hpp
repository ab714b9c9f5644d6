#pragma once

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mom/anchors.hpp"
#include "mom/feature_io.hpp"
#include "mom/mining.hpp"

namespace mom {

namespace detail {

inline std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void append_entries(std::string& out, const std::vector<PoolEntry>& entries) {
  out += '[';
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ',';
    out += '[' + std::to_string(entries[i].id) + ',' + fmt_g9(entries[i].weight) + ']';
  }
  out += ']';
}

}  // namespace detail

/// JSON lines, one {"anchor", "positives", "negatives"} object per anchor.
inline std::string encode_pools(std::span<const AnchorPools> pools) {
  std::string out;
  for (const auto& p : pools) {
    out += "{\"anchor\":" + std::to_string(p.anchor) + ",\"positives\":";
    detail::append_entries(out, p.positives);
    out += ",\"negatives\":";
    detail::append_entries(out, p.negatives);
    out += "}\n";
  }
  return out;
}

inline std::vector<AnchorPools> decode_pools(const std::string& text, const std::string& source = "<memory>") {
  std::vector<AnchorPools> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AnchorPools p;
      p.anchor = j.at("anchor").get<std::uint32_t>();
      for (const auto& e : j.at("positives")) p.positives.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<double>()});
      for (const auto& e : j.at("negatives")) p.negatives.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<double>()});
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& ex) {
      throw error(errc::parse_error, source + ": line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

inline void save_pools(std::span<const AnchorPools> pools, const std::filesystem::path& path) {
  detail::write_file(path, encode_pools(pools));
}

inline std::vector<AnchorPools> load_pools(const std::filesystem::path& path) {
  return decode_pools(detail::read_file(path), path.string());
}

/// JSON lines {"r", "p", "n", "w"}.
inline std::string encode_tuples(std::span<const TrainingTuple> tuples) {
  std::string out;
  for (const auto& t : tuples)
    out += "{\"r\":" + std::to_string(t.anchor) + ",\"p\":" + std::to_string(t.positive) +
           ",\"n\":" + std::to_string(t.negative) + ",\"w\":" + detail::fmt_g9(t.weight) + "}\n";
  return out;
}

inline std::string encode_anchors(const AnchorSet& anchors) {
  std::string out;
  for (std::size_t i = 0; i < anchors.size(); ++i)
    out += std::to_string(anchors.anchor_ids[i]) + " " + detail::fmt_g9(anchors.pi_values[i]) + "\n";
  return out;
}

inline AnchorSet decode_anchors(const std::string& text, const std::string& source = "<memory>") {
  AnchorSet out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long id = -1;
    double pi = 0.0;
    if (!(ls >> id >> pi) || id < 0) throw error(errc::parse_error, source + ": bad anchor on line " + std::to_string(line_no));
    out.anchor_ids.push_back(static_cast<std::uint32_t>(id));
    out.pi_values.push_back(pi);
  }
  out.maxima_found = out.anchor_ids.size();
  return out;
}

/// FNV-1a over anchor ids and pool contents, for cheap change detection.
inline std::uint64_t pool_hash(std::span<const AnchorPools> pools) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : pools) {
    mix(p.anchor);
    mix(p.positives.size());
    for (const auto& e : p.positives) mix(e.id);
    mix(p.negatives.size());
    for (const auto& e : p.negatives) mix(e.id);
  }
  return h;
}

}  // namespace mom
