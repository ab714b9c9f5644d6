#pragma once

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "mom/feature_io.hpp"
#include "mom/graph.hpp"

namespace mom {

/// Text format: "MOMG n k" then one "i j w" line per edge with i < j, w at 9 significant digits.
inline std::string encode_graph(const NeighborGraph& g) {
  std::string out = "MOMG " + std::to_string(g.n) + " " + std::to_string(g.k) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < g.n; ++i) {
    const auto nb = g.neighbors(i);
    const auto w = g.weights(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      if (nb[p] <= i) continue;
      std::snprintf(buf, sizeof buf, "%zu %u %.9g\n", i, nb[p], w[p]);
      out += buf;
    }
  }
  return out;
}

inline NeighborGraph decode_graph(const std::string& text, const std::string& source = "<memory>") {
  std::istringstream in(text);
  std::string magic;
  std::size_t n = 0, k = 0;
  if (!(in >> magic) || magic != "MOMG") throw error(errc::bad_magic, source + ": expected header 'MOMG n k'");
  if (!(in >> n >> k) || n == 0) throw error(errc::parse_error, source + ": malformed header");
  std::vector<Edge> edges;
  std::size_t line = 1;
  std::string rest;
  std::getline(in, rest);
  while (std::getline(in, rest)) {
    ++line;
    if (rest.empty()) continue;
    std::istringstream ls(rest);
    long long i = -1, j = -1;
    double w = 0;
    if (!(ls >> i >> j >> w) || i < 0 || j < 0 || i >= static_cast<long long>(n) || j >= static_cast<long long>(n) || i >= j)
      throw error(errc::parse_error, source + ": bad edge on line " + std::to_string(line));
    edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), w});
  }
  return graph_from_edges(n, k, std::move(edges));
}

inline void save_graph(const NeighborGraph& g, const std::filesystem::path& path) {
  detail::write_file(path, encode_graph(g));
}

inline NeighborGraph load_graph(const std::filesystem::path& path) {
  return decode_graph(detail::read_file(path), path.string());
}

}  // namespace mom
