#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mom {

enum class errc {
  zero_vector,
  rank_deficient,
  bad_spec,
  bad_magic,
  truncated_file,
  dim_mismatch,
  k_too_large,
  too_large,
  labels_missing,
  all_pools_empty,
  degenerate_output,
  diverged,
  degenerate_labels,
  length_mismatch,
  io_error,
  parse_error,
  bad_config,
};

inline std::string_view to_string(errc code) {
  switch (code) {
    case errc::zero_vector: return "ZeroVector";
    case errc::rank_deficient: return "RankDeficient";
    case errc::bad_spec: return "BadSpec";
    case errc::bad_magic: return "BadMagic";
    case errc::truncated_file: return "TruncatedFile";
    case errc::dim_mismatch: return "DimMismatch";
    case errc::k_too_large: return "KTooLarge";
    case errc::too_large: return "TooLarge";
    case errc::labels_missing: return "LabelsMissing";
    case errc::all_pools_empty: return "AllPoolsEmpty";
    case errc::degenerate_output: return "DegenerateOutput";
    case errc::diverged: return "Diverged";
    case errc::degenerate_labels: return "DegenerateLabels";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::io_error: return "IoError";
    case errc::parse_error: return "ParseError";
    case errc::bad_config: return "BadConfig";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error kind.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace mom
