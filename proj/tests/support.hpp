#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "mom/error.hpp"

namespace support {

inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mom_test_" + name);
}

/// Code of the mom::error raised by `f`; records a failure if none is raised.
inline mom::errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const mom::error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return mom::errc::io_error;
}

}  // namespace support
