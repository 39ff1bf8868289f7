#pragma once

#include <stdexcept>
#include <string>

namespace gi0nn {

// Malformed or unreadable files: rasters, models, configs, sample sets.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gi0nn
