#pragma once

#include <stdexcept>
#include <string>

namespace recluster {

/// Malformed input data: bad cluster maps, collinear regressors, CSV defects.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Structure admits too few reclusterings for the requested test level.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace recluster
