#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace srx {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dimensionality violation in a tensor operation.
struct ShapeError : Error {
  using Error::Error;
};

// NaN/Inf produced by an operation, or fed to the optimizer.
struct NumericError : Error {
  using Error::Error;
};

// Malformed dataset, manifest, checkpoint or config input.
struct DataError : Error {
  using Error::Error;
};

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Process-wide verbosity, initialized from the SRX_LOG env var
// (quiet|info|debug).
LogLevel log_level();
void set_log_level(LogLevel level);

void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace srx
