#ifndef PCMC_ERRORS_HPP
#define PCMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pcmc {

// Exit-code mapping used by the CLI: validation/schema errors exit 2,
// numeric failures exit 3, I/O failures exit 4.

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSystemError : NumericError {
  explicit SingularSystemError(const std::string& what) : NumericError(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pcmc

#endif
