#pragma once

#include <stdexcept>
#include <string>

namespace adl {

// Status codes shared by the C API and the CLI exit codes.
enum class Status : int {
  ok = 0,
  input_error = 2,
  infeasible = 3,
  data_quality = 4,
};

// Bad arguments, malformed files, out-of-range indices.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A requested allocation exceeds the available haircut capacity. Kept
// distinct from InputError so callers can surface it as its own exit code.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Strict-mode data rejection (unknown columns, bad rows).
class DataQualityError : public std::runtime_error {
 public:
  explicit DataQualityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adl
