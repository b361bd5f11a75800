#pragma once

#include <stdexcept>
#include <string>

namespace clusterwalk {

// Error taxonomy. The CLI maps these onto exit codes:
//   ParameterError -> 2, CapacityError -> 3, InternalError -> 4.
// OutOfRegionError is a contract violation by the caller and maps to 4 as well.

class ParameterError : public std::runtime_error {
public:
  explicit ParameterError(const std::string& what) : std::runtime_error(what) {}
};

class CapacityError : public std::runtime_error {
public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

class OutOfRegionError : public std::runtime_error {
public:
  explicit OutOfRegionError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a "cannot happen" internal consistency check fails; seeing one
// of these is a bug signal, not a usage problem.
class InternalError : public std::runtime_error {
public:
  explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

inline void internal_check(bool ok, const char* msg) {
  if (!ok) throw InternalError(msg);
}

}
