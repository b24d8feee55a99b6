#pragma once

#include <stdexcept>
#include <string>

namespace relufim {

enum class ErrorKind {
  InvalidArgument,  // malformed input (dimensions, ranges)
  Domain,           // mathematically out of domain (|z| > 1, d <= 4, ...)
  Capacity,         // refused because of the dense-storage cap
  NotConverged,
  Mismatch,         // objects from different runs
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace relufim
