#pragma once

#include <stdexcept>
#include <string>

namespace lassocsi {

/// Raised when an argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative search exhausts its budget. Carries the last
/// iterate so callers can inspect how far the search got.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double last_iterate)
      : std::runtime_error(what), last_iterate_(last_iterate) {}

  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

namespace detail {

inline void require(bool ok, const char* msg) {
  if (!ok) throw DomainError(msg);
}

}  // namespace detail
}  // namespace lassocsi
