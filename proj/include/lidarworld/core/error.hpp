// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lidarworld {

/// Precondition violated by the caller. The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejective sampling ran out of attempts before filling every track.
class ExhaustionError : public std::runtime_error {
 public:
  ExhaustionError(const std::string& what, std::size_t accepted, std::size_t requested)
      : std::runtime_error(what), accepted_(accepted), requested_(requested) {}

  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t accepted_;
  std::size_t requested_;
};

/// Registration failed to produce a well-conditioned solve.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iteration, double min_eigenvalue)
      : std::runtime_error(what), iteration_(iteration), min_eigenvalue_(min_eigenvalue) {}

  int iteration() const noexcept { return iteration_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  int iteration_;
  double min_eigenvalue_;
};

}  // namespace lidarworld
