#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tenexp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments, shapes, or configuration.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Non-convergence or non-finite values during computation.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what,
                          std::optional<std::size_t> iteration = std::nullopt)
      : Error(what), iteration_(iteration) {}

  std::optional<std::size_t> iteration() const noexcept { return iteration_; }

 private:
  std::optional<std::size_t> iteration_;
};

// Inputs with no usable content (all-zero matrices, constant tensors, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace tenexp
