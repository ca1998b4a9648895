#pragma once

#include <stdexcept>
#include <string>

namespace qacal {

// Bad or missing input (CLI exit code 2).
class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data too thin to estimate anything (CLI exit code 3).
class InsufficientDataError : public std::runtime_error {
 public:
  explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite likelihoods, diverged solvers and the like (CLI exit code 3).
class NumericalFailureError : public std::runtime_error {
 public:
  explicit NumericalFailureError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transport-level failure talking to an LLM provider.
class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qacal
