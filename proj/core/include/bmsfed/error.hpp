#pragma once

#include <stdexcept>
#include <string>

namespace bmsfed {

/// Shape disagreement between matrices or parameter tensors.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An argument outside its documented domain (negative std, budget > n, ...).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// API misuse: stale cache, candidate already selected, and the like.
class UsageError : public std::logic_error {
 public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

/// A label whose class has no prototype in the consulted set.
class CoverageError : public std::runtime_error {
 public:
  explicit CoverageError(const std::string& what) : std::runtime_error(what) {}
};

/// A modality was requested that the client's mask does not provide.
class ModalityError : public std::runtime_error {
 public:
  explicit ModalityError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite value produced where a finite one is required.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Config text rejected: unknown key, bad type, violated constraint.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Selection budget cannot be met by the eligible client population.
class InfeasibleSelectionError : public std::runtime_error {
 public:
  explicit InfeasibleSelectionError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset/partition construction failed (retry bound, bad file, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bmsfed
