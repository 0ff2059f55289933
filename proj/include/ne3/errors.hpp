#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ne3 {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state, action, or step index outside the model's range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed model, policy, or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyBufferError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class EpisodeOverError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped without reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(std::size_t member, const std::string& what)
      : Error("ensemble member " + std::to_string(member) + ": " + what), member_(member) {}
  std::size_t member() const noexcept { return member_; }

 private:
  std::size_t member_;
};

/// An operation's documented trigger condition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Version-space elimination removed every candidate.
class EliminationFailureError : public Error {
 public:
  EliminationFailureError(const std::string& what, std::vector<std::size_t> sizes)
      : Error(what), sizes_(std::move(sizes)) {}
  /// Surviving-set size after each completed round.
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

 private:
  std::vector<std::size_t> sizes_;
};

/// CSV inputs whose per-seed episode grids differ.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Experiment config that fails validation; path names the offending key.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace ne3
