#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ofb {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class AsymmetricInputError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, long rank, long required)
      : Error(what + " (numerical rank " + std::to_string(rank) + " < " +
              std::to_string(required) + ")"),
        rank_(rank),
        required_(required) {}

  long rank() const noexcept { return rank_; }
  long required() const noexcept { return required_; }

 private:
  long rank_;
  long required_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what + " at k=" + std::to_string(step)), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, long iterations)
      : Error(what + " after " + std::to_string(iterations) + " iterations"),
        iterations_(iterations) {}

  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class InadmissiblePolicyError : public Error {
 public:
  using Error::Error;
};

class ObservabilityError : public Error {
 public:
  using Error::Error;
};

class StabilizabilityError : public Error {
 public:
  using Error::Error;
};

class WindowTooShortError : public Error {
 public:
  using Error::Error;
};

class BadInitializerError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Rank target not reached during data collection. Carries the numerical rank
/// of the regressor stack after each sample from the point where it could
/// first be full.
class InsufficientExcitationError : public Error {
 public:
  InsufficientExcitationError(const std::string& what, long required,
                              std::vector<long> rank_profile)
      : Error(what), required_(required), profile_(std::move(rank_profile)) {}

  long required() const noexcept { return required_; }
  const std::vector<long>& rank_profile() const noexcept { return profile_; }
  long achieved() const noexcept { return profile_.empty() ? 0 : profile_.back(); }

 private:
  long required_;
  std::vector<long> profile_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ofb
