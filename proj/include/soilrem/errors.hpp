#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soilrem {

enum class ErrorCode {
  kDomain,         // non-finite or otherwise inadmissible argument
  kRange,          // argument outside the supported interval
  kConfiguration,  // invalid model, sensor, or scenario configuration
  kParse,          // malformed configuration file
  kInstability,    // explicit integration blew up
  kIllConditioned, // innovation covariance numerically singular
  kUnobservable,   // sensor candidates cannot reach full rank
  kState,          // operation invoked in the wrong state
  kIo,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InstabilityError : public Error {
 public:
  InstabilityError(std::size_t node, int substep, const std::string& message)
      : Error(ErrorCode::kInstability, message), node_(node), substep_(substep) {}

  /// Zero-based node and substep at which the blow-up was detected.
  std::size_t node() const noexcept { return node_; }
  int substep() const noexcept { return substep_; }

 private:
  std::size_t node_;
  int substep_;
};

class UnobservableError : public Error {
 public:
  UnobservableError(std::size_t achieved_rank, std::size_t target_rank, const std::string& message)
      : Error(ErrorCode::kUnobservable, message), achieved_(achieved_rank), target_(target_rank) {}

  std::size_t achieved_rank() const noexcept { return achieved_; }
  std::size_t target_rank() const noexcept { return target_; }

 private:
  std::size_t achieved_;
  std::size_t target_;
};

}  // namespace soilrem
