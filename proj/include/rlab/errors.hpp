#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rlab {

/// Raised when user-supplied parameters violate a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation detects that its own numerical guarantees broke.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ValidationError(message) when `condition` is false. The message is
/// only materialized on failure.
template <typename Message>
void require(bool condition, Message&& message) {
  if (!condition) throw ValidationError(std::string(std::forward<Message>(message)));
}

}  // namespace rlab
