#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geli {

// Stable machine-readable failure codes. The CLI prints them verbatim
// ("error: <CODE>: <message>") and maps them onto exit statuses, so the
// set below is part of the external contract.
enum class ErrorCode {
  ParseError,
  ValidationError,
  IoError,
  ConfigError,
  UnknownTrajectory,
  UnknownChannel,
  NotAgentTurn,
  NoAgentTurns,
  TooLong,
  Unparseable,
  BadKey,
  BadValue,
  EmptyAssignment,
  TrajectoryMismatch,
  OracleUnavailable,
  DegenerateCorpus,
  EmptySplit,
  EmptyCorpus,
  EmptyTrainingSet,
  BadK,
  InsufficientSupport,
  NonFiniteReward,
  BadSpec,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace geli
