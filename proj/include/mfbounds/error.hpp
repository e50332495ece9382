#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfb {

enum class ErrorKind {
  Argument,
  Config,
  Parse,
  Binding,
  Evaluation,
  Factorization,
  TrainingAbort,
  Infeasible,
  SizeCap,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Syntax error in a payoff expression; `offset` is the 0-based character position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::Parse, what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class TrainingAbort : public Error {
 public:
  TrainingAbort(const std::string& what, long iteration)
      : Error(ErrorKind::TrainingAbort, what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::Argument, what);
}

/// Process exit codes used by the command-line front end.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Argument:
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Parse:
    case ErrorKind::Binding:
      return 3;
    case ErrorKind::TrainingAbort:
    case ErrorKind::Evaluation:
      return 4;
    case ErrorKind::Infeasible:
      return 5;
    case ErrorKind::SizeCap:
      return 6;
    case ErrorKind::Factorization:
      return 2;
  }
  return 1;
}

}  // namespace mfb
