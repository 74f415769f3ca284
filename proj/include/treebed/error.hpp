#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treebed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a graph has no path between two vertices.
class DisconnectedGraph : public Error {
 public:
  DisconnectedGraph(std::size_t from, std::size_t to)
      : Error("graph is disconnected: no path between vertex " + std::to_string(from) +
              " and vertex " + std::to_string(to)),
        from_(from),
        to_(to) {}

  std::size_t from() const noexcept { return from_; }
  std::size_t to() const noexcept { return to_; }

 private:
  std::size_t from_;
  std::size_t to_;
};

/// Malformed input text; carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace treebed
