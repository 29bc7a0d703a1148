#pragma once

#include <stdexcept>
#include <string>

namespace fsvrptw {

// Root of every error the library throws. Callers that only care about
// "something went wrong with this instance" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A customer admits no usable departure time on the grid.
class DiscretizationError : public Error {
 public:
  DiscretizationError(int customer, const std::string& what)
      : Error(what), customer_(customer) {}
  int customer() const { return customer_; }

 private:
  int customer_;
};

// The constraint system has no feasible assignment. `constraint` names the
// offending constraint (e.g. "coverage(3)" or "flow(2,41.5)").
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string constraint, const std::string& what)
      : Error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

class LimitExceededError : public Error {
 public:
  LimitExceededError(int size, int limit)
      : Error("model has " + std::to_string(size) +
              " active variables, exact limit is " + std::to_string(limit)),
        size_(size),
        limit_(limit) {}
  int size() const { return size_; }
  int limit() const { return limit_; }

 private:
  int size_;
  int limit_;
};

class EmptyModelError : public Error {
 public:
  EmptyModelError() : Error("sampler called on a model with no variables") {}
};

// Internal consistency failure. Seeing one of these means a bug, not bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsvrptw
