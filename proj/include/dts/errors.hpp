#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dts {

/// Invalid argument to a generator, solver or CLI option.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed instance or CSV input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance invariant violated; `task_id` is 0 when the violation is not
/// attached to a single task.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::size_t task_id = 0)
      : std::runtime_error(what), task_id_(task_id) {}

  std::size_t task_id() const noexcept { return task_id_; }

 private:
  std::size_t task_id_;
};

/// Argument outside the domain or range of an energy function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An equal-derivative window is longer than the energy domains can fill,
/// even with every task at its domain cap.
class DomainSaturation : public DomainError {
 public:
  DomainSaturation(const std::string& what, std::size_t task_id)
      : DomainError(what), task_id_(task_id) {}

  /// 1-based id of the first task whose capped domain binds.
  std::size_t task_id() const noexcept { return task_id_; }

 private:
  std::size_t task_id_;
};

}  // namespace dts
