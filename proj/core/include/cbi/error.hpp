#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cbi {

enum class ErrorKind {
  Domain,
  InvalidArgument,
  QuadratureFailure,
  InconclusiveQuadrature,
  RootBracketFailure,
  IntegrationFailure,
  BisectionFailure,
  SingularRoot,
  Unclassified,
  UnsupportedKind,
  SchemeMismatch,
  StepInstability,
  InfiniteActivity,
  EmptyEnsemble,
  HypothesisMismatch,
};

const char* to_string(ErrorKind k);

// Every failure in the library is reported through this type. `trace` holds
// whatever partial numbers were available (partial sums, last step, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::vector<double> trace = {})
      : std::runtime_error(what), kind_(kind), trace_(std::move(trace)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  ErrorKind kind_;
  std::vector<double> trace_;
};

}  // namespace cbi
