// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef TRIGEN_ERROR_HPP_
#define TRIGEN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace trigen {

enum class ErrorKind {
  kConfig,
  kDatasetNotFound,
  kDecode,
  kStructure,
  kInvalidTarget,
  kInsufficientData,
  kInfeasibleRate,
  kPlanMismatch,
  kShape,
  kUndefinedMetric,
  kPairing,
  kDivergence,
  kIncompleteSweep,
  kInitialization,
  kIo,
  kRuntime,
};

const char* to_string(ErrorKind kind);

// Process exit code for a failure of this kind: 2 config, 3 data, 4 runtime.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by make_poison_plan when the requested rate needs more target-class
// images than the split holds.
class InfeasibleRateError : public Error {
 public:
  InfeasibleRateError(double requested, double max_feasible);

  double requested() const noexcept { return requested_; }
  double max_feasible() const noexcept { return max_feasible_; }

 private:
  double requested_;
  double max_feasible_;
};

}  // namespace trigen

#endif  // TRIGEN_ERROR_HPP_
