// Copyright 2026 The trigen Authors.
// SPDX-License-Identifier: Apache-2.0

#include "trigen/error.hpp"

#include <sstream>

namespace trigen {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config-error";
    case ErrorKind::kDatasetNotFound: return "dataset-not-found";
    case ErrorKind::kDecode: return "decode-error";
    case ErrorKind::kStructure: return "structure-error";
    case ErrorKind::kInvalidTarget: return "invalid-target";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kInfeasibleRate: return "infeasible-rate";
    case ErrorKind::kPlanMismatch: return "plan-mismatch";
    case ErrorKind::kShape: return "shape-error";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
    case ErrorKind::kPairing: return "pairing-error";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kIncompleteSweep: return "incomplete-sweep";
    case ErrorKind::kInitialization: return "initialization-error";
    case ErrorKind::kIo: return "io-error";
    case ErrorKind::kRuntime: return "runtime-error";
  }
  return "unknown-error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidTarget:
      return 2;
    case ErrorKind::kDatasetNotFound:
    case ErrorKind::kDecode:
    case ErrorKind::kStructure:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kInfeasibleRate:
    case ErrorKind::kPlanMismatch:
      return 3;
    default:
      return 4;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

namespace {

std::string infeasible_message(double requested, double max_feasible) {
  std::ostringstream os;
  os << "poisoning rate " << requested
     << " needs more target-class images than available; maximum feasible rate is "
     << max_feasible;
  return os.str();
}

}  // namespace

InfeasibleRateError::InfeasibleRateError(double requested, double max_feasible)
    : Error(ErrorKind::kInfeasibleRate, infeasible_message(requested, max_feasible)),
      requested_(requested),
      max_feasible_(max_feasible) {}

}  // namespace trigen
