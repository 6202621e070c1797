// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <stdexcept>
#include <string>

namespace starris {

class NonPositiveDefinite : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class InvalidConfig : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a per-user rate threshold is violated already at the point the
/// covariance step expands around, i.e. the surrogate problem has no feasible point.
class InfeasibleThresholds : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace starris
